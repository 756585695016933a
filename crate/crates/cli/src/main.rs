use std::path::PathBuf;
use std::process::ExitCode;

use bertini_sieve::config::{self, ErrorKind, Horizon};
use bertini_sieve::{run_command, Command, CommandError, Options};
use clap::Parser;

const EXIT_USAGE: u8 = 1;
const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Worker threads for the parallel sweeps; unset means one per core.
const WORKERS_ENV: &str = "BERTINI_SIEVE_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "bertini-sieve", version, about = "Closed-point sieve experiments over finite fields")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    r: Option<usize>,
    /// A degree bound, or `bezout`.
    #[arg(long)]
    horizon: Option<String>,
    /// `LO..HI` or a single degree.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "BITS")]
    exhaustive_cap: Option<u32>,
    /// Also write a gnuplot script next to density.csv.
    #[arg(long)]
    gnuplot_script: bool,
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once("..") {
        Some((lo, hi)) => Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)).filter(|(l, h)| l <= h),
        None => s.trim().parse().ok().map(|d| (d, d)),
    }
}

fn apply_overrides(cli: &Cli, cfg: &mut config::ExperimentConfig) -> Result<(), String> {
    let run = &mut cfg.run;
    if let Some(v) = cli.seed {
        run.seed = v;
    }
    if let Some(v) = cli.trials {
        run.trials = v;
    }
    if let Some(v) = cli.r {
        run.r = v;
    }
    if let Some(v) = cli.exhaustive_cap {
        run.exhaustive_cap = v;
    }
    if let Some(h) = &cli.horizon {
        run.horizon = Some(match h.as_str() {
            "bezout" => Horizon::Bezout,
            s => Horizon::Fixed(s.parse().map_err(|_| format!("--horizon: expected a number or `bezout`, got `{s}`"))?),
        });
    }
    if let Some(d) = &cli.d {
        run.d = parse_range(d).ok_or_else(|| format!("--d: expected LO..HI, got `{d}`"))?;
    }
    Ok(())
}

fn exit_for(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Syntax => EXIT_USAGE,
        ErrorKind::Hypothesis => EXIT_HYPOTHESIS,
        ErrorKind::Budget => EXIT_BUDGET,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(w) = std::env::var(WORKERS_ENV) {
        match w.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {WORKERS_ENV} must be a positive integer, got `{w}`");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    let path = cli.config.display().to_string();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {path}: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let (mut cfg, setup) = match config::load(&text) {
        Ok(x) => x,
        Err(errs) => {
            for e in &errs {
                eprintln!("{path}:{}:{}: error: {}", e.line, e.column, e.message);
            }
            return ExitCode::from(errs.iter().map(|e| exit_for(e.kind)).max().unwrap_or(EXIT_USAGE));
        }
    };
    if let Err(msg) = apply_overrides(&cli, &mut cfg) {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let opts = Options { gnuplot: cli.gnuplot_script };
    let report = match run_command(cli.command, &cfg, &setup, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.command.name());
            return ExitCode::from(match &e {
                CommandError::Usage(_) => EXIT_USAGE,
                CommandError::Core(c) => exit_for(config::classify(c)),
            });
        }
    };
    match &cli.out {
        Some(dir) => match report.write_to(dir) {
            Ok(files) => {
                print!("{}", report.render());
                println!("wrote {} under {}", files.join(", "), dir.display());
            }
            Err(e) => {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return ExitCode::from(EXIT_USAGE);
            }
        },
        None => {
            print!("{}", report.render());
            for (name, body) in &report.files {
                print!("\n# {name}\n{body}");
            }
        }
    }
    if report.failed {
        ExitCode::from(EXIT_VERIFY)
    } else {
        ExitCode::SUCCESS
    }
}
