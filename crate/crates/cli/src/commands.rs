//! One function per command. Each returns a [`RunReport`]: CSV files under
//! fixed names, a plain-text summary and warnings.

use std::fmt::Write as _;
use std::path::Path;

use bertini_core::density::{
    self, classify_theorem_case, exact_from_map, find_smooth, predicted_density, sampled_from_map, tail_bound,
    truncated_density_formula, DensityReport, DensityRow, ExactDensity, ExactMode, FindOutcome, Instance, SearchOrder,
    Witness,
};
use bertini_core::geom::{self, SchemeDesc, StratumTable};
use bertini_core::linalg::{self, jet_cardinality, jet_space, stabilization_c};
use bertini_core::Error as CoreError;
use num_traits::ToPrimitive;

use crate::config::{ExperimentConfig, Horizon, Method, Order, Setup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Points,
    Strata,
    Zeta,
    CStab,
    Verify,
    Density,
    Predict,
    Find,
    SncCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Points => "points",
            Command::Strata => "strata",
            Command::Zeta => "zeta",
            Command::CStab => "c-stab",
            Command::Verify => "verify",
            Command::Density => "density",
            Command::Predict => "predict",
            Command::Find => "find",
            Command::SncCheck => "snc-check",
        }
    }

    /// Stem of the CSV and report files.
    pub fn stem(self) -> &'static str {
        match self {
            Command::CStab => "c_stab",
            Command::SncCheck => "snc",
            other => other.name(),
        }
    }
}

#[derive(Debug)]
pub enum CommandError {
    Core(CoreError),
    Usage(String),
}

impl From<CoreError> for CommandError {
    fn from(e: CoreError) -> Self {
        CommandError::Core(e)
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Core(e) => write!(f, "{e}"),
            CommandError::Usage(s) => f.write_str(s),
        }
    }
}

type Res<T> = Result<T, CommandError>;

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub gnuplot: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: Command,
    pub digest: String,
    /// Canonical config text, with command-line overrides applied.
    pub echo: String,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub summary: String,
    pub warnings: Vec<String>,
    /// A check of `verify` or `snc-check` failed.
    pub failed: bool,
}

impl RunReport {
    fn new(command: Command, cfg: &ExperimentConfig) -> RunReport {
        RunReport {
            command,
            digest: cfg.digest(),
            echo: cfg.serialize(),
            files: vec![],
            summary: String::new(),
            warnings: vec![],
            failed: false,
        }
    }

    pub fn csv(&self) -> &str {
        self.files.first().map_or("", |f| f.1.as_str())
    }

    /// Summary, warnings and the config echo. Re-running the echo reproduces
    /// the report byte for byte.
    pub fn render(&self) -> String {
        let mut o = format!("bertini-sieve {}\nconfig digest: {}\n\n{}", self.command.name(), self.digest, self.summary);
        if !self.summary.ends_with('\n') {
            o.push('\n');
        }
        for w in &self.warnings {
            let _ = writeln!(o, "warning: {w}");
        }
        let _ = write!(o, "\n# config\n{}", self.echo);
        o
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
            written.push(name.clone());
        }
        let report = format!("{}.report.txt", self.command.stem());
        std::fs::write(dir.join(&report), self.render())?;
        written.push(report);
        Ok(written)
    }
}

/// Degree bound for strata, zeta products and the normal-crossings check.
pub fn count_bound(cfg: &ExperimentConfig) -> usize {
    cfg.run.zeta_cutoff.max(cfg.run.r.saturating_sub(1)).max(1)
}

pub fn run_command(cmd: Command, cfg: &ExperimentConfig, setup: &Setup, opts: Options) -> Res<RunReport> {
    let inst = setup.instance()?;
    let mut rep = RunReport::new(cmd, cfg);
    match cmd {
        Command::Points => points(cfg, setup, &inst, &mut rep)?,
        Command::Strata => strata_cmd(cfg, &inst, &mut rep)?,
        Command::Zeta => zeta(cfg, setup, &inst, &mut rep)?,
        Command::CStab => c_stab(cfg, &inst, &mut rep)?,
        Command::Verify => verify(cfg, &inst, &mut rep)?,
        Command::Density => density_cmd(cfg, setup, &inst, &mut rep, opts)?,
        Command::Predict => predict(cfg, &inst, &mut rep)?,
        Command::Find => find(cfg, setup, &inst, &mut rep)?,
        Command::SncCheck => snc(cfg, setup, &inst, &mut rep)?,
    }
    Ok(rep)
}

fn file(rep: &mut RunReport, suffix: &str, body: String) {
    let name = format!("{}{suffix}.csv", rep.command.stem());
    rep.files.push((name, body));
}

fn stratified(cfg: &ExperimentConfig, inst: &Instance, rep: &mut RunReport) -> Res<StratumTable> {
    let mut st = inst.stratify(count_bound(cfg))?;
    for (&e, &dim) in &cfg.dim_override {
        if e > st.m {
            return Err(CommandError::Usage(format!("dim_override.{e}: strata run from 0 to m = {}", st.m)));
        }
        st.set_dim(e, dim);
    }
    let guessed: Vec<String> = (0..=st.m)
        .filter(|&e| st.dims[e].is_some() && !st.overridden[e])
        .map(|e| format!("V_{e}"))
        .collect();
    if !guessed.is_empty() {
        rep.warnings.push(format!(
            "dimension of {} estimated from closed-point counts up to degree {} (heuristic; set [Z] dim_override.E to fix it)",
            guessed.join(", "),
            st.bound
        ));
    }
    Ok(st)
}

fn points(cfg: &ExperimentConfig, setup: &Setup, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let t = inst.tower;
    let r = cfg.run.r.max(2);
    let pts = geom::closed_points(t, &inst.u, r, setup.budget)?;
    let mut csv = String::from("set,degree,point,on_Z,e\n");
    let mut per_degree = vec![0usize; r - 1];
    for p in &pts {
        per_degree[p.degree - 1] += 1;
        let on_z = !inst.z.is_empty() && geom::on_zero_set(t, &inst.z, p)?;
        let e = if on_z { geom::embedding_dimension(t, &inst.z, &inst.u, p)?.to_string() } else { String::new() };
        let _ = writeln!(csv, "U,{},{},{on_z},{e}", p.degree, p.to_text(t));
    }
    for p in &inst.y {
        let _ = writeln!(csv, "Y,{},{},false,", p.degree, p.to_text(t));
    }
    file(rep, "", csv);
    let _ = writeln!(rep.summary, "closed points of U of degree < {r}: {}", pts.len());
    for (g, c) in per_degree.iter().enumerate() {
        let n = geom::rational_count(t, &inst.u, g + 1, setup.budget)?;
        let _ = writeln!(rep.summary, "  degree {}: {c} closed, {n} rational over F_q^{}", g + 1, g + 1);
    }
    if !inst.y.is_empty() {
        let _ = writeln!(rep.summary, "Y: {} points (removed from U)", inst.y.len());
    }
    Ok(())
}

fn strata_cmd(cfg: &ExperimentConfig, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let st = stratified(cfg, inst, rep)?;
    let mut csv = String::from("stratum,degree,closed_points\n");
    for g in 1..=st.bound {
        let _ = writeln!(csv, "off_V,{g},{}", st.off_v_counts[g - 1]);
    }
    for e in 0..=st.m {
        for g in 1..=st.bound {
            let _ = writeln!(csv, "V_{e},{g},{}", st.closed_count(e, g));
        }
    }
    file(rep, "", csv);
    let _ = writeln!(rep.summary, "m = {}, closed points up to degree {}", st.m, st.bound);
    for e in 0..=st.m {
        let total: u64 = (1..=st.bound).map(|g| st.closed_count(e, g)).sum();
        let dim = match st.dims[e] {
            Some(d) if st.overridden[e] => format!("{d} (override)"),
            Some(d) => format!("{d} (estimate)"),
            None => "empty".into(),
        };
        let _ = writeln!(rep.summary, "  V_{e}: {total} points, dim {dim}");
    }
    let ev = classify_theorem_case(&st);
    let _ = writeln!(rep.summary, "case ({}): {}", ev.case, ev.reason);
    Ok(())
}

fn v_scheme(inst: &Instance) -> SchemeDesc {
    let mut v = inst.u.clone();
    v.closed_eqs.extend(inst.z.iter().cloned());
    v.expected_dim = None;
    v
}

fn zeta(cfg: &ExperimentConfig, setup: &Setup, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let m = inst.m();
    let s = (m + 1) as u32;
    let cutoff = count_bound(cfg) + 1;
    let mut csv = String::from("scheme,s,cutoff,value,value_float,value_from_counts,closed_counts,rational_counts\n");
    let mut schemes = vec![("U", inst.u.clone())];
    if !inst.z.is_empty() {
        schemes.push(("V", v_scheme(inst)));
    }
    for (name, sch) in schemes {
        let zd = geom::zeta_partial(inst.tower, &sch, s, cutoff, setup.budget)?;
        let join = |v: &[u64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
        let _ = writeln!(
            csv,
            "{name},{s},{cutoff},{},{:.9},{},{},{}",
            zd.value,
            zd.value_f64(),
            zd.value_from_counts,
            join(&zd.closed_counts),
            join(&zd.rational_counts)
        );
        let agree = if zd.value == zd.value_from_counts { "agree" } else { "DISAGREE" };
        let _ = writeln!(
            rep.summary,
            "zeta_{name}({s}) over degrees < {cutoff}: {} = {:.6} (orbit and Möbius paths {agree})",
            zd.value,
            zd.value_f64()
        );
        rep.failed |= zd.value != zd.value_from_counts;
    }
    file(rep, "", csv);
    Ok(())
}

fn stab(cfg: &ExperimentConfig, inst: &Instance) -> Res<linalg::Stabilization> {
    let maxdeg = inst.z.iter().map(|g| g.degree()).max().unwrap_or(0);
    let d_max = cfg.run.d.1.max(maxdeg + 4);
    Ok(stabilization_c(&inst.z, inst.u.n, d_max, inst.tower.base())?)
}

fn c_stab(cfg: &ExperimentConfig, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let st = stab(cfg, inst)?;
    let mut csv = String::from("d,dim_I_d,dim_S1_I_prev,stable\n");
    for &(d, dim, lin) in &st.table {
        let _ = writeln!(csv, "{d},{dim},{lin},{}", d > 0 && dim == lin);
    }
    file(rep, "", csv);
    let last = st.table.last().map_or(0, |t| t.0);
    let _ = writeln!(rep.summary, "c = {} (S_1·I_d = I_(d+1) for {} ≤ d < {last})", st.c, st.c);
    Ok(())
}

fn verify(cfg: &ExperimentConfig, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let t = inst.tower;
    let q = t.q();
    let mut csv = String::from("check,item,expected,observed,status\n");
    let mut tally = [[0usize; 3]; 3]; // [check][pass, fail, skip]
    let mut row = |csv: &mut String, check: usize, item: String, exp: String, obs: String, status: usize| {
        tally[check][status] += 1;
        let names = ["surjectivity", "jet-cardinality", "exact-vs-formula"];
        let _ = writeln!(csv, "{},{item},{exp},{obs},{}", names[check], ["PASS", "FAIL", "SKIP"][status]);
    };

    // evaluation onto H^0(Y) once d ≥ c + dim H^0(Y)
    let c = stab(cfg, inst)?.c;
    let h0: usize = inst.y.iter().map(|p| p.degree).sum();
    for d in c + h0..=c + h0 + 2 {
        let map = linalg::eval_map(t, inst.slice(d), &inst.y, &[], &inst.z)?;
        let ok = map.is_surjective();
        row(&mut csv, 0, format!("d={d}"), map.target_dim().to_string(), map.rank.to_string(), usize::from(!ok));
    }

    // jet spaces against q^((m+1)deg P) and q^((m-e)deg P)
    let r = cfg.run.r.max(2);
    for p in geom::closed_points(t, &inst.u, r, inst.budget)? {
        match jet_space(t, &inst.u, &inst.z, &p) {
            Ok(js) => {
                let rank = js.m + 1 - js.e.map_or(0, |e| e + 1);
                let exp = jet_cardinality(q, p.degree, rank);
                let ok = js.cardinality == exp;
                row(&mut csv, 1, p.to_text(t), exp.to_string(), js.cardinality.to_string(), usize::from(!ok));
            }
            Err(CoreError::NonSaturated { observed, expected, .. }) => {
                row(&mut csv, 1, p.to_text(t), expected, observed, 1);
                rep.warnings.push(format!("jet-space guard tripped at {p}: generators may not be saturated"));
            }
            Err(e) => return Err(e.into()),
        }
    }

    // exhaustive truncated density against the product formula
    let st = stratified(cfg, inst, rep)?;
    let cap = cfg.run.exhaustive_cap;
    for d in cfg.run.d.0..=cfg.run.d.1 {
        let map = inst.eval_map(d, r)?;
        if !map.is_surjective() {
            row(&mut csv, 2, format!("d={d}"), String::new(), "map not onto".into(), 2);
            continue;
        }
        match exact_from_map(inst, &map, r, ExactMode::Exhaustive { cap_bits: cap }) {
            Ok(x) => {
                let f = truncated_density_formula(&st, &inst.y, &inst.t, r)?;
                let ok = x.value == f;
                row(&mut csv, 2, format!("d={d}"), f.to_string(), x.value.to_string(), usize::from(!ok));
            }
            Err(CoreError::CapExceeded { bits, .. }) => {
                row(&mut csv, 2, format!("d={d}"), String::new(), format!("{bits:.1} bits over cap"), 2)
            }
            Err(e) => return Err(e.into()),
        }
    }
    file(rep, "", csv);
    let names = ["surjectivity past c + dim H^0(Y)", "jet-space cardinalities", "exhaustive density = formula"];
    for (i, [pass, fail, skip]) in tally.iter().enumerate() {
        let status = match (fail, pass) {
            (0, 0) => "SKIP",
            (0, _) => "PASS",
            _ => "FAIL",
        };
        let _ = writeln!(rep.summary, "{status} {}: {pass} passed, {fail} failed, {skip} skipped", names[i]);
        rep.failed |= *fail > 0;
    }
    if tally[2][0] + tally[2][1] == 0 {
        rep.warnings.push("no degree in the run range allowed an exhaustive comparison".into());
    }
    Ok(())
}

fn exact_row(inst: &Instance, map: &linalg::EvalMap, r: usize, cap: u32) -> Result<ExactDensity, CoreError> {
    match exact_from_map(inst, map, r, ExactMode::Exhaustive { cap_bits: cap }) {
        Err(CoreError::CapExceeded { .. }) => exact_from_map(inst, map, r, ExactMode::FiberCount),
        other => other,
    }
}

fn density_cmd(cfg: &ExperimentConfig, setup: &Setup, inst: &Instance, rep: &mut RunReport, opts: Options) -> Res<()> {
    let run = &cfg.run;
    let st = stratified(cfg, inst, rep)?;
    let ev = classify_theorem_case(&st);
    let c = stab(cfg, inst)?.c;
    let formula = truncated_density_formula(&st, &inst.y, &inst.t, run.r.max(1)).ok();
    let prediction = predicted_density(&st, &inst.y, &inst.t, run.zeta_cutoff).ok().map(|p| p.value);
    let mut report = DensityReport::default();
    for d in run.d.0..=run.d.1 {
        let horizon = cfg.horizon_at(setup, d).map_err(CommandError::Usage)?;
        let map = inst.eval_map(d, horizon + 1)?;
        let mut row = match run.method {
            Method::Sample => DensityRow::from_sample(&sampled_from_map(inst, &map, horizon, run.trials, run.seed)?, ev.case),
            Method::Exact => DensityRow::from_exact(&exact_row(inst, &map, horizon + 1, run.exhaustive_cap)?, ev.case),
            Method::Auto => match exact_row(inst, &map, horizon + 1, run.exhaustive_cap) {
                Ok(x) => DensityRow::from_exact(&x, ev.case),
                Err(_) => {
                    DensityRow::from_sample(&sampled_from_map(inst, &map, horizon, run.trials, run.seed)?, ev.case)
                }
            },
        };
        row.truncated_formula = formula.clone();
        row.prediction = prediction.clone();
        row.tail_bound = tail_bound(&st, run.r.max(1), d, c).ok().map(|t| t.value);
        report.rows.push(row);
    }
    report.notes.push(format!("case ({}): {}", ev.case, ev.reason));
    if let Some(f) = &formula {
        report.notes.push(format!("truncated formula at r = {}: {f} = {:.6}", run.r, f.to_f64().unwrap_or(f64::NAN)));
    }
    match run.horizon {
        Some(Horizon::Bezout) => {}
        _ => rep.warnings.push(
            "smoothness is only decided at closed points up to the horizon B; exact rows are truncated densities".into(),
        ),
    }
    file(rep, "", report.to_csv());
    rep.summary = report.summary();
    if opts.gnuplot {
        rep.files.push(("density.gp".into(), gnuplot_script()));
    }
    Ok(())
}

fn gnuplot_script() -> String {
    "\
set datafile separator ','
set key autotitle columnhead top right
set xlabel 'd'
set ylabel 'fraction of I_d'
set yrange [0:1]
plot 'density.csv' using 1:7 with linespoints title 'fraction', \\
     '' using 1:7:8:9 with yerrorbars title '95% interval', \\
     '' using 1:(column(11) eq '' ? NaN : real(column(11))) with lines title 'prediction'
"
    .into()
}

fn predict(cfg: &ExperimentConfig, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let st = stratified(cfg, inst, rep)?;
    let cutoff = cfg.run.zeta_cutoff;
    let pr = predicted_density(&st, &inst.y, &inst.t, cutoff)?;
    let mut csv = String::from("quantity,r,value,value_float\n");
    for r in 2..=cutoff + 1 {
        let f = truncated_density_formula(&st, &inst.y, &inst.t, r)?;
        let _ = writeln!(csv, "truncated_formula,{r},{f},{:.9}", f.to_f64().unwrap_or(f64::NAN));
    }
    for (r, v) in [(cutoff, &pr.value), (cutoff + 1, &pr.next)] {
        let _ = writeln!(csv, "prediction,{r},{v},{:.9}", v.to_f64().unwrap_or(f64::NAN));
    }
    file(rep, "", csv);
    let _ = writeln!(rep.summary, "case ({}): {}", pr.evidence.case, pr.evidence.reason);
    let _ = writeln!(
        rep.summary,
        "prediction with Euler products over degrees < {cutoff}: {} = {:.6}; with < {}: {:.6}",
        pr.value,
        pr.value.to_f64().unwrap_or(f64::NAN),
        cutoff + 1,
        pr.next.to_f64().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn find(cfg: &ExperimentConfig, setup: &Setup, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    let run = &cfg.run;
    let order = match run.order {
        Order::Lex => SearchOrder::Lex { cap_bits: run.exhaustive_cap },
        Order::Random => SearchOrder::Random { seed: run.seed, tries: run.tries },
    };
    let t = inst.tower;
    let mut csv = String::from("d,horizon,status,polynomial\n");
    let mut found = None;
    for d in run.d.0..=run.d.1 {
        let horizon = cfg.horizon_at(setup, d).map_err(CommandError::Usage)?;
        match find_smooth(inst, d..=d, horizon, order)? {
            FindOutcome::Found(f) => {
                let _ = writeln!(csv, "{d},{horizon},found,{}", f.f.to_text(t.base()));
                found = Some(f);
                break;
            }
            FindOutcome::NotFound { tried } => {
                let why = tried.first().map_or("", |x| x.1.as_str()).replace(',', ";");
                let _ = writeln!(csv, "{d},{horizon},not-found,{why}");
            }
        }
    }
    file(rep, "", csv);
    match found {
        Some(f) => {
            let mut cert = String::from("point,degree,witness,value\n");
            for (p, w) in &f.certificate.checks {
                let level = t.level(p.degree)?;
                let (kind, v) = match w {
                    Witness::Value(v) => ("value".to_string(), *v),
                    Witness::Tangent { index, value } => (format!("tangent_{index}"), *value),
                    Witness::YValue(v) => ("Y".to_string(), *v),
                };
                let _ = writeln!(cert, "{},{},{kind},{}", p.to_text(t), p.degree, bertini_core::mpoly::elem_text(level, v));
            }
            file(rep, "_certificate", cert);
            let _ = writeln!(rep.summary, "found at d = {}: {}", f.d, f.f.to_text(t.base()));
            let _ = writeln!(
                rep.summary,
                "certificate: {} closed points up to degree {} rechecked by direct evaluation",
                f.certificate.checks.len(),
                f.certificate.horizon
            );
            let full = density::bezout_horizon(&inst.u, f.d);
            if full.is_none_or(|b| b > f.certificate.horizon) {
                rep.warnings.push(format!(
                    "smoothness certified only up to degree {}; higher-degree singular points are not excluded",
                    f.certificate.horizon
                ));
            }
        }
        None => {
            let _ = writeln!(rep.summary, "no hypersurface found for d in {}..{}", run.d.0, run.d.1);
        }
    }
    Ok(())
}

fn snc(cfg: &ExperimentConfig, setup: &Setup, inst: &Instance, rep: &mut RunReport) -> Res<()> {
    if setup.components.is_empty() {
        return Err(CommandError::Usage("snc-check needs at least one [snc] component".into()));
    }
    let bound = count_bound(cfg);
    let t = inst.tower;
    let r = geom::snc_bound_check(t, &inst.z, &setup.components, cfg.snc_l, &inst.u, bound, setup.budget)?;
    let mut csv = String::from("point,degree,k,e,bound,ok,codim_ok\n");
    for row in &r.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.point.to_text(t),
            row.point.degree,
            row.k,
            row.e,
            row.bound,
            row.ok,
            row.codim_ok
        );
    }
    file(rep, "", csv);
    let status = if r.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(
        rep.summary,
        "{status} e ≤ l + k − 1 with l = {} on {} points of V up to degree {bound}: {} bound violations, {} codimension violations",
        cfg.snc_l,
        r.rows.len(),
        r.bound_violations(),
        r.codim_violations()
    );
    rep.failed |= !r.passed();
    Ok(())
}
