use std::path::Path;
use std::process::{Command, Output};

const P1: &str = "[field]\np = 2\n[ambient]\nn = 1\n[T]\nmode = full\n[run]\nd = 1..6\nr = 2\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn run(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bertini-sieve"));
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("BERTINI_SIEVE_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn points_lists_closed_points_by_degree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p1.cfg", P1);
    let out = dir.path().join("out");
    let o = run(&["points", "--config", &cfg, "--r", "3", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("points.csv")).unwrap();
    let degrees: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(degrees, ["1", "1", "1", "2"]);
    assert!(out.join("points.report.txt").exists());
}

#[test]
fn verify_passes_on_the_projective_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p1.cfg", P1);
    let o = run(&["verify", "--config", &cfg], None);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("PASS ")).count(), 3, "{s}");
    assert!(!s.contains("FAIL"));
}

#[test]
fn exhaustive_density_at_degree_six() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p1.cfg", P1);
    let out = dir.path().join("out");
    let o = run(&["density", "--config", &cfg, "--d", "6", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("density.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "exhaustive");
    assert_eq!((row[4], row[5]), ("54", "128"));
    assert_eq!(row[9], "27/64");
}

#[test]
fn hypothesis_violations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let yz = write(dir.path(), "yz.cfg", "[ambient]\nn = 2\n[Z]\ngen = \"x1\"\n[Y]\npoint = \"1:0:1\"\n");
    let o = run(&["points", "--config", &yz], None);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Y∩Z=∅") && err.contains("yz.cfg:6:"), "{err}");

    let inh = write(dir.path(), "inh.cfg", "[ambient]\nn = 1\n[Z]\ngen = \"x0 + x1^2\"\n");
    let o = run(&["points", "--config", &inh], None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not homogeneous"));

    let cusp = write(dir.path(), "cusp.cfg", "[ambient]\nn = 2\n[X]\nclosed = \"x0*x2^2 + x1^3\"\ndim = 1\n");
    assert_eq!(code(&run(&["density", "--config", &cusp], None)), 2);
}

#[test]
fn budget_and_usage_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let big = write(dir.path(), "big.cfg", "[field]\nbudget = 100\n[ambient]\nn = 3\n");
    assert_eq!(code(&run(&["points", "--config", &big, "--r", "3"], None)), 3);
    let bad = write(dir.path(), "bad.cfg", "[field]\np = 4\n");
    assert_eq!(code(&run(&["points", "--config", &bad], None)), 1);
    let cfg = write(dir.path(), "p1.cfg", P1);
    assert_eq!(code(&run(&["density", "--config", &cfg, "--horizon", "soon"], None)), 1);
    assert_eq!(code(&run(&["points", "--config", "/nonexistent/x.cfg"], None)), 1);
}

#[test]
fn failed_checks_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[ambient]\nn = 2\n[Z]\ngen = \"x0*x2^2 + x1^3\"\n[snc]\ncomponent = \"x0*x2^2 + x1^3\"\nl = 1\n";
    let cfg = write(dir.path(), "cusp.cfg", text);
    let o = run(&["snc-check", "--config", &cfg], None);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[field]\np = 2\n[ambient]\nn = 2\n[run]\nd = 3..4\nmethod = sample\ntrials = 500\nseed = 5\n";
    let cfg = write(dir.path(), "p2.cfg", text);
    let mut outputs = Vec::new();
    for (i, w) in ["1", "3", "8"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = run(&["density", "--config", &cfg, "--out", out.to_str().unwrap()], Some(w));
        assert_eq!(code(&o), 0);
        outputs.push((
            std::fs::read(out.join("density.csv")).unwrap(),
            std::fs::read(out.join("density.report.txt")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn the_echo_reruns_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p1.cfg", "[ambient]\nn = 1   # line\n[run]\nd = 2..3\n");
    let first = stdout(&run(&["predict", "--config", &cfg, "--r", "3"], None));
    let echo = first.split("# config\n").nth(1).unwrap().split("\n# ").next().unwrap();
    let again = write(dir.path(), "echo.cfg", echo);
    let second = stdout(&run(&["predict", "--config", &again], None));
    assert_eq!(first, second);
}

#[test]
fn fat_point_density_is_zero_and_find_fails() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[ambient]\nn = 2\n[Z]\ngen = \"x1^2\"\ngen = \"x1*x2\"\ngen = \"x2^2\"\n[run]\nd = 2..4\n";
    let cfg = write(dir.path(), "fat.cfg", text);
    let s = stdout(&run(&["density", "--config", &cfg], None));
    assert_eq!(s.lines().filter(|l| l.starts_with("d=") && l.contains("fraction=0/")).count(), 3, "{s}");
    let s = stdout(&run(&["find", "--config", &cfg], None));
    assert!(s.contains("no hypersurface found"));
}

#[test]
fn gnuplot_script_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p1.cfg", P1);
    let out = dir.path().join("out");
    run(&["density", "--config", &cfg, "--d", "2..3", "--out", out.to_str().unwrap()], None);
    assert!(!out.join("density.gp").exists());
    run(&["density", "--config", &cfg, "--d", "2..3", "--out", out.to_str().unwrap(), "--gnuplot-script"], None);
    assert!(std::fs::read_to_string(out.join("density.gp")).unwrap().contains("density.csv"));
}
