use std::path::Path;
use std::process::{Command, Output};

fn pvarsym(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvarsym"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn symbol_of_gbm_and_drift() {
    let dir = tempfile::tempdir().unwrap();
    let o = pvarsym(dir.path(), &["symbol", "gbm", "--x", "1", "--xi", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "2.000000000000 + 0i");
    assert!(out.lines().nth(1).unwrap().starts_with("provenance: "));

    let o = pvarsym(dir.path(), &["symbol", "drift", "--xi", "-1"]);
    assert_eq!(stdout(&o).lines().next().unwrap(), "0 + 3.000000000000i");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pvarsym(dir.path(), &["symbol", "nope", "--xi", "1"]).status.code(), Some(2));
    assert_eq!(pvarsym(dir.path(), &["symbol", "bm", "--xi", "1,2"]).status.code(), Some(2));
    assert_eq!(pvarsym(dir.path(), &["index", "bm", "--kind", "loc"]).status.code(), Some(2));
    assert_eq!(pvarsym(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(pvarsym(dir.path(), &["pvar", "missing.csv", "--p", "2"]).status.code(), Some(3));
    assert_eq!(pvarsym(dir.path(), &["experiment", "cantor-divergence"]).status.code(), Some(4));
}

#[test]
fn index_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = pvarsym(dir.path(), &["index", "bm", "--kind", "loc", "--at", "0.3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "model,kind,estimate,slope,residual,unbounded_flag");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..2], &["bm", "loc"]);
    assert!((row[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(row[5], "false");
}

#[test]
fn simulate_is_deterministic_and_pvar_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    for (out, fmt) in [("a", "csv"), ("b", "csv"), ("c", "bin")] {
        let o = pvarsym(dir.path(), &["--out", out, "simulate", "stable-1.2", "--level", "8", "--paths", "2", "--format", fmt]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/simulate/stable-1.2/path-1.csv"), read("b/simulate/stable-1.2/path-1.csv"));
    assert_ne!(read("a/simulate/stable-1.2/path-0.csv"), read("a/simulate/stable-1.2/path-1.csv"));

    let from_csv = pvarsym(dir.path(), &["pvar", "a/simulate/stable-1.2/path-0.csv", "--p", "1.5"]);
    let from_bin = pvarsym(dir.path(), &["pvar", "c/simulate/stable-1.2/path-0.bin", "--p", "1.5"]);
    assert!(from_csv.status.success() && from_bin.status.success());
    assert_eq!(stdout(&from_csv), stdout(&from_bin));
}

#[test]
fn pvar_of_constant_path_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = pvarsym(dir.path(), &["--out", "o", "simulate", "constant", "--level", "4"]);
    assert!(o.status.success());
    let o = pvarsym(dir.path(), &["pvar", "o/simulate/constant/path-0.csv", "--p", "2", "--components"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "total,0");
    assert!(out.contains("sandwich_holds,true"));
}

#[test]
fn experiment_report_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    for (out, w) in [("w1", "1"), ("w3", "3")] {
        let o = pvarsym(dir.path(), &["--out", out, "--workers", w, "experiment", "gou-gaussian", "--quick"]);
        assert!(o.status.success());
        assert!(stdout(&o).starts_with("PASS gou-gaussian"));
    }
    let metrics = |out: &str| std::fs::read_to_string(dir.path().join(out).join("gou-gaussian/metrics.csv")).unwrap();
    assert_eq!(metrics("w1"), metrics("w3"));
}

#[test]
fn params_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = pvarsym(dir.path(), &["experiment", "pvar-oracle", "--params", r#"{"cases": 20}"#]);
    assert!(o.status.success());
    let o = pvarsym(dir.path(), &["experiment", "pvar-oracle", "--params", r#"{"bogus": 1}"#]);
    assert_eq!(o.status.code(), Some(2));
}
