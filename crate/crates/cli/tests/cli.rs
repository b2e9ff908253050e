use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mg1(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mg1"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("MG1_OUT_DIR")
        .output()
        .expect("spawn mg1")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn kv(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.split_once(" = ").filter(|(k, _)| k.trim() == key).map(|(_, v)| v.trim().to_string()))
        .unwrap_or_else(|| panic!("missing key {key} in\n{text}"))
}

fn write_model(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Scalar model 0.6 + 0.1 z + 0.3 z^2: G = 1, U-based rate 0.5, xi = 2.
const SCALAR: &str = "MG1 1 2\n0.6\n0.1\n0.3\n";

#[test]
fn gen_phph_default_degree() {
    let dir = TempDir::new().unwrap();
    let o = mg1(dir.path(), &["gen", "phph"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(kv(&out, "m"), "10");
    assert_eq!(kv(&out, "d"), "53");
    assert_eq!(kv(&out, "stochastic"), "true");
    let drift: f64 = kv(&out, "drift").parse().unwrap();
    assert!((drift + 0.15).abs() < 1e-12, "{drift}");
    assert!(dir.path().join("phph.mg1").exists());
}

#[test]
fn gen_phph_fixed_degree() {
    let dir = TempDir::new().unwrap();
    let o = mg1(dir.path(), &["gen", "phph", "--degree", "61"]);
    assert!(o.status.success());
    assert_eq!(kv(&stdout(&o), "d"), "61");
}

#[test]
fn gen_phph_unstable_load_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = mg1(dir.path(), &["gen", "phph", "--rho", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_synthetic_has_requested_drift() {
    let dir = TempDir::new().unwrap();
    let o = mg1(dir.path(), &["gen", "synthetic", "--m", "4", "--d", "12"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let drift: f64 = kv(&out, "drift").parse().unwrap();
    assert!((drift + 0.1).abs() < 1e-12, "{drift}");
    assert_eq!(kv(&out, "nonnegative"), "true");
}

#[test]
fn gen_synthetic_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["gen", "synthetic", "--m", "3", "--d", "6", "--sigma", "0.5", "--seed", "9"];
    assert!(mg1(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("synthetic.mg1")).unwrap();
    assert!(mg1(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("synthetic.mg1")).unwrap());
}

#[test]
fn solve_writes_residual_trace_and_summary() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "s.mg1", SCALAR);
    let o = mg1(dir.path(), &["solve", &model, "--strategy", "optimal:1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,delta,inner_iters"));
    assert!(lines.next().unwrap().starts_with("0,"));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(kv(&summary, "strategy"), "optimal:1");
    assert_eq!(kv(&summary, "outer"), "1");
    let g = fs::read_to_string(dir.path().join("G.mat")).unwrap();
    assert!(g.starts_with("MAT 1 1"));
    let value: f64 = g.lines().nth(1).unwrap().trim().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-15);
}

#[test]
fn solve_degree_zero_model_in_one_step() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "z.mg1", "MG1 2 0\n0.5 0.5\n0.25 0.75\n");
    let o = mg1(dir.path(), &["solve", &model]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(kv(&summary, "outer"), "1");
    assert_eq!(kv(&summary, "final_residual").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn solve_rejects_unknown_strategy() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "s.mg1", SCALAR);
    assert_eq!(mg1(dir.path(), &["solve", &model, "--strategy", "bogus"]).status.code(), Some(2));
}

#[test]
fn solve_reports_missing_model() {
    let dir = TempDir::new().unwrap();
    assert_eq!(mg1(dir.path(), &["solve", "/nonexistent/model.mg1"]).status.code(), Some(1));
}

#[test]
fn sweep_covers_range_with_baselines() {
    let dir = TempDir::new().unwrap();
    assert!(mg1(dir.path(), &["gen", "synthetic", "--m", "3", "--d", "6"]).status.success());
    let model = dir.path().join("synthetic.mg1");
    let o = mg1(dir.path(), &["sweep", model.to_str().unwrap(), "--baselines", "--jobs", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(csv.lines().next(), Some("q_plus_1,outer,inner_total,cpu_seconds,final_residual"));
    let labels: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(labels, ["natural", "traditional", "ubased", "2", "3", "4", "5", "6"]);
    // q + 1 = d leaves nothing for the outer loop to correct beyond one sweep
    assert_eq!(rows.last().unwrap()[1], "1");
    let outer: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(outer.windows(2).all(|w| w[1] <= w[0]), "{outer:?}");
}

#[test]
fn sweep_rejects_empty_range() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "s.mg1", SCALAR);
    assert_eq!(mg1(dir.path(), &["sweep", &model, "--from", "5", "--to", "3"]).status.code(), Some(2));
}

#[test]
fn analyze_scalar_model() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "s.mg1", SCALAR);
    let o = mg1(dir.path(), &["analyze", &model]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = fs::read_to_string(dir.path().join("diagnostics.txt")).unwrap();
    let num = |k: &str| kv(&d, k).parse::<f64>().unwrap();
    assert!((num("rho_MinvN") - 0.5).abs() < 1e-14);
    assert!((num("xi") - 2.0).abs() < 1e-12);
    assert!((num("mu") + 0.3).abs() < 1e-15);
    assert!(num("rho_W_minus_rho_MinvN") < 1e-12);
}

#[test]
fn analyze_transient_model_reports_missing_root() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "t.mg1", "MG1 1 2\n0.2\n0.3\n0.5\n");
    let o = mg1(dir.path(), &["analyze", &model]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = fs::read_to_string(dir.path().join("diagnostics.txt")).unwrap();
    assert!(kv(&d, "xi").starts_with("error:"), "{d}");
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mg1"))
        .args(["gen", "synthetic", "--m", "2", "--d", "3"])
        .env("MG1_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("synthetic.mg1").exists());
}
