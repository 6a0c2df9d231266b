use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const MINIMAL: &str = "\
rng_seed = 2

[problem]
lambda = 1.0
coefficients = [0.0, -1.0, 0.0, 1.0]
domain = { dimension = 1, side_length = 1.0, grid_points = 31 }

[solver]
dt = 1e-3
t_end = 0.05
";

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn rdlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn negative_dt_exits_2_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &MINIMAL.replace("dt = 1e-3", "dt = -1"));
    let o = rdlab(&["solve", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 9"), "{msg}");
    assert!(msg.contains("solver.dt"), "{msg}");
}

#[test]
fn unknown_key_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &MINIMAL.replace("lambda = 1.0", "lambda = 1.0\nlamda = 2.0"));
    let o = rdlab(&["exponents", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lamda"), "{}", stderr(&o));
}

#[test]
fn missing_section_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "plain.toml", MINIMAL);
    let o = rdlab(&["gronwall", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gronwall"));
}

#[test]
fn missing_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let o = rdlab(&["solve"], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certification_passes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = rdlab(&["certify-nonlinearity", "--config", config("certify.toml").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let r = report(&out);
    assert_eq!(r["command"], "certify");
    assert_eq!(r["summary"]["pass"], true);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("timings.json").exists());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("exponents.toml");
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = rdlab(&["exponents", "--config", cfg.to_str().unwrap()], &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        bytes.push((std::fs::read(out.join("report.json")).unwrap(), std::fs::read(out.join("exponents.csv")).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("exponents.toml");
    let out = tmp.path().join("a");
    rdlab(&["exponents", "--config", cfg.to_str().unwrap(), "--seed", "99"], &out);
    let r = report(&out);
    assert_eq!(r["seed"], 99);
    assert_eq!(r["config"]["rng_seed"], 99);
    let base = tmp.path().join("b");
    rdlab(&["exponents", "--config", cfg.to_str().unwrap()], &base);
    let ps = |r: &Value| r["suites"][0]["data"]["random_ps"].clone();
    assert_ne!(ps(&r), ps(&report(&base)));
}

#[test]
fn solve_writes_trajectory() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{MINIMAL}\n[suites.solve]\ninitial = {{ kind = \"eigenmode\", mode = [1], amplitude = 1.0 }}\n");
    let cfg = write(tmp.path(), "solve.toml", &text);
    let out = tmp.path().join("out");
    let o = rdlab(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.lines().count() > 2);
    assert!(out.join("trajectory.bin").exists());
}

#[test]
fn plots_extract_sweeps_and_empty_series() {
    let tmp = TempDir::new().unwrap();
    let text = r#"{"suites": [
        {"name": "smoothing", "data": {"gammas": [
            {"gamma": 2.0, "samples": [{"initial_norm": 1.0, "final_norm": 2.0}, {"initial_norm": 0.5, "final_norm": 0.0}]},
            {"gamma": 4.0, "samples": []}
        ]}},
        {"name": "h1_smoothing", "data": {"fit": {"samples": []}}}
    ]}"#;
    let path = write(tmp.path(), "report.json", text);
    let out = tmp.path().join("plots");
    let o = rdlab(&["plots", "--report", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let read = |n: &str| std::fs::read_to_string(out.join(n)).unwrap();
    let g2 = read("smoothing_gamma2.csv");
    let mut lines = g2.lines();
    assert_eq!(lines.next(), Some("log_norm_u0_sq,log_norm_result_pow"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row, vec![0.0, 2.0 * 2f64.ln()]);
    assert_eq!(lines.next(), None);
    assert_eq!(read("smoothing_gamma4.csv"), "log_norm_u0_sq,log_norm_result_pow\n");
    assert_eq!(read("h1_smoothing.csv"), "log_norm_u0,log_norm_gradient\n");
}

#[test]
fn plots_reject_malformed_report() {
    let tmp = TempDir::new().unwrap();
    let path = write(tmp.path(), "report.json", "{\"command\": \"x\"}");
    let o = rdlab(&["plots", "--report", path.to_str().unwrap()], &tmp.path().join("plots"));
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("malformed report"));
}
