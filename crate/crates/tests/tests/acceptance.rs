//! Acceptance criteria 1 to 13, each reported as one PASS/FAIL line on stderr.
//!
//! Every criterion runs a bundled configuration through the runner and
//! judges the written report against tolerances pinned below.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use rdlab_cli::suites::{AttractorPart, Suite};
use rdlab_cli::{Command, RunOptions};
use serde_json::Value;

struct Case {
    config: &'static str,
    command: Suite,
    budget_seconds: f64,
}

const LINEAR: usize = 0;
const CERTIFY: usize = 1;
const MONOTONICITY: usize = 2;
const COROLLARY: usize = 3;
const EXPONENTS: usize = 4;
const GRONWALL: usize = 5;
const AK_BK: usize = 6;
const SMOOTHING: usize = 7;
const H1: usize = 8;
const LP_BOUND: usize = 9;
const ENERGY: usize = 10;
const ATTRACTOR: usize = 11;

const CASES: [Case; 12] = [
    Case { config: "linear_oracle", command: Suite::Solve, budget_seconds: 10.0 },
    Case { config: "certify", command: Suite::Certify, budget_seconds: 5.0 },
    Case { config: "monotonicity", command: Suite::Decompose, budget_seconds: 5.0 },
    Case { config: "corollary", command: Suite::Decompose, budget_seconds: 10.0 },
    Case { config: "exponents", command: Suite::Exponents, budget_seconds: 1.0 },
    Case { config: "gronwall", command: Suite::Gronwall, budget_seconds: 120.0 },
    Case { config: "ak_bk", command: Suite::AkBk, budget_seconds: 300.0 },
    Case { config: "smoothing", command: Suite::Smoothing, budget_seconds: 600.0 },
    Case { config: "h1_smoothing", command: Suite::H1Smoothing, budget_seconds: 600.0 },
    Case { config: "lp_bound", command: Suite::LpBound, budget_seconds: 300.0 },
    Case { config: "energy", command: Suite::Energy, budget_seconds: 300.0 },
    Case { config: "attractor", command: Suite::Attractor(AttractorPart::All), budget_seconds: 1200.0 },
];

struct Run {
    error: Option<String>,
    seconds: f64,
    bytes: Vec<u8>,
    report: Value,
    dir: PathBuf,
}

static FIRST: [OnceLock<Run>; 12] = [const { OnceLock::new() }; 12];

fn launch(index: usize, slot: &str) -> Run {
    let case = &CASES[index];
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(case.config).join(slot);
    let _ = std::fs::remove_dir_all(&dir);
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/configs").join(format!("{}.toml", case.config));
    let opts = RunOptions {
        config,
        out: dir.clone(),
        seed: None,
        smoothing_report: (index == ATTRACTOR).then(|| first(SMOOTHING).dir.join("report.json")),
    };
    let start = Instant::now();
    let error = rdlab_cli::run(Command::Suite(case.command), &opts).err().map(|e| e.to_string());
    let seconds = start.elapsed().as_secs_f64();
    let bytes = std::fs::read(dir.join("report.json")).unwrap_or_default();
    let report = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    Run {
        error,
        seconds,
        bytes,
        report,
        dir,
    }
}

fn first(index: usize) -> &'static Run {
    FIRST[index].get_or_init(|| launch(index, "run1"))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn data(r: &Value) -> &Value {
    &r["suites"][0]["data"]
}

fn config(r: &Value) -> &Value {
    &r["config"]
}

fn check_value(r: &Value, name: &str) -> f64 {
    r["suites"][0]["checks"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["name"] == name))
        .map_or(f64::NAN, |c| num(&c["value"]))
}

fn items(v: &Value) -> &[Value] {
    v.as_array().map(Vec::as_slice).unwrap_or(&[])
}

/// Least-squares slope of `y` on `x`.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

struct Verdict {
    number: u8,
    title: &'static str,
    failures: Vec<String>,
}

impl Verdict {
    fn new(number: u8, title: &'static str) -> Self {
        Self { number, title, failures: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    /// Report presence and runtime of one run.
    fn ran(&mut self, run: &Run, index: usize) {
        let case = &CASES[index];
        self.require(run.error.is_none() && !run.report.is_null(), || {
            format!("{} did not produce a report: {}", case.config, run.error.as_deref().unwrap_or("unreadable"))
        });
        self.require(run.seconds < case.budget_seconds, || {
            format!("{} took {:.1} s, budget {} s", case.config, run.seconds, case.budget_seconds)
        });
    }

    fn finish(self) {
        let mut err = std::io::stderr();
        if self.failures.is_empty() {
            let _ = writeln!(err, "criterion {:>2} {}: PASS", self.number, self.title);
            return;
        }
        let shown: Vec<&str> = self.failures.iter().take(6).map(String::as_str).collect();
        let more = self.failures.len().saturating_sub(shown.len());
        let tail = if more > 0 { format!(" (+{more} more)") } else { String::new() };
        let _ = writeln!(err, "criterion {:>2} {}: FAIL: {}{tail}", self.number, self.title, shown.join("; "));
        panic!("criterion {} failed", self.number);
    }
}

#[test]
fn criterion_01_linear_oracle() {
    const TOLERANCE: f64 = 1e-4;
    const ORDER_TOLERANCE: f64 = 0.2;
    const NOMINAL_ORDER: f64 = 2.0;
    let mut v = Verdict::new(1, "linear oracle");
    let run = first(LINEAR);
    v.ran(run, LINEAR);
    let r = &run.report;
    let c = config(r);
    v.require(c["solver"]["scheme"] == "imex_cn_ab2", || "scheme is not the second-order one".into());
    let t = num(&data(r)["final"]["time"]);
    v.require(close(t, 0.1, 1e-12), || format!("final time {t}"));
    // sin(pi x) has discrete L2 norm sqrt(1/2) under the interior rectangle rule
    let exact = (-(1.0 + std::f64::consts::PI.powi(2)) * 0.1f64).exp() * 0.5f64.sqrt();
    let rel = (num(&data(r)["final"]["norm_l2"]) / exact - 1.0).abs();
    v.require(rel <= TOLERANCE, || format!("relative error {rel:e} > {TOLERANCE:e}"));
    let dts = items(&c["suites"]["solve"]["oracle"]["order_dts"]);
    let errs = items(&data(r)["oracle"]["errors"]);
    v.require(dts.len() == errs.len() && dts.len() >= 3, || "order sweep missing".into());
    let pts: Vec<(f64, f64)> = dts.iter().zip(errs).map(|(d, e)| (num(d).ln(), num(e).ln())).collect();
    let order = slope(&pts);
    v.require(close(order, NOMINAL_ORDER, ORDER_TOLERANCE), || format!("observed order {order}"));
    v.finish();
}

#[test]
fn criterion_02_certification() {
    const MARGIN: f64 = -1e-12;
    let mut v = Verdict::new(2, "nonlinearity certification");
    let run = first(CERTIFY);
    v.ran(run, CERTIFY);
    let r = &run.report;
    let c = config(r);
    v.require(c["problem"]["coefficients"] == serde_json::json!([0.0, -1.0, 0.0, 1.0]), || "f is not s^3 - s".into());
    let k = &c["constants"];
    let expected = [("kappa", 3.0), ("l", 1.0), ("alpha", 0.5), ("beta", 0.5), ("sigma", 2.0)];
    for (name, value) in expected {
        v.require(num(&k[name]) == value, || format!("constant {name} = {}", k[name]));
    }
    let d = data(r);
    for section in ["certification", "recertification"] {
        let scan = &d[section]["scan"];
        v.require(num(&scan["half_width"]) == 50.0 && num(&scan["step"]) == 1e-3, || format!("{section} scan {scan}"));
        let conds = items(&d[section]["conditions"]);
        v.require(conds.len() == 4, || format!("{section} has {} conditions", conds.len()));
        for cond in conds {
            let m = num(&cond["worst_margin"]);
            v.require(m >= MARGIN, || format!("{} margin {m:e}", cond["name"]));
        }
    }
    let dec = &d["decomposition"];
    let (scale, shift) = (num(&dec["f1_scale"]), num(&dec["f1_shift"]));
    v.require(close(scale, 0.25, 1e-12) && close(shift, 2.0, 1e-12), || format!("f1 = {scale} s^3 - {shift}"));
    v.finish();
}

#[test]
fn criterion_03_monotonicity_constants() {
    const ANTISYMMETRY: f64 = 0.05;
    let mut v = Verdict::new(3, "monotonicity constants");
    let run = first(MONOTONICITY);
    v.ran(run, MONOTONICITY);
    let entries = items(&data(&run.report)["monotonicity"]);
    for (p, lo, hi) in [(4.0, 0.245, 0.255), (3.0, 0.49, 0.51)] {
        let Some(e) = entries.iter().find(|e| num(&e["p"]) == p) else {
            v.require(false, || format!("no estimate for p = {p}"));
            continue;
        };
        let c4 = num(&e["c4_raw"]);
        v.require((lo..=hi).contains(&c4), || format!("c4(p = {p}) = {c4}"));
        let (a, b) = (num(&e["c4_argmin"][0]), num(&e["c4_argmin"][1]));
        v.require((a + b).abs() <= ANTISYMMETRY * a.abs().max(b.abs()), || format!("argmin ({a}, {b}) for p = {p}"));
    }
    v.finish();
}

#[test]
fn criterion_04_one_sided_bound() {
    let mut v = Verdict::new(4, "one-sided bound on random triples");
    let run = first(COROLLARY);
    v.ran(run, COROLLARY);
    let r = &run.report;
    let cor = &config(r)["suites"]["decompose"]["corollary"];
    v.require(cor["s_range"] == serde_json::json!([-20.0, 20.0]), || format!("s range {}", cor["s_range"]));
    v.require(cor["r_range"] == serde_json::json!([0.0, 6.0]), || format!("r range {}", cor["r_range"]));
    let checked = num(&data(r)["corollary"]["checked"]);
    v.require(checked >= 1e6, || format!("{checked} triples checked"));
    let alpha = num(&data(r)["corollary"]["alpha1"]);
    v.require(alpha == num(&data(r)["decomposition"]["alpha1"]), || format!("alpha1 {alpha} differs from the split"));
    let violations = check_value(r, "corollary_violations");
    v.require(violations == 0.0, || format!("{violations} violations"));
    v.finish();
}

#[test]
fn criterion_05_exponent_tables() {
    const IDENTITY: f64 = 1e-12;
    let mut v = Verdict::new(5, "exponent tables");
    let run = first(EXPONENTS);
    v.ran(run, EXPONENTS);
    let r = &run.report;
    for table in items(&data(r)["tables"]) {
        let p = num(&table["p"]);
        let entries = items(&table["entries"]);
        v.require(entries.len() >= 50, || format!("p = {p}: {} levels", entries.len()));
        for e in entries {
            let (k, a, b) = (num(&e["k"]), num(&e["a"]), num(&e["b"]));
            let res = (p * a * b - (p + 2.0 * (k - 1.0))).abs();
            v.require(res <= IDENTITY, || format!("p = {p}, k = {k}: residual {res:e}"));
            if p == 4.0 {
                v.require(close(b, 1.0, IDENTITY), || format!("p = 4, k = {k}: b = {b}"));
            }
        }
    }
    v.require(items(&data(r)["tables"]).iter().any(|t| num(&t["p"]) == 4.0), || "no table for p = 4".into());
    let ps = items(&data(r)["random_ps"]);
    v.require(ps.len() >= 100, || format!("{} random exponents", ps.len()));
    v.require(ps.iter().all(|p| num(p) > 2.0 && num(p) <= 10.0), || "random exponent outside (2, 10]".into());
    let res = check_value(r, "identity_residual");
    v.require(res <= IDENTITY, || format!("identity residual {res:e}"));
    v.finish();
}

#[test]
fn criterion_06_gronwall() {
    const SLACK: f64 = 1e-6;
    let mut v = Verdict::new(6, "exponential difference bound");
    let run = first(GRONWALL);
    v.ran(run, GRONWALL);
    let r = &run.report;
    let lambda = num(&config(r)["problem"]["lambda"]);
    let l2 = num(&data(r)["l2"]);
    let mu = (2.0 * (l2 - lambda)).max(1.0);
    v.require(close(num(&data(r)["rate"]), mu, 1e-15), || format!("rate {} instead of {mu}", data(r)["rate"]));
    let horizon = num(&config(r)["suites"]["gronwall"]["horizon"]);
    v.require(horizon == 2.0, || format!("horizon {horizon}"));
    let pairs = items(&data(r)["pairs"]);
    v.require(pairs.len() >= 50, || format!("{} pairs", pairs.len()));
    for (i, p) in pairs.iter().enumerate() {
        let w = num(&p["worst_ratio"]);
        v.require(w <= 1.0 + SLACK, || format!("pair {i}: ratio {w}"));
    }
    v.finish();
}

#[test]
fn criterion_07_weighted_quotients() {
    const FACTOR: f64 = 3.0;
    let mut v = Verdict::new(7, "weighted difference quotients");
    let run = first(AK_BK);
    v.ran(run, AK_BK);
    let r = &run.report;
    let suite = &config(r)["suites"]["ak_bk"];
    let norms = items(&suite["norms"]).len();
    v.require(num(&suite["horizon"]) == 1.0, || format!("horizon {}", suite["horizon"]));
    v.require(norms == 3, || format!("{norms} distances"));
    let runs = items(&data(r)["runs"]);
    v.require(norms > 0 && !runs.is_empty() && runs.len() % norms == 0, || "malformed run table".into());
    for (j, direction) in runs.chunks(norms.max(1)).enumerate() {
        for k in 1..=3usize {
            for kind in ["pointwise", "integral"] {
                let q: Vec<f64> = direction.iter().map(|run| num(&run["entries"][k - 1][kind])).collect();
                v.require(q.iter().all(|x| x.is_finite() && *x > 0.0), || format!("direction {j}, {kind} k = {k}: {q:?}"));
                let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
                v.require(hi / lo <= FACTOR, || format!("direction {j}, {kind} k = {k}: spread {:.3e}", hi / lo));
            }
        }
    }
    v.finish();
}

#[test]
fn criterion_08_lebesgue_smoothing() {
    const MIN_SLOPE: f64 = 0.9;
    const CONTRACTIVE_SLACK: f64 = 1e-3;
    const RANGE: (f64, f64) = (1e-6, 1.0);
    let mut v = Verdict::new(8, "Lebesgue smoothing");
    let run = first(SMOOTHING);
    v.ran(run, SMOOTHING);
    let r = &run.report;
    let entries = items(&data(r)["gammas"]);
    for gamma in [2.0, 4.0, 6.0, 8.0] {
        let Some(e) = entries.iter().find(|e| num(&e["gamma"]) == gamma) else {
            v.require(false, || format!("gamma {gamma} missing"));
            continue;
        };
        let c = num(&e["constant"]);
        v.require(c.is_finite(), || format!("c_{gamma} = {c}"));
        let pts: Vec<(f64, f64)> = items(&e["samples"])
            .iter()
            .map(|s| (num(&s["initial_norm"]), num(&s["final_norm"])))
            .filter(|(a, _)| *a >= RANGE.0 * (1.0 - 1e-9) && *a <= RANGE.1 * (1.0 + 1e-9))
            .collect();
        v.require(pts.len() >= 100, || format!("gamma {gamma}: {} pairs in range", pts.len()));
        let usable: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).map(|(a, b)| (2.0 * a.ln(), gamma * b.ln())).collect();
        let s = slope(&usable);
        v.require(s >= MIN_SLOPE, || format!("gamma {gamma}: slope {s}"));
    }
    let con = &data(r)["contractive"];
    let lambda = num(&config(r)["suites"]["smoothing"]["contractive"]["lambda"]);
    let l2 = num(&con["l2"]);
    v.require(lambda > l2, || format!("lambda {lambda} <= l2 {l2}"));
    let mu = (2.0 * (l2 - lambda)).max(1.0);
    let c2 = num(&con["c2"]);
    v.require(c2 <= mu.exp() * (1.0 + CONTRACTIVE_SLACK), || format!("c2 {c2} > e^{mu}"));
    v.finish();
}

#[test]
fn criterion_09_gradient_smoothing() {
    const SLOPE_TOLERANCE: f64 = 0.05;
    let mut v = Verdict::new(9, "gradient smoothing");
    let run = first(H1);
    v.ran(run, H1);
    let fit = &data(&run.report)["fit"];
    let ratio = num(&fit["max_ratio"]);
    v.require(ratio <= 1.0 + 1e-12, || format!("sample exceeds fitted bound by {ratio}"));
    let p = num(&fit["p"]);
    let pts: Vec<(f64, f64)> = items(&fit["samples"])
        .iter()
        .map(|s| (num(&s["initial_norm"]), num(&s["gradient_norm"])))
        .filter(|(a, b)| *a > 0.0 && *b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    v.require(pts.len() >= 100, || format!("{} samples", pts.len()));
    let s = slope(&pts);
    let floor = 1.0 / (p - 1.0) - SLOPE_TOLERANCE;
    v.require(s >= floor, || format!("slope {s} < {floor}"));
    v.finish();
}

#[test]
fn criterion_10_lp_independence() {
    const FACTOR: f64 = 2.0;
    const TARGET_MATCH: f64 = 0.01;
    let mut v = Verdict::new(10, "higher integrability independent of the initial norm");
    let run = first(LP_BOUND);
    v.ran(run, LP_BOUND);
    let rep = &data(&run.report)["report"];
    v.require(num(&rep["eps"]) == 0.1 && num(&rep["horizon"]) == 2.0, || "window is not (0.1, 2]".into());
    let members = items(&rep["members"]);
    for m in members {
        let l2 = num(&m["initial_l2"]);
        v.require(close(l2, 1.0, 1e-9), || format!("member with L2 norm {l2}"));
    }
    for target in [1.0, 10.0, 100.0] {
        let hit = members.iter().any(|m| (num(&m["initial_lp"]) / target - 1.0).abs() <= TARGET_MATCH);
        v.require(hit, || format!("no member with L4 norm {target}"));
    }
    let at: Vec<f64> = members.iter().map(|m| num(&m["lp_at_eps"])).collect();
    let hi = at.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = at.iter().copied().fold(f64::INFINITY, f64::min);
    v.require(hi / lo < FACTOR, || format!("L4 norm at 0.1 varies by {}", hi / lo));
    for k in [1usize, 2] {
        let ok = members.iter().all(|m| num(&m["sups"][k - 1]).is_finite());
        v.require(ok, || format!("supremum for k = {k} not finite"));
    }
    v.finish();
}

#[test]
fn criterion_11_energy_monitors() {
    let mut v = Verdict::new(11, "energy monitors");
    let run = first(ENERGY);
    v.ran(run, ENERGY);
    let r = &run.report;
    let max_l2 = num(&config(r)["suites"]["energy"]["max_l2"]);
    v.require(max_l2 <= 10.0, || format!("initial norms up to {max_l2}"));
    let runs = items(&data(r)["runs"]);
    v.require(runs.len() >= 50, || format!("{} runs", runs.len()));
    for key in ["c_l2", "c_lp"] {
        let c = num(&data(r)[key]);
        v.require(c.is_finite(), || format!("{key} = {c}"));
        for (i, run) in runs.iter().enumerate() {
            v.require(num(&run[key]) <= c, || format!("run {i} needs {key} = {}", run[key]));
            v.require(run["reliable"] == true, || format!("run {i} under-resolved"));
        }
    }
    v.finish();
}

#[test]
fn criterion_12_attractor() {
    const THRESHOLD: f64 = 1e-3;
    const HORIZON: f64 = 20.0;
    const ORACLE: f64 = 0.2;
    const TRANSLATION: f64 = 1e-12;
    let mut v = Verdict::new(12, "attractor suite");
    let smoothing = first(SMOOTHING);
    let run = first(ATTRACTOR);
    v.ran(run, ATTRACTOR);
    let r = &run.report;
    let d = data(r);
    for gamma in [2.0, 6.0] {
        let found = items(&d["attraction"]).iter().find(|a| num(&a["tag"]["lebesgue"]) == gamma);
        let time = found.and_then(|a| {
            items(&a["points"]).iter().find(|p| num(&p[1]) < THRESHOLD).map(|p| num(&p[0]))
        });
        v.require(time.is_some_and(|t| t <= HORIZON), || format!("L{gamma} distance stays above {THRESHOLD}"));
    }
    let transport = &d["transport"];
    let expected = data(&smoothing.report)["gammas"]
        .as_array()
        .and_then(|g| g.iter().find(|e| num(&e["gamma"]) == 4.0))
        .map(|e| num(&e["holder"][0]));
    let holder = (num(&transport["holder"][0]), num(&transport["holder"][1]));
    v.require(num(&transport["gamma"]) == 4.0, || "transport gamma is not 4".into());
    v.require(expected == Some(holder.0), || format!("L = {} not from smoothing ({expected:?})", holder.0));
    v.require(holder.1 == 2.0 / 4.0, || format!("delta = {}", holder.1));
    let nets = items(&transport["nets"]);
    for eps in [0.1, 0.05, 0.02] {
        let cov = nets.iter().find(|n| num(&n["eps"]) == eps).map(|n| num(&n["coverage"]));
        v.require(cov == Some(1.0), || format!("coverage at eps {eps}: {cov:?}"));
    }
    let oracles = items(&d["dimension"]["oracles"]);
    v.require(oracles.len() == 8, || format!("{} oracle estimates", oracles.len()));
    for o in oracles {
        let expected = if o["cloud"] == "segment" { 1.0 } else { 2.0 };
        let dim = num(&o["dimension"]);
        v.require(close(dim, expected, ORACLE), || format!("{} {}: {dim}", o["cloud"], o["tag"]));
    }
    v.require(num(&config(r)["suites"]["attractor"]["dimension_p"]) == 4.0, || "p is not 4".into());
    let bounds = items(&d["dimension"]["bounds"]);
    v.require(bounds.len() == 2, || format!("{} bound sets", bounds.len()));
    for set in bounds {
        for b in items(&set["bounds"]) {
            let (lhs, rhs, tol) = (num(&b["lhs"]), num(&b["rhs"]), num(&b["tolerance"]));
            v.require(lhs <= rhs + tol, || format!("bound {}: {lhs} > {rhs} + {tol}", b["name"]));
        }
    }
    for label in ["L2", "L4", "L6", "H1"] {
        let diff = check_value(r, &format!("translation_{label}"));
        v.require(diff <= TRANSLATION, || format!("translation {label}: {diff:e}"));
    }
    v.finish();
}

#[test]
fn criterion_13_determinism() {
    let mut v = Verdict::new(13, "determinism");
    for (index, case) in CASES.iter().enumerate() {
        let a = first(index);
        let b = launch(index, "run2");
        v.ran(&b, index);
        v.require(!a.bytes.is_empty() && a.bytes == b.bytes, || format!("{} reports differ", case.config));
    }
    v.finish();
}
