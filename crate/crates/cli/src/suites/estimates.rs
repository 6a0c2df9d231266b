use rand::Rng;
use rayon::prelude::*;
use rdlab_core::attractor::{neighbour_pairs, sample_attractor};
use rdlab_core::estimates::{
    exponent_table, gronwall_pair, gronwall_rate, h1_smoothing_fit, pair_sweep, smoothing_sweep, verify_lp_bound,
    weighted_quotients, SmoothingReport,
};
use rdlab_core::profiles::{family_member, spiky};
use rdlab_core::{decompose, energy_monitor, solve, Error, Field, NonlinearitySpec, ProblemSpec};
use serde_json::json;

use super::{Context, SuiteResult};
use crate::error::CliError;
use crate::report::{Check, SuiteReport};

/// Index and value of the largest entry.
fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    values
        .into_iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 || b.1.is_nan() { b } else { a })
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.iter().any(|v| !v.is_finite()) {
        f64::NAN
    } else if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

pub fn energy(ctx: &Context) -> SuiteResult {
    let c = ctx.config;
    let suite = c.suites.energy.clone().ok_or(CliError::MissingSuite("energy"))?;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let constants = c.dissipativity()?;
    let cfg = c.solver_config()?.with_t_end(suite.horizon);
    let mut rng = ctx.rng(4);
    let inputs: Vec<_> = (0..suite.runs)
        .map(|i| {
            let family = suite.families[i % suite.families.len()];
            (i, family, suite.max_l2 * rng.gen_range(0.0..=1.0))
        })
        .collect();
    let runs = inputs
        .par_iter()
        .map(|&(i, family, l2)| {
            let u0 = if l2 > 0.0 {
                family_member(&domain, family, ctx.seed, i as u64, l2)?
            } else {
                domain.zeros()
            };
            let tr = solve(&u0, &problem, &cfg)?;
            Ok(energy_monitor(&tr, &problem, &constants)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let (run_l2, c_l2) = argmax(runs.iter().map(|r| r.c_l2));
    let (run_lp, c_lp) = argmax(runs.iter().map(|r| r.c_lp));
    let mut report = SuiteReport::new("energy");
    report.check(Check::finite("c_l2", c_l2).witness(json!({
        "run": run_l2,
        "family": inputs[run_l2].1,
        "initial_l2": inputs[run_l2].2,
        "time": runs[run_l2].argmax_l2,
    })));
    report.check(Check::finite("c_lp", c_lp).witness(json!({
        "run": run_lp,
        "family": inputs[run_lp].1,
        "initial_l2": inputs[run_lp].2,
        "time": runs[run_lp].argmax_lp,
    })));
    let unreliable: Vec<usize> = runs.iter().enumerate().filter(|r| !r.1.reliable).map(|r| r.0).collect();
    report.check(Check::holds("record_interval_resolved", unreliable.is_empty()).witness(&unreliable));
    let rows: Vec<[f64; 4]> = inputs
        .iter()
        .zip(&runs)
        .map(|(i, r)| [i.0 as f64, i.2, r.c_l2, r.c_lp])
        .collect();
    ctx.csv("energy.csv", &["run", "initial_l2", "c_l2", "c_lp"], &rows)?;
    report.put("c_l2", c_l2);
    report.put("c_lp", c_lp);
    report.put("runs", &runs);
    Ok(report)
}

pub fn gronwall(ctx: &Context) -> SuiteResult {
    let c = ctx.config;
    let suite = c.suites.gronwall.clone().ok_or(CliError::MissingSuite("gronwall"))?;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let d = decompose(problem.nonlinearity(), &c.dissipativity()?, &c.scan_spec()?)?;
    let rate = gronwall_rate(d.l2, problem.lambda());
    let cfg = c.solver_config()?.with_t_end(suite.horizon);
    let [lo, hi] = suite.norm_range;
    let pairs = pair_sweep(&domain, ctx.seed, suite.pairs, suite.base_l2, lo, hi)?;
    let results = pairs
        .par_iter()
        .map(|(u20, d0)| gronwall_pair(u20, d0, &problem, &cfg, rate))
        .collect::<Result<Vec<_>, _>>()?;
    let (worst, ratio) = argmax(results.iter().map(|r| r.worst_ratio));
    let mut report = SuiteReport::new("gronwall");
    report.check(
        Check::at_most("worst_ratio", ratio, 1.0 + suite.tolerance).witness(json!({
            "pair": worst,
            "initial_norm": pairs[worst].1.l2_norm(),
            "time": results[worst].argmax_time,
        })),
    );
    let rows: Vec<[f64; 4]> = pairs
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(i, ((_, d0), r))| [i as f64, d0.l2_norm(), r.worst_ratio, r.argmax_time])
        .collect();
    ctx.csv("gronwall.csv", &["pair", "initial_norm", "worst_ratio", "argmax_time"], &rows)?;
    report.put("rate", rate);
    report.put("l2", d.l2);
    report.put("pairs", &results);
    Ok(report)
}

pub fn ak_bk(ctx: &Context) -> SuiteResult {
    let c = ctx.config;
    let suite = c.suites.ak_bk.clone().ok_or(CliError::MissingSuite("ak_bk"))?;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let p = problem.nonlinearity().p();
    let k_max = suite.levels.iter().copied().max().unwrap_or(1);
    let table = exponent_table(p, k_max + 1)?;
    let cfg = c.solver_config()?.with_t_end(suite.horizon);
    let directions = (0..suite.directions)
        .map(|j| {
            let base = family_member(&domain, rdlab_core::profiles::ProfileFamily::ALL[j % 3], ctx.seed, 2 * j as u64, suite.base_l2)?;
            let dir = family_member(&domain, rdlab_core::profiles::ProfileFamily::ALL[(j + 1) % 3], ctx.seed, 2 * j as u64 + 1, 1.0)?;
            Ok((base, dir))
        })
        .collect::<Result<Vec<(Field, Field)>, Error>>()?;
    let jobs: Vec<(usize, f64)> = (0..suite.directions).flat_map(|j| suite.norms.iter().map(move |&n| (j, n))).collect();
    let results = jobs
        .par_iter()
        .map(|&(j, n)| {
            let (base, dir) = &directions[j];
            weighted_quotients(base, &dir.scale(n), &problem, &cfg, &table, k_max)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = SuiteReport::new("ak_bk");
    let mut rows = Vec::new();
    for &k in &suite.levels {
        for (kind, code) in [("pointwise", 0.0), ("integral", 1.0)] {
            let value = |i: usize| {
                let e = &results[i].entries[k - 1];
                if code == 0.0 {
                    e.pointwise
                } else {
                    e.integral
                }
            };
            let mut worst = (f64::NEG_INFINITY, 0usize);
            let mut worst_growth = (f64::NEG_INFINITY, 0usize);
            let mut finite = true;
            for j in 0..suite.directions {
                let idx: Vec<usize> = (0..jobs.len()).filter(|&i| jobs[i].0 == j).collect();
                let q: Vec<f64> = idx.iter().map(|&i| value(i)).collect();
                finite &= q.iter().all(|v| v.is_finite());
                let s = spread(&q);
                if s > worst.0 || s.is_nan() {
                    worst = (s, j);
                }
                // quotient at the smallest norm relative to the largest
                let small = idx.iter().min_by(|a, b| jobs[**a].1.total_cmp(&jobs[**b].1)).map(|&i| value(i));
                let large = idx.iter().max_by(|a, b| jobs[**a].1.total_cmp(&jobs[**b].1)).map(|&i| value(i));
                if let (Some(s), Some(l)) = (small, large) {
                    let g = s / l;
                    if g > worst_growth.0 {
                        worst_growth = (g, j);
                    }
                }
                rows.extend(idx.iter().map(|&i| [j as f64, k as f64, code, jobs[i].1, value(i)]));
            }
            let witness = |j: usize| {
                let q: Vec<(f64, f64)> = (0..jobs.len()).filter(|&i| jobs[i].0 == j).map(|i| (jobs[i].1, value(i))).collect();
                json!({ "direction": j, "quotients": q })
            };
            report.check(Check::holds(format!("{kind}_k{k}_finite"), finite));
            report.check(Check::at_most(format!("{kind}_k{k}_spread"), worst.0, suite.factor).witness(witness(worst.1)));
            report.check(
                Check::at_most(format!("{kind}_k{k}_small_norm_growth"), worst_growth.0, suite.factor)
                    .witness(witness(worst_growth.1))
                    .diagnostic(),
            );
        }
    }
    ctx.csv("ak_bk.csv", &["direction", "k", "kind", "initial_norm", "quotient"], &rows)?;
    report.put("table", &table);
    report.put("runs", &results);
    Ok(report)
}

pub fn lp_bound(ctx: &Context) -> SuiteResult {
    let c = ctx.config;
    let suite = c.suites.lp_bound.clone().ok_or(CliError::MissingSuite("lp_bound"))?;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let constants = c.dissipativity()?;
    let p = constants.p;
    let cfg = c.solver_config()?;
    let mut family = Vec::new();
    let mut missing = Vec::new();
    for &target in &suite.targets {
        match spiky(&domain, p, suite.l2, target) {
            Ok(f) => family.push((target, f)),
            Err(Error::NotRepresentable(reason)) => missing.push(json!({ "target": target, "reason": reason })),
            Err(e) => return Err(e.into()),
        }
    }
    let mut report = SuiteReport::new("lp_bound");
    report.check(Check::holds("family_complete", missing.is_empty()).witness(&missing));
    if family.is_empty() {
        return Ok(report);
    }
    let fields: Vec<Field> = family.iter().map(|f| f.1.clone()).collect();
    let main = verify_lp_bound(&problem, &constants, suite.eps, &fields, suite.k_max, &cfg)?;
    for b in &main.bounds {
        report.check(Check::finite(format!("sup_k{}", b.k), b.sup).witness(json!({
            "member": b.argmax_member,
            "target": family[b.argmax_member].0,
            "time": b.argmax_time,
        })));
    }
    let at_eps: Vec<f64> = main.members.iter().map(|m| m.lp_at_eps).collect();
    report.check(Check::below("lp_at_eps_spread", spread(&at_eps), suite.factor).witness(json!({
        "targets": family.iter().map(|f| f.0).collect::<Vec<_>>(),
        "initial_lp": main.members.iter().map(|m| m.initial_lp).collect::<Vec<_>>(),
        "lp_at_eps": at_eps,
    })));
    let mut sweep = Vec::new();
    for &eps in &suite.eps_sweep {
        let r = verify_lp_bound(&problem, &constants, eps, &fields, suite.k_max, &cfg)?;
        sweep.push((eps, r.bounds.iter().map(|b| b.sup).collect::<Vec<_>>()));
    }
    sweep.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sweep.windows(2).all(|w| w[0].1.iter().zip(&w[1].1).all(|(a, b)| b <= a));
    report.check(Check::holds("sup_nonincreasing_in_eps", monotone).witness(&sweep));
    let rows: Vec<[f64; 4]> = family
        .iter()
        .zip(&main.members)
        .map(|(f, m)| [f.0, m.initial_lp, m.lp_at_eps, m.sups.iter().copied().fold(0.0, f64::max)])
        .collect();
    ctx.csv("lp_bound.csv", &["target", "initial_lp", "lp_at_eps", "max_sup"], &rows)?;
    report.put("report", &main);
    report.put("eps_sweep", &sweep);
    Ok(report)
}

fn smoothing_entry(r: &SmoothingReport) -> serde_json::Value {
    let (l, delta) = r.holder_constants();
    json!({
        "gamma": r.gamma,
        "constant": r.constant,
        "holder": [l, delta],
        "regression": r.regression,
        "samples": r.samples,
    })
}

pub fn smoothing(ctx: &Context) -> SuiteResult {
    let c = ctx.config;
    let suite = c.suites.smoothing.clone().ok_or(CliError::MissingSuite("smoothing"))?;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let cfg = c.solver_config()?;
    let [lo, hi] = suite.norm_range;
    let mut ensemble = pair_sweep(&domain, ctx.seed, suite.pairs, suite.base_l2, lo, hi)?;
    let swept = ensemble.len();
    if let Some(cp) = &suite.cloud_pairs {
        let cloud = sample_attractor(&problem, &c.sampling_plan()?, cfg.dt, cfg.scheme, ctx.seed)?;
        ensemble.extend(neighbour_pairs(&cloud, cp.stride, &cp.separations, &mut ctx.rng(5))?);
    }
    let reports = smoothing_sweep(&suite.gammas, &ensemble, &problem, &cfg)?;
    let mut report = SuiteReport::new("smoothing");
    let mut rows = Vec::new();
    for r in &reports {
        let g = r.gamma;
        let (i, _) = argmax(r.samples.iter().map(|s| s.ratio));
        let top = r.samples.get(i);
        report.check(Check::finite(format!("c_gamma{g}"), r.constant).witness(top));
        let slope = r.regression.map_or(f64::NAN, |f| f.slope);
        report.check(Check::at_least(format!("slope_gamma{g}"), slope, suite.min_slope).witness(&r.regression));
        rows.extend(r.samples.iter().map(|s| [g, s.initial_norm, s.final_norm, s.ratio]));
    }
    if let Some(cc) = &suite.contractive {
        let f = NonlinearitySpec::new(cc.coefficients.clone())?;
        let sub = ProblemSpec::new(cc.lambda, f.clone(), c.forcing()?)?;
        let d = decompose(&f, &cc.constants.build()?, &c.scan_spec()?)?;
        let mu = gronwall_rate(d.l2, cc.lambda);
        report.check(Check::below("contractive_regime", d.l2, cc.lambda).witness(json!({ "lambda": cc.lambda })));
        let pairs = pair_sweep(&domain, ctx.seed ^ 0xC2, cc.pairs, suite.base_l2, lo, hi)?;
        let r = smoothing_sweep(&[2.0], &pairs, &sub, &cfg)?.remove(0);
        let (i, _) = argmax(r.samples.iter().map(|s| s.ratio));
        report.check(Check::at_most("c2_contractive", r.constant, mu.exp() * (1.0 + cc.tolerance)).witness(r.samples.get(i)));
        report.put("contractive", json!({ "l2": d.l2, "mu": mu, "c2": r.constant, "samples": r.samples.len() }));
    }
    ctx.csv("smoothing.csv", &["gamma", "initial_norm", "final_norm", "ratio"], &rows)?;
    report.put("ensemble", json!({ "swept": swept, "cloud": ensemble.len() - swept, "total": ensemble.len() }));
    report.put("gammas", reports.iter().map(smoothing_entry).collect::<Vec<_>>());
    Ok(report)
}

pub fn h1_smoothing(ctx: &Context) -> SuiteResult {
    let c = ctx.config;
    let suite = c.suites.h1_smoothing.clone().ok_or(CliError::MissingSuite("h1_smoothing"))?;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let cfg = c.solver_config()?;
    let [lo, hi] = suite.norm_range;
    let ensemble = pair_sweep(&domain, ctx.seed, suite.pairs, suite.base_l2, lo, hi)?;
    let mut report = SuiteReport::new("h1_smoothing");
    let fit = match h1_smoothing_fit(&ensemble, &problem, &cfg, &c.growth_constants()?, &c.scan_spec()?) {
        Ok(f) => f,
        Err(Error::NotCertified(reason)) => {
            report.check(Check::holds("derivative_growth_certified", false).witness(reason));
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let target = 1.0 / (fit.p - 1.0) - suite.slope_tolerance;
    let worst = argmax(fit.samples.iter().map(|s| s.gradient_norm.powi(2) / fit.bound(s.initial_norm))).0;
    report.check(Check::at_most("bound_dominates", fit.max_ratio, 1.0 + 1e-12).witness(fit.samples.get(worst)));
    let slope = fit.regression.map_or(f64::NAN, |r| r.slope);
    report.check(Check::at_least("slope", slope, target).witness(&fit.regression));
    let small = fit.small_norm_regression.map_or(f64::NAN, |r| r.slope);
    report.check(Check::at_least("small_norm_slope", small, target).witness(&fit.small_norm_regression).diagnostic());
    report.check(Check::at_most("holder_violations", fit.holder_violations as f64, 0.0).diagnostic());
    let rows: Vec<[f64; 2]> = fit.samples.iter().map(|s| [s.initial_norm, s.gradient_norm]).collect();
    ctx.csv("h1_smoothing.csv", &["initial_norm", "gradient_norm"], &rows)?;
    report.put("fit", &fit);
    Ok(report)
}
