//! Exponent recursions and empirical constants of the smoothing estimates.
//!
//! Everything here measures quantities along numerically integrated
//! trajectories; the reported constants are the smallest ones consistent with
//! the samples, not analytic bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{power_sum, DomainSpec, Field, SineTransform};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::nonlinearity::{certify_f_add, DissipativityConstants, LipschitzGrowthConstants, ScanSpec};
use crate::profiles::{ensemble_member, member_rng};
use crate::solver::{solve_observed, solve_pair_observed, PairTrajectory, ProblemSpec, SolverConfig, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEntry {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    /// `p * a_k`, the Lebesgue exponent controlled at level `k`.
    pub pa: f64,
    /// `p * a_k * b_k`, the time weight exponent.
    pub pab: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub p: f64,
    pub entries: Vec<ExponentEntry>,
}

/// `a_1 = b_1 = 1`, `a_{k+1} = a_k + (p-2)/p`,
/// `b_{k+1} = a_k b_k / a_{k+1} + 2 / (p a_{k+1})`.
pub fn exponent_table(p: f64, levels: usize) -> Result<ExponentTable> {
    if !(p.is_finite() && p > 2.0) {
        return Err(Error::param("p", format!("must exceed 2, got {p}")));
    }
    if levels == 0 {
        return Err(Error::param("levels", "must be at least 1"));
    }
    let mut entries = Vec::with_capacity(levels);
    let (mut a, mut b) = (1.0f64, 1.0f64);
    for k in 1..=levels {
        entries.push(ExponentEntry {
            k,
            a,
            b,
            pa: p * a,
            pab: p * a * b,
        });
        let next = a + (p - 2.0) / p;
        b = a * b / next + 2.0 / (p * next);
        a = next;
    }
    Ok(ExponentTable { p, entries })
}

impl ExponentTable {
    pub fn levels(&self) -> usize {
        self.entries.len()
    }

    /// Entry for level `k` (1-based).
    pub fn level(&self, k: usize) -> Result<&ExponentEntry> {
        k.checked_sub(1)
            .and_then(|i| self.entries.get(i))
            .ok_or_else(|| Error::param("k", format!("level {k} outside 1..={}", self.levels())))
    }

    /// `(2p - 2) / p`.
    pub fn a2(&self) -> f64 {
        (2.0 * self.p - 2.0) / self.p
    }

    /// `(p + 2) / (2p - 2)`.
    pub fn b2(&self) -> f64 {
        (self.p + 2.0) / (2.0 * self.p - 2.0)
    }

    /// Largest `|p a_k b_k - (p + 2(k-1))|` over the table.
    pub fn identity_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| (e.pab - (self.p + 2.0 * (e.k as f64 - 1.0))).abs())
            .fold(0.0, f64::max)
    }

    /// `(1 + p a_2 b_2) * 2 / (p a_2) - 2r` with `r = (p+3)/(2p-2)`, which
    /// makes `s^(2r) ||u||^2_(2p-2)` equal to `(s ||s^(b_2) u||^(pa_2)_(pa_2))^(2/(pa_2))`.
    pub fn bridge_residual(&self) -> f64 {
        let r = (self.p + 3.0) / (2.0 * self.p - 2.0);
        let (a2, b2) = (self.a2(), self.b2());
        (1.0 + self.p * a2 * b2) * 2.0 / (self.p * a2) - 2.0 * r
    }
}

/// Supremum over time of one bounded quotient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub k: usize,
    /// Lebesgue exponent `p a_k`.
    pub exponent: f64,
    pub sup: f64,
    pub argmax_time: f64,
    pub argmax_member: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpBoundMember {
    pub initial_l2: f64,
    pub initial_lp: f64,
    /// `||u(eps)||_p`.
    pub lp_at_eps: f64,
    /// Per-level supremum of the quotient for this member.
    pub sups: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpBoundReport {
    pub eps: f64,
    pub horizon: f64,
    pub bounds: Vec<BoundEntry>,
    pub members: Vec<LpBoundMember>,
}

impl LpBoundReport {
    pub fn all_finite(&self) -> bool {
        self.bounds.iter().all(|b| b.sup.is_finite())
    }
}

/// Horizon of the higher-integrability runs.
pub const LP_BOUND_HORIZON: f64 = 2.0;

/// Integrates every member to `t = 2` and, for `k <= k_max`, takes the
/// supremum over `t in (eps, 2]` of
/// `||u(t)||^(pa_k)_(pa_k) / (e^(-lambda t)||u0||^2 + ||g||^(q_k)_(q_k) + 1)`
/// with `q_k = p a_(k+1) / (p-1)`.
pub fn verify_lp_bound(
    problem: &ProblemSpec,
    constants: &DissipativityConstants,
    eps: f64,
    family: &[Field],
    k_max: usize,
    cfg: &SolverConfig,
) -> Result<LpBoundReport> {
    constants.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if family.is_empty() {
        return Err(Error::param("family", "must not be empty"));
    }
    let p = constants.p;
    let table = exponent_table(p, k_max + 1)?;
    let forcing: Vec<f64> = (1..=k_max)
        .map(|k| {
            let q = table.level(k + 1).map(|e| e.pa / (p - 1.0))?;
            problem.forcing().lebesgue_power(q)
        })
        .collect::<Result<_>>()?;
    let cfg = cfg.with_t_end(LP_BOUND_HORIZON);
    let lambda = problem.lambda();
    let vol = problem.domain().cell_volume();
    let exponents: Vec<f64> = (1..=k_max).map(|k| table.entries[k - 1].pa).collect();
    let members: Vec<(LpBoundMember, Vec<f64>)> = family
        .par_iter()
        .map(|u0| {
            let init = u0.l2_norm().powi(2);
            let mut sups = vec![0.0f64; k_max];
            let mut args = vec![0.0f64; k_max];
            let mut lp_at_eps = None;
            solve_observed(u0, problem, &cfg, |t, v| {
                if lp_at_eps.is_none() && t >= eps - 1e-12 {
                    lp_at_eps = Some((vol * power_sum(v, p)).powf(1.0 / p));
                }
                if t <= eps + 1e-12 {
                    return;
                }
                let base = (-lambda * t).exp() * init + 1.0;
                for (i, &e) in exponents.iter().enumerate() {
                    let q = vol * power_sum(v, e) / (base + forcing[i]);
                    if q > sups[i] {
                        sups[i] = q;
                        args[i] = t;
                    }
                }
            })?;
            Ok((
                LpBoundMember {
                    initial_l2: u0.l2_norm(),
                    initial_lp: u0.lebesgue_norm(p)?,
                    lp_at_eps: lp_at_eps.unwrap_or(f64::NAN),
                    sups,
                },
                args,
            ))
        })
        .collect::<Result<_>>()?;
    let bounds = (0..k_max)
        .map(|i| {
            let (member, (m, args)) = members
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .0.sups[i].total_cmp(&b.1 .0.sups[i]))
                .expect("family is not empty");
            BoundEntry {
                k: i + 1,
                exponent: exponents[i],
                sup: m.sups[i],
                argmax_time: args[i],
                argmax_member: member,
            }
        })
        .collect();
    Ok(LpBoundReport {
        eps,
        horizon: LP_BOUND_HORIZON,
        bounds,
        members: members.into_iter().map(|m| m.0).collect(),
    })
}

/// Empirical constants of the weighted difference estimates for one pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEntry {
    pub k: usize,
    /// `sup_t t^(1 + b_k p a_k) ||d(t)||^(pa_k)_(pa_k) / ||d0||^2`.
    pub pointwise: f64,
    pub pointwise_argmax: f64,
    /// `int_0^T s^(b_(k+1) p a_(k+1)) ||d(s)||^(pa_(k+1))_(pa_(k+1)) ds / ||d0||^2`.
    pub integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    pub initial_norm: f64,
    pub horizon: f64,
    /// Largest recorded time step; at most 1e-3 for a dense record.
    pub max_interval: f64,
    pub entries: Vec<WeightedEntry>,
}

/// Streaming evaluation of the weighted quotients, fed one difference state at a time.
pub struct WeightedAccumulator {
    levels: Vec<(f64, f64, f64, f64)>,
    horizon: f64,
    vol: f64,
    norm_sq: f64,
    pointwise: Vec<(f64, f64)>,
    integral: Vec<f64>,
    last: Option<(f64, Vec<f64>)>,
    max_interval: f64,
    initial_norm: f64,
}

impl WeightedAccumulator {
    pub fn new(table: &ExponentTable, k_max: usize, domain: &DomainSpec, d0: &Field, horizon: f64) -> Result<Self> {
        if k_max == 0 || table.levels() <= k_max {
            return Err(Error::param("k_max", format!("need 1 <= k_max < {}", table.levels())));
        }
        let initial_norm = d0.l2_norm();
        if initial_norm == 0.0 {
            return Err(Error::param("d0", "initial difference must be nonzero"));
        }
        let levels = (1..=k_max)
            .map(|k| {
                let e = &table.entries[k - 1];
                let n = &table.entries[k];
                (e.pa, 1.0 + e.pab, n.pa, n.pab)
            })
            .collect();
        Ok(Self {
            levels,
            horizon,
            vol: domain.cell_volume(),
            norm_sq: initial_norm * initial_norm,
            pointwise: vec![(0.0, 0.0); k_max],
            integral: vec![0.0; k_max],
            last: None,
            max_interval: 0.0,
            initial_norm,
        })
    }

    pub fn observe(&mut self, t: f64, d: &[f64]) {
        if t > self.horizon + 1e-12 {
            return;
        }
        let mut integrand = Vec::with_capacity(self.levels.len());
        for (i, &(pa, weight, pa_next, weight_next)) in self.levels.iter().enumerate() {
            let point = t.powf(weight) * self.vol * power_sum(d, pa) / self.norm_sq;
            if point > self.pointwise[i].0 {
                self.pointwise[i] = (point, t);
            }
            integrand.push(t.powf(weight_next) * self.vol * power_sum(d, pa_next) / self.norm_sq);
        }
        if let Some((t0, prev)) = &self.last {
            let h = t - t0;
            self.max_interval = self.max_interval.max(h);
            for ((acc, a), b) in self.integral.iter_mut().zip(prev).zip(&integrand) {
                *acc += 0.5 * h * (a + b);
            }
        }
        self.last = Some((t, integrand));
    }

    pub fn finish(self) -> WeightedReport {
        let entries = self
            .pointwise
            .iter()
            .zip(&self.integral)
            .enumerate()
            .map(|(i, (&(sup, arg), &integral))| WeightedEntry {
                k: i + 1,
                pointwise: sup,
                pointwise_argmax: arg,
                integral,
            })
            .collect();
        WeightedReport {
            initial_norm: self.initial_norm,
            horizon: self.horizon,
            max_interval: self.max_interval,
            entries,
        }
    }
}

/// Weighted quotients on the recorded times of `pair` up to `horizon`.
pub fn verify_weighted(pair: &PairTrajectory, table: &ExponentTable, k_max: usize, horizon: f64) -> Result<WeightedReport> {
    let d = &pair.difference;
    if d.is_empty() || d.final_time() < horizon - 1e-12 {
        return Err(Error::param("horizon", "pair does not reach the horizon"));
    }
    let d0 = pair.initial_difference();
    let mut acc = WeightedAccumulator::new(table, k_max, d0.domain(), d0, horizon)?;
    for (t, s) in d.times.iter().zip(&d.states) {
        acc.observe(*t, s.values());
    }
    Ok(acc.finish())
}

/// Weighted quotients from a pair integration observed at every step.
pub fn weighted_quotients(
    u20: &Field,
    d0: &Field,
    problem: &ProblemSpec,
    cfg: &SolverConfig,
    table: &ExponentTable,
    k_max: usize,
) -> Result<WeightedReport> {
    let mut acc = WeightedAccumulator::new(table, k_max, problem.domain(), d0, cfg.t_end)?;
    solve_pair_observed(u20, d0, problem, cfg, |t, _, d| acc.observe(t, d))?;
    Ok(acc.finish())
}

/// `mu = max(2(l2 - lambda), 1)`.
pub fn gronwall_rate(l2: f64, lambda: f64) -> f64 {
    (2.0 * (l2 - lambda)).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub rate: f64,
    /// `max_t ||d(t)||^2 / (e^(mu t) ||d0||^2)`.
    pub worst_ratio: f64,
    pub argmax_time: f64,
    /// Largest relative increase of `||d||` between consecutive records.
    pub max_increase: f64,
}

pub fn gronwall_check(difference: &Trajectory, rate: f64) -> Result<GronwallReport> {
    let d0 = difference.states.first().ok_or_else(|| Error::param("difference", "empty"))?;
    let n0 = d0.l2_norm().powi(2);
    if n0 == 0.0 {
        return Err(Error::param("difference", "initial difference must be nonzero"));
    }
    let mut out = GronwallReport {
        rate,
        worst_ratio: 0.0,
        argmax_time: 0.0,
        max_increase: f64::NEG_INFINITY,
    };
    let mut prev = d0.l2_norm();
    for (t, s) in difference.times.iter().zip(&difference.states) {
        let n = s.l2_norm();
        let ratio = n * n / ((rate * t).exp() * n0);
        if ratio > out.worst_ratio {
            out.worst_ratio = ratio;
            out.argmax_time = *t;
        }
        if *t > 0.0 {
            out.max_increase = out.max_increase.max((n - prev) / prev);
        }
        prev = n;
    }
    Ok(out)
}

/// Same quotients as [`gronwall_check`], evaluated after every step of a pair integration.
pub fn gronwall_pair(u20: &Field, d0: &Field, problem: &ProblemSpec, cfg: &SolverConfig, rate: f64) -> Result<GronwallReport> {
    let n0 = d0.l2_norm().powi(2);
    if n0 == 0.0 {
        return Err(Error::param("difference", "initial difference must be nonzero"));
    }
    let vol = problem.domain().cell_volume();
    let mut out = GronwallReport {
        rate,
        worst_ratio: 0.0,
        argmax_time: 0.0,
        max_increase: f64::NEG_INFINITY,
    };
    let mut prev = n0.sqrt();
    solve_pair_observed(u20, d0, problem, cfg, |t, _, d| {
        let sq = vol * power_sum(d, 2.0);
        let ratio = sq / ((rate * t).exp() * n0);
        if ratio > out.worst_ratio {
            out.worst_ratio = ratio;
            out.argmax_time = t;
        }
        let n = sq.sqrt();
        if t > 0.0 {
            out.max_increase = out.max_increase.max((n - prev) / prev);
        }
        prev = n;
    })?;
    Ok(out)
}

/// One ensemble member of a smoothing sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSample {
    pub initial_norm: f64,
    /// `||d(1)||_gamma`.
    pub final_norm: f64,
    /// `||d(1)||_gamma^gamma / ||d0||^2`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub gamma: f64,
    pub samples: Vec<SmoothingSample>,
    /// Largest sampled ratio.
    pub constant: f64,
    /// Regression of `log ||d(1)||_gamma^gamma` on `log ||d0||^2`.
    pub regression: Option<LinearFit>,
}

impl SmoothingReport {
    /// `(c^(1/gamma), 2/gamma)`, so that `||M(a) - M(b)||_gamma <= L ||a - b||^delta`.
    pub fn holder_constants(&self) -> (f64, f64) {
        (self.constant.powf(1.0 / self.gamma), 2.0 / self.gamma)
    }
}

/// Time of the smoothing comparison.
pub const SMOOTHING_TIME: f64 = 1.0;

fn final_differences(ensemble: &[(Field, Field)], problem: &ProblemSpec, cfg: &SolverConfig) -> Result<Vec<(f64, Field)>> {
    let cfg = cfg.with_t_end(SMOOTHING_TIME);
    ensemble
        .par_iter()
        .filter(|(_, d0)| d0.max_abs() > 0.0)
        .map(|(u20, d0)| {
            let (_, d1) = solve_pair_observed(u20, d0, problem, &cfg, |_, _, _| {})?;
            Ok((d0.l2_norm(), d1))
        })
        .collect()
}

/// Evaluates every exponent in `gammas` on the same ensemble runs.
pub fn smoothing_sweep(
    gammas: &[f64],
    ensemble: &[(Field, Field)],
    problem: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Vec<SmoothingReport>> {
    if let Some(g) = gammas.iter().find(|g| !(**g >= 2.0 && g.is_finite())) {
        return Err(Error::param("gamma", format!("must be >= 2, got {g}")));
    }
    let finals = final_differences(ensemble, problem, cfg)?;
    gammas
        .iter()
        .map(|&gamma| {
            let samples = finals
                .iter()
                .map(|(n0, d1)| {
                    let power = d1.lebesgue_power(gamma)?;
                    Ok(SmoothingSample {
                        initial_norm: *n0,
                        final_norm: power.powf(1.0 / gamma),
                        ratio: power / (n0 * n0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let constant = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
            let usable: Vec<&SmoothingSample> = samples.iter().filter(|s| s.final_norm > 0.0).collect();
            let regression = if usable.len() >= 2 {
                let x: Vec<f64> = usable.iter().map(|s| 2.0 * s.initial_norm.ln()).collect();
                let y: Vec<f64> = usable.iter().map(|s| gamma * s.final_norm.ln()).collect();
                linear_fit(&x, &y).ok()
            } else {
                None
            };
            Ok(SmoothingReport {
                gamma,
                samples,
                constant,
                regression,
            })
        })
        .collect()
}

pub fn smoothing_constant(
    gamma: f64,
    ensemble: &[(Field, Field)],
    problem: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<SmoothingReport> {
    Ok(smoothing_sweep(&[gamma], ensemble, problem, cfg)?.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub initial_norm: f64,
    /// `||grad d(1)||`.
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1SmoothingReport {
    pub p: f64,
    pub samples: Vec<GradientSample>,
    /// Coefficient of `||d0||^(2/(p-1))`.
    pub c_r: f64,
    /// Coefficient of `||d0||^2`.
    pub c: f64,
    /// Largest `||grad d(1)||^2 / bound`; at most one when the bound dominates.
    pub max_ratio: f64,
    /// Smallest such ratio, a measure of how loose the fit is.
    pub min_ratio: f64,
    /// `sqrt(c_r + c)`, so that `||grad d(1)|| <= c ||d0||^(1/(p-1))` for `||d0|| <= 1`.
    pub holder_constant: f64,
    pub holder_violations: usize,
    /// Regression of `log ||grad d(1)||` on `log ||d0||` over all samples.
    pub regression: Option<LinearFit>,
    /// Same regression restricted to `||d0|| <= 1e-2`.
    pub small_norm_regression: Option<LinearFit>,
}

impl H1SmoothingReport {
    pub fn dominates(&self) -> bool {
        self.max_ratio <= 1.0 + 1e-12
    }

    pub fn bound(&self, initial_norm: f64) -> f64 {
        self.c_r * initial_norm.powf(2.0 / (self.p - 1.0)) + self.c * initial_norm * initial_norm
    }
}

/// Fits `||grad d(1)||^2 <= c_r ||d0||^(2/(p-1)) + c ||d0||^2` to the ensemble.
///
/// The pair `(c_r, c) = s (w, 1 - w)` is scaled by the smallest `s` that
/// dominates every sample, and `w` is chosen by golden section to minimise `s`.
pub fn h1_smoothing_fit(
    ensemble: &[(Field, Field)],
    problem: &ProblemSpec,
    cfg: &SolverConfig,
    growth: &LipschitzGrowthConstants,
    scan: &ScanSpec,
) -> Result<H1SmoothingReport> {
    let f = problem.nonlinearity();
    let report = certify_f_add(f, growth, scan)?;
    if let Some(bad) = report.first_failure() {
        return Err(Error::NotCertified(format!(
            "derivative growth bound fails with margin {} at s = {}",
            bad.worst_margin, bad.argmin
        )));
    }
    let p = f.p();
    let finals = final_differences(ensemble, problem, cfg)?;
    let mut transform = SineTransform::new(*problem.domain());
    let samples = finals
        .iter()
        .map(|(n0, d1)| {
            Ok(GradientSample {
                initial_norm: *n0,
                gradient_norm: transform.forward(d1)?.h1_seminorm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fit_h1(p, samples)
}

fn fit_h1(p: f64, samples: Vec<GradientSample>) -> Result<H1SmoothingReport> {
    if samples.is_empty() {
        return Err(Error::param("ensemble", "no nonzero differences"));
    }
    let q = 2.0 / (p - 1.0);
    let scale_for = |w: f64| {
        samples
            .iter()
            .map(|s| {
                let x = s.initial_norm;
                let shape = w * x.powf(q) + (1.0 - w) * x * x;
                s.gradient_norm.powi(2) / shape
            })
            .fold(0.0, f64::max)
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..100 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if scale_for(a) <= scale_for(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mut w = 0.5 * (lo + hi);
    for edge in [1e-12, 1.0] {
        if scale_for(edge) < scale_for(w) {
            w = edge;
        }
    }
    let s = scale_for(w);
    let (c_r, c) = (s * w, s * (1.0 - w));
    let mut max_ratio = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for sm in &samples {
        let x = sm.initial_norm;
        let bound = c_r * x.powf(q) + c * x * x;
        let r = sm.gradient_norm.powi(2) / bound;
        max_ratio = max_ratio.max(r);
        min_ratio = min_ratio.min(r);
    }
    let holder_constant = (c_r + c).sqrt();
    let holder_violations = samples
        .iter()
        .filter(|s| s.initial_norm <= 1.0 && s.gradient_norm > 0.0)
        .filter(|s| s.gradient_norm.ln() > s.initial_norm.ln() / (p - 1.0) + holder_constant.ln() + 1e-12)
        .count();
    let regress = |keep: &dyn Fn(&GradientSample) -> bool| {
        let (x, y): (Vec<f64>, Vec<f64>) = samples
            .iter()
            .filter(|s| s.gradient_norm > 0.0 && keep(s))
            .map(|s| (s.initial_norm.ln(), s.gradient_norm.ln()))
            .unzip();
        linear_fit(&x, &y).ok()
    };
    Ok(H1SmoothingReport {
        p,
        regression: regress(&|_| true),
        small_norm_regression: regress(&|s| s.initial_norm <= 1e-2),
        samples,
        c_r,
        c,
        max_ratio,
        min_ratio,
        holder_constant,
        holder_violations,
    })
}

/// `count` pairs `(u2, d)` with `||u2|| = base_l2` and `||d||` log-spaced
/// on `[min_norm, max_norm]`; every member draws from its own stream.
pub fn pair_sweep(
    domain: &DomainSpec,
    seed: u64,
    count: usize,
    base_l2: f64,
    min_norm: f64,
    max_norm: f64,
) -> Result<Vec<(Field, Field)>> {
    if !(min_norm > 0.0 && max_norm >= min_norm) {
        return Err(Error::param("min_norm", "need 0 < min_norm <= max_norm"));
    }
    (0..count)
        .map(|i| {
            let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let norm = min_norm * (max_norm / min_norm).powf(frac);
            let (_, base) = ensemble_member(domain, seed, 2 * i as u64, base_l2)?;
            let (_, dir) = ensemble_member(domain, seed, 2 * i as u64 + 1, norm)?;
            Ok((base, dir))
        })
        .collect()
}

/// `count` fields of norm drawn uniformly in `[0, max_l2]`, mixed families.
pub fn initial_ensemble(domain: &DomainSpec, seed: u64, count: usize, max_l2: f64) -> Result<Vec<Field>> {
    use rand::Rng;
    (0..count)
        .map(|i| {
            let mut rng = member_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i as u64);
            let norm = max_l2 * rng.gen_range(0.05..1.0);
            Ok(ensemble_member(domain, seed, i as u64, norm)?.1)
        })
        .collect()
}
