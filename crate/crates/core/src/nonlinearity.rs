//! Polynomial nonlinearities, certification of the dissipativity conditions,
//! and the splitting `f = f1 + f2` into a strictly monotone power part and a
//! remainder that keeps the dissipativity structure.
//!
//! The conditions certified here, for constants `(p, kappa, l, alpha, beta, sigma)`:
//!
//! ```text
//! (f1)  f'(s)  >= kappa |s|^(p-2) - l
//! (f2)  f(s) s >= alpha |s|^p - beta
//! (f3)  |f(s)| <= sigma |s|^(p-1) + sigma
//! (2.4) alpha  <= kappa / (p-1)
//! ```
//!
//! Each condition is scanned on a symmetric grid and, beyond the grid, checked
//! by a leading-term dominance bound on every sign branch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialPoly;

/// Scan margins down to this value count as satisfied.
pub const MARGIN_TOLERANCE: f64 = 1e-12;

const MAX_DEGREE: usize = 31;

/// A polynomial nonlinearity `f(s) = sum_j b_j s^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    /// `b_0, b_1, ..., b_n` in ascending powers.
    coefficients: Vec<f64>,
    /// Growth exponent `p`; defaults to `degree + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_override: Option<f64>,
}

impl NonlinearitySpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coefficients", "must be finite"));
        }
        let mut coefficients = coefficients;
        while coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        if coefficients.len() > MAX_DEGREE + 1 {
            return Err(Error::param("coefficients", format!("degree above {MAX_DEGREE}")));
        }
        Ok(Self {
            coefficients,
            p_override: None,
        })
    }

    /// `f(s) = s^3 - beta s`.
    pub fn chafee_infante(beta: f64) -> Self {
        Self::new(vec![0.0, -beta, 0.0, 1.0]).expect("finite coefficients")
    }

    /// `f(s) = c s`.
    pub fn linear(c: f64) -> Self {
        Self::new(vec![0.0, c]).expect("finite coefficients")
    }

    pub fn zero() -> Self {
        Self::new(Vec::new()).expect("empty polynomial")
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p_override = Some(p);
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn p(&self) -> f64 {
        self.p_override.unwrap_or((self.degree() + 1) as f64)
    }

    pub fn leading(&self) -> f64 {
        self.coefficients.last().copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Requires `p > 2` and a positive leading coefficient.
    pub fn require_dissipative_shape(&self) -> Result<()> {
        let p = self.p();
        if !(p > 2.0) {
            return Err(Error::param("p", format!("must exceed 2, got {p}")));
        }
        if !(self.leading() > 0.0) {
            return Err(Error::param("coefficients", "leading coefficient must be positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &b| acc * s + b)
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        let n = self.coefficients.len();
        (1..n).rev().fold(0.0, |acc, j| acc * s + j as f64 * self.coefficients[j])
    }

    pub fn evaluate(&self, s: f64) -> Result<f64> {
        finite_or_overflow(self.value(s), s)
    }

    pub fn evaluate_derivative(&self, s: f64) -> Result<f64> {
        finite_or_overflow(self.derivative(s), s)
    }

    /// `f(a + h) - f(a)` without cancellation: the Taylor expansion at `a`
    /// with every term carrying a factor of `h`.
    #[inline]
    pub fn difference(&self, a: f64, h: f64) -> f64 {
        let n = self.coefficients.len();
        if n < 2 {
            return 0.0;
        }
        // descending coefficients, then repeated synthetic division by (s - a)
        let mut d = [0.0f64; MAX_DEGREE + 1];
        for (slot, &b) in d.iter_mut().zip(self.coefficients.iter().rev()) {
            *slot = b;
        }
        let deg = n - 1;
        for i in 0..deg {
            for j in 1..=deg - i {
                d[j] += a * d[j - 1];
            }
        }
        // d[deg - i] is the i-th Taylor coefficient
        let mut acc = 0.0;
        for i in (1..=deg).rev() {
            acc = acc * h + d[deg - i];
        }
        acc * h
    }

    pub fn exact_difference(&self, a: f64, h: f64) -> Result<f64> {
        if !(a.is_finite() && h.is_finite()) {
            return Err(Error::param("s", "arguments must be finite"));
        }
        finite_or_overflow(self.difference(a, h), a + h)
    }

    /// Polynomial restricted to `s = sign * r`, as a sum of powers of `r`.
    pub(crate) fn branch(&self, sign: f64) -> Branch {
        let value = RadialPoly::new(
            self.coefficients
                .iter()
                .enumerate()
                .map(|(j, &b)| (j as f64, b * sign.powi(j as i32)))
                .collect(),
        );
        let derivative = RadialPoly::new(
            self.coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &b)| ((j - 1) as f64, j as f64 * b * sign.powi(j as i32 - 1)))
                .collect(),
        );
        Branch { sign, value, derivative }
    }

    pub(crate) fn branches(&self) -> [Branch; 2] {
        [self.branch(-1.0), self.branch(1.0)]
    }
}

fn finite_or_overflow(v: f64, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { at })
    }
}

/// A scalar function on one sign branch `s = sign * r`, `r >= 0`.
#[derive(Clone, Debug)]
pub(crate) struct Branch {
    sign: f64,
    value: RadialPoly,
    derivative: RadialPoly,
}

impl Branch {
    fn minus(&self, other: &Branch) -> Branch {
        debug_assert_eq!(self.sign, other.sign);
        Branch {
            sign: self.sign,
            value: self.value.minus(&other.value),
            derivative: self.derivative.minus(&other.derivative),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativityConstants {
    pub p: f64,
    pub kappa: f64,
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl DissipativityConstants {
    pub fn new(p: f64, kappa: f64, l: f64, alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        let c = Self { p, kappa, l, alpha, beta, sigma };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 2.0) {
            return Err(Error::InvalidConstants(format!("p must exceed 2, got {}", self.p)));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("l", self.l),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma", self.sigma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConstants(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `kappa / (p - 1) - alpha`; nonnegative when (2.4) holds.
    pub fn kappa_alpha_margin(&self) -> f64 {
        self.kappa / (self.p - 1.0) - self.alpha
    }
}

/// Constants of the derivative growth bound `|f'(s)| <= kappa0 |s|^(p-2) + l0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzGrowthConstants {
    pub kappa0: f64,
    pub l0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Scan covers `[-half_width, half_width]`.
    pub half_width: f64,
    pub step: f64,
}

impl ScanSpec {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        let s = Self { half_width, step };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width >= 1.0) {
            return Err(Error::InvalidScan(format!("half width must be >= 1, got {}", self.half_width)));
        }
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= self.half_width) {
            return Err(Error::InvalidScan(format!("step must be in (0, half width], got {}", self.step)));
        }
        if self.half_width / self.step > 1e8 {
            return Err(Error::InvalidScan("more than 1e8 scan points".into()));
        }
        Ok(())
    }

    /// Number of grid points on each half line, origin excluded.
    fn count(&self) -> usize {
        (self.half_width / self.step + 1e-9).floor() as usize
    }

    /// Scan points `r = i * step`, `i = 0..=count`.
    fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.count()).map(move |i| i as f64 * self.step)
    }

    /// Scan range must reach past the region where lower-order terms matter:
    /// `S >= 2 sum_j |b_j| / b_lead`.
    fn require_dominance(&self, value: &RadialPoly) -> Result<()> {
        let Some((_, lead)) = value.leading() else {
            return Ok(());
        };
        let needed = 2.0 * value.coefficient_sum_abs() / lead.abs();
        if self.half_width < needed {
            return Err(Error::InvalidScan(format!(
                "half width {} below the dominance threshold {needed}",
                self.half_width
            )));
        }
        Ok(())
    }
}

/// Outcome for one inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    /// Minimum over the scan of `rhs - lhs` arranged so that nonnegative means satisfied.
    pub worst_margin: f64,
    /// Scan point where the worst margin occurs.
    pub argmin: f64,
    /// Whether the inequality is certified for `|s|` beyond the scan.
    pub tail_certified: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub conditions: Vec<ConditionResult>,
    pub scan: ScanSpec,
    pub pass: bool,
}

impl CertificationReport {
    fn from_conditions(conditions: Vec<ConditionResult>, scan: ScanSpec) -> Self {
        let pass = conditions.iter().all(|c| c.pass);
        Self { conditions, scan, pass }
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// First failing condition, if any.
    pub fn first_failure(&self) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| !c.pass)
    }
}

/// Scans `margin(branch, r)` over both branches and records the minimum.
fn scan_margin<F>(name: &str, branches: &[Branch; 2], scan: &ScanSpec, tail: bool, margin: F) -> ConditionResult
where
    F: Fn(&Branch, f64) -> f64,
{
    let mut worst = f64::INFINITY;
    let mut argmin = 0.0;
    for b in branches {
        for r in scan.radii() {
            let m = margin(b, r);
            if m < worst || m.is_nan() {
                worst = m;
                argmin = b.sign * r;
            }
        }
    }
    let pass = worst >= -MARGIN_TOLERANCE && tail;
    ConditionResult {
        name: name.to_string(),
        worst_margin: worst,
        argmin,
        tail_certified: tail,
        pass,
    }
}

fn power(p: f64, c: f64) -> RadialPoly {
    RadialPoly::term(p, c)
}

/// Certifies (f1)-(f3) and (2.4) for the function described by `branches`.
fn certify_branches(names: [&str; 4], branches: &[Branch; 2], c: &DissipativityConstants, scan: &ScanSpec) -> CertificationReport {
    let p = c.p;
    let start = scan.half_width;

    // (f1): f'(s) - kappa r^(p-2) + l
    let f1: Vec<RadialPoly> = branches
        .iter()
        .map(|b| b.derivative.minus(&power(p - 2.0, c.kappa)).plus(&RadialPoly::constant(c.l)))
        .collect();
    let tail = f1.iter().all(|m| m.nonnegative_beyond(start));
    let r1 = scan_margin(names[0], branches, scan, tail, |b, r| f1[side(b)].eval(r));

    // (f2): f(s) s - alpha r^p + beta, with f(s) s = sign r f(sign r)
    let f2: Vec<RadialPoly> = branches
        .iter()
        .map(|b| {
            b.value
                .shifted(1.0)
                .scaled(b.sign)
                .minus(&power(p, c.alpha))
                .plus(&RadialPoly::constant(c.beta))
        })
        .collect();
    let tail = f2.iter().all(|m| m.nonnegative_beyond(start));
    let r2 = scan_margin(names[1], branches, scan, tail, |b, r| f2[side(b)].eval(r));

    // (f3): sigma r^(p-1) + sigma - |f(s)|
    let bound = power(p - 1.0, c.sigma).plus(&RadialPoly::constant(c.sigma));
    let tail = branches
        .iter()
        .all(|b| bound.minus(&b.value.abs_coefficients()).nonnegative_beyond(start));
    let r3 = scan_margin(names[2], branches, scan, tail, |b, r| bound.eval(r) - b.value.eval(r).abs());

    let m4 = c.kappa_alpha_margin();
    let r4 = ConditionResult {
        name: names[3].to_string(),
        worst_margin: m4,
        argmin: 0.0,
        tail_certified: true,
        pass: m4 >= -MARGIN_TOLERANCE,
    };
    CertificationReport::from_conditions(vec![r1, r2, r3, r4], *scan)
}

fn side(b: &Branch) -> usize {
    usize::from(b.sign > 0.0)
}

/// Certifies (f1)-(f3) and (2.4) for `f` with constants `c` on the scan range.
pub fn certify_conditions(f: &NonlinearitySpec, c: &DissipativityConstants, scan: &ScanSpec) -> Result<CertificationReport> {
    f.require_dissipative_shape()?;
    c.validate()?;
    scan.validate()?;
    let branches = f.branches();
    scan.require_dominance(&branches[1].value)?;
    Ok(certify_branches(["f1", "f2", "f3", "kappa_alpha"], &branches, c, scan))
}

/// Certifies `|f'(s)| <= kappa0 |s|^(p-2) + l0`.
pub fn certify_f_add(f: &NonlinearitySpec, k: &LipschitzGrowthConstants, scan: &ScanSpec) -> Result<CertificationReport> {
    f.require_dissipative_shape()?;
    scan.validate()?;
    if !(k.kappa0 > 0.0 && k.l0 > 0.0) {
        return Err(Error::InvalidConstants("kappa0 and l0 must be positive".into()));
    }
    let branches = f.branches();
    scan.require_dominance(&branches[1].value)?;
    let bound = power(f.p() - 2.0, k.kappa0).plus(&RadialPoly::constant(k.l0));
    let tail = branches
        .iter()
        .all(|b| bound.minus(&b.derivative.abs_coefficients()).nonnegative_beyond(scan.half_width));
    let r = scan_margin("f_add", &branches, scan, tail, |b, r| bound.eval(r) - b.derivative.eval(r).abs());
    Ok(CertificationReport::from_conditions(vec![r], *scan))
}

/// Numerical estimates of the constants in
/// `||a|^(p-2)a - |b|^(p-2)b| <= c1 (|a|+|b|)^(p-2) |a-b|` and
/// `(|a|^(p-2)a - |b|^(p-2)b)(a-b) >= c4 |a-b|^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityConstants {
    pub p: f64,
    /// Sampled supremum inflated by 1%.
    pub c1: f64,
    /// Sampled infimum deflated by 1%.
    pub c4: f64,
    pub c1_raw: f64,
    pub c4_raw: f64,
    /// Pair `(a, b)` attaining the sampled infimum.
    pub c4_argmin: (f64, f64),
    pub samples: usize,
}

fn signed_power(s: f64, q: f64) -> f64 {
    s.abs().powf(q) * s
}

/// Samples the two homogeneous ratios on the unit circle, on a log-spaced
/// grid of ratios `b/a`, and on random pairs.
pub fn monotonicity_constant_oracle(p: f64, samples: usize) -> Result<MonotonicityConstants> {
    if !(p.is_finite() && p > 2.0) {
        return Err(Error::param("p", format!("must exceed 2, got {p}")));
    }
    if samples < 16 {
        return Err(Error::param("samples", "need at least 16"));
    }
    let q = p - 2.0;
    let mut c4 = (f64::INFINITY, (0.0, 0.0));
    let mut c1 = 0.0f64;
    let mut visit = |a: f64, b: f64| {
        let d = a - b;
        let scale = a.abs().max(b.abs());
        if scale == 0.0 || d.abs() <= 1e-7 * scale {
            return;
        }
        let num = signed_power(a, q) - signed_power(b, q);
        let mono = num * d / d.abs().powf(p);
        if mono < c4.0 {
            c4 = (mono, (a, b));
        }
        let growth = num.abs() / ((a.abs() + b.abs()).powf(q) * d.abs());
        c1 = c1.max(growth);
    };
    for i in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / samples as f64;
        visit(theta.cos(), theta.sin());
    }
    let per_decade = (samples / 24).max(4);
    for i in 0..=12 * per_decade {
        let t = 10f64.powf(-6.0 + i as f64 / per_decade as f64);
        for sign in [-1.0, 1.0] {
            visit(1.0, sign * t);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c4c1);
    for _ in 0..samples {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        visit(a, b);
    }
    Ok(MonotonicityConstants {
        p,
        c1: 1.01 * c1,
        c4: 0.99 * c4.0,
        c1_raw: c1,
        c4_raw: c4.0,
        c4_argmin: c4.1,
        samples,
    })
}

/// The splitting `f = f1 + f2` with `f1(s) = (alpha/2)|s|^(p-2)s - sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub p: f64,
    pub f1_scale: f64,
    pub f1_shift: f64,
    /// Strict monotonicity constant of `f1`.
    pub alpha1: f64,
    /// Growth constant of `f1` in the `(1 + |s1|^(p-2) + |s2|^(p-2))` form.
    pub sigma1: f64,
    pub kappa2: f64,
    pub l2: f64,
    pub alpha2: f64,
    pub beta2: f64,
    /// Single constant for the remainder growth bound, `max(sigma2_leading, sigma2_constant)`.
    pub sigma2: f64,
    pub sigma2_leading: f64,
    pub sigma2_constant: f64,
    /// Largest value of `f1(s)s - (3 alpha/4)|s|^p`, absorbed into `beta2`.
    pub beta_shift: f64,
    /// `kappa2/(p-1) - alpha2`.
    pub remainder_kappa_alpha_margin: f64,
    pub monotonicity: MonotonicityConstants,
    f: NonlinearitySpec,
}

impl Decomposition {
    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.f
    }

    pub fn f1(&self, s: f64) -> f64 {
        self.f1_scale * signed_power(s, self.p - 2.0) - self.f1_shift
    }

    pub fn f1_derivative(&self, s: f64) -> f64 {
        self.f1_scale * (self.p - 1.0) * s.abs().powf(self.p - 2.0)
    }

    pub fn f2(&self, s: f64) -> f64 {
        self.f.value(s) - self.f1(s)
    }

    pub fn f2_derivative(&self, s: f64) -> f64 {
        self.f.derivative(s) - self.f1_derivative(s)
    }

    fn f1_branch(&self, sign: f64) -> Branch {
        let p = self.p;
        Branch {
            sign,
            value: RadialPoly::new(vec![(p - 1.0, sign * self.f1_scale), (0.0, -self.f1_shift)]),
            derivative: RadialPoly::term(p - 2.0, self.f1_scale * (p - 1.0)),
        }
    }

    fn f2_branches(&self) -> [Branch; 2] {
        let [neg, pos] = self.f.branches();
        [neg.minus(&self.f1_branch(-1.0)), pos.minus(&self.f1_branch(1.0))]
    }

    /// Constants `(kappa2, l2, alpha2, beta2, sigma2)` of the remainder.
    pub fn remainder_constants(&self) -> DissipativityConstants {
        DissipativityConstants {
            p: self.p,
            kappa: self.kappa2,
            l: self.l2,
            alpha: self.alpha2,
            beta: self.beta2,
            sigma: self.sigma2,
        }
    }

    /// Re-certifies (f21)-(f24) for `f2 = f - f1`.
    pub fn recertify(&self, scan: &ScanSpec) -> Result<CertificationReport> {
        scan.validate()?;
        Ok(certify_branches(
            ["f21", "f22", "f23", "f24"],
            &self.f2_branches(),
            &self.remainder_constants(),
            scan,
        ))
    }
}

/// Builds the splitting; `f` must certify with `c` on `scan`.
pub fn decompose(f: &NonlinearitySpec, c: &DissipativityConstants, scan: &ScanSpec) -> Result<Decomposition> {
    let mono = monotonicity_constant_oracle(c.p, 20_000)?;
    decompose_with(f, c, scan, mono)
}

pub fn decompose_with(
    f: &NonlinearitySpec,
    c: &DissipativityConstants,
    scan: &ScanSpec,
    mono: MonotonicityConstants,
) -> Result<Decomposition> {
    let report = certify_conditions(f, c, scan)?;
    if let Some(bad) = report.first_failure() {
        return Err(Error::NotCertified(format!(
            "condition {} fails with margin {} at s = {}",
            bad.name, bad.worst_margin, bad.argmin
        )));
    }
    if (mono.p - c.p).abs() > 1e-12 {
        return Err(Error::InvalidConstants(format!("monotonicity constants computed for p = {}", mono.p)));
    }
    let p = c.p;
    let kappa2 = c.kappa - 0.5 * c.alpha * (p - 1.0);
    if !(kappa2 > 0.0) {
        return Err(Error::InvalidConstants(format!("kappa2 = {kappa2} is not positive")));
    }
    let f1_scale = 0.5 * c.alpha;
    let f1_shift = c.sigma;
    let beta_shift = beta_shift(f1_scale, f1_shift, c.alpha, p);
    let alpha2 = 0.25 * c.alpha;
    let sigma2_leading = c.sigma + 0.5 * c.alpha;
    let sigma2_constant = 2.0 * c.sigma;
    // (|s1| + |s2|)^q <= max(1, 2^(q-1)) (|s1|^q + |s2|^q), q = p - 2
    let rewrite = 2f64.powf(p - 3.0).max(1.0);
    Ok(Decomposition {
        p,
        f1_scale,
        f1_shift,
        alpha1: f1_scale * mono.c4,
        sigma1: f1_scale * mono.c1 * rewrite,
        kappa2,
        l2: c.l,
        alpha2,
        beta2: c.beta + beta_shift,
        sigma2: sigma2_leading.max(sigma2_constant),
        sigma2_leading,
        sigma2_constant,
        beta_shift,
        remainder_kappa_alpha_margin: kappa2 / (p - 1.0) - alpha2,
        monotonicity: mono,
        f: f.clone(),
    })
}

/// `max_s f1(s)s - (3 alpha/4)|s|^p`, attained on the branch `s < 0` at the
/// stationary point of `shift r - (3 alpha/4 - scale) r^p`.
fn beta_shift(scale: f64, shift: f64, alpha: f64, p: f64) -> f64 {
    let decay = 0.75 * alpha - scale;
    let r = (shift / (decay * p)).powf(1.0 / (p - 1.0));
    (shift * r - decay * r.powf(p)).max(0.0)
}

/// One reported failure of a sampled inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: Vec<f64>,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `margin / scale` seen; negative values below the tolerance are violations.
    pub worst_relative_margin: f64,
    /// Up to ten offending inputs.
    pub witnesses: Vec<Violation>,
}

impl ViolationReport {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst_relative_margin: f64::INFINITY,
            witnesses: Vec::new(),
        }
    }

    fn record(&mut self, point: &[f64], lhs: f64, rhs: f64) {
        self.checked += 1;
        let margin = lhs - rhs;
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let rel = margin / scale;
        if margin == 0.0 {
            self.worst_relative_margin = self.worst_relative_margin.min(0.0);
        } else {
            self.worst_relative_margin = self.worst_relative_margin.min(rel);
        }
        if rel < -MARGIN_TOLERANCE {
            self.violations += 1;
            if self.witnesses.len() < 10 {
                self.witnesses.push(Violation {
                    point: point.to_vec(),
                    margin,
                });
            }
        }
    }

    pub fn clean(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `(f(s1)-f(s2))(s1-s2)|s1-s2|^r >= alpha1|s1-s2|^(p+r) - l2|s1-s2|^(r+2)`.
pub fn check_corollary(f: &NonlinearitySpec, d: &Decomposition, triples: &[(f64, f64, f64)]) -> Result<ViolationReport> {
    let mut report = ViolationReport::new();
    for &(s1, s2, r) in triples {
        if !(r >= 0.0) {
            return Err(Error::param("r", format!("must be nonnegative, got {r}")));
        }
        let h = s1 - s2;
        let ah = h.abs();
        let lhs = f.difference(s2, h) * h * ah.powf(r);
        let rhs = d.alpha1 * ah.powf(d.p + r) - d.l2 * ah.powf(r + 2.0);
        report.record(&[s1, s2, r], lhs, rhs);
    }
    Ok(report)
}

/// Checks `(f1(s1)-f1(s2))(s1-s2) >= alpha1|s1-s2|^p` on the given pairs.
pub fn check_f1_monotonicity(d: &Decomposition, pairs: &[(f64, f64)]) -> ViolationReport {
    let mut report = ViolationReport::new();
    for &(s1, s2) in pairs {
        let h = s1 - s2;
        let lhs = (d.f1(s1) - d.f1(s2)) * h;
        let rhs = d.alpha1 * h.abs().powf(d.p);
        report.record(&[s1, s2], lhs, rhs);
    }
    report
}

/// Checks `|f1(s1)-f1(s2)| <= sigma1|s1-s2|(1+|s1|^(p-2)+|s2|^(p-2))` on the given pairs.
pub fn check_f1_growth(d: &Decomposition, pairs: &[(f64, f64)]) -> ViolationReport {
    let mut report = ViolationReport::new();
    let q = d.p - 2.0;
    for &(s1, s2) in pairs {
        let lhs = d.sigma1 * (s1 - s2).abs() * (1.0 + s1.abs().powf(q) + s2.abs().powf(q));
        let rhs = (d.f1(s1) - d.f1(s2)).abs();
        report.record(&[s1, s2], lhs, rhs);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cubic() -> NonlinearitySpec {
        NonlinearitySpec::new(vec![0.0, -1.0, 0.0, 1.0]).unwrap()
    }

    fn reference_constants() -> DissipativityConstants {
        DissipativityConstants::new(4.0, 3.0, 1.0, 0.5, 0.5, 2.0).unwrap()
    }

    fn scan() -> ScanSpec {
        ScanSpec::new(50.0, 1e-3).unwrap()
    }

    #[test]
    fn evaluation() {
        let f = cubic();
        assert_eq!(f.value(1.0), 0.0);
        assert_eq!(f.value(2.0), 6.0);
        assert_eq!(f.derivative(0.0), -1.0);
        assert_eq!(f.p(), 4.0);
        assert!(matches!(f.evaluate(1e200), Err(Error::Overflow { .. })));
    }

    #[test]
    fn exact_difference_small_increment() {
        let f = NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.exact_difference(1.0, 0.0).unwrap(), 0.0);
        let d = f.exact_difference(1.0, 1e-12).unwrap();
        let expected = 3e-12 + 3e-24 + 1e-36;
        assert!(((d - expected) / expected).abs() < 4.0 * f64::EPSILON, "{d}");
        let g = cubic();
        for t in [-3.0, -0.5, 0.25, 7.0] {
            assert_relative_eq!(g.exact_difference(0.0, t).unwrap(), t * t * t - t, max_relative = 1e-15);
        }
    }

    #[test]
    fn certifies_reference_cubic() {
        let r = certify_conditions(&cubic(), &reference_constants(), &scan()).unwrap();
        assert!(r.pass, "{r:?}");
        for c in &r.conditions {
            assert!(c.worst_margin >= -1e-12 && c.tail_certified, "{c:?}");
        }
    }

    #[test]
    fn alpha_too_large_fails_f2() {
        let c = DissipativityConstants { alpha: 2.0, ..reference_constants() };
        let r = certify_conditions(&cubic(), &c, &scan()).unwrap();
        assert!(!r.pass);
        let f2 = r.condition("f2").unwrap();
        assert!(!f2.pass && !f2.tail_certified);
    }

    #[test]
    fn kappa_alpha_boundary() {
        let c = DissipativityConstants { alpha: 1.0, ..reference_constants() };
        let r = certify_conditions(&cubic(), &c, &scan()).unwrap();
        let k = r.condition("kappa_alpha").unwrap();
        assert_eq!(k.worst_margin, 0.0);
        assert!(k.pass);
    }

    #[test]
    fn scan_validation() {
        assert!(ScanSpec::new(0.5, 0.1).is_err());
        assert!(ScanSpec::new(10.0, 0.0).is_err());
        let narrow = ScanSpec::new(2.0, 1e-2).unwrap();
        assert!(matches!(
            certify_conditions(&cubic(), &reference_constants(), &narrow),
            Err(Error::InvalidScan(_))
        ));
    }

    #[test]
    fn monotonicity_constants_reference_values() {
        let m4 = monotonicity_constant_oracle(4.0, 20_000).unwrap();
        assert!((m4.c4_raw - 0.25).abs() < 1e-6, "{m4:?}");
        let (a, b) = m4.c4_argmin;
        assert!((a + b).abs() < 1e-3 * a.abs().max(b.abs()));
        let m3 = monotonicity_constant_oracle(3.0, 20_000).unwrap();
        assert!((m3.c4_raw - 0.5).abs() < 1e-6, "{m3:?}");
        assert_relative_eq!(m3.c4, 0.99 * m3.c4_raw);
        assert!(monotonicity_constant_oracle(2.0, 100).is_err());
    }

    #[test]
    fn decomposition_of_reference_cubic() {
        let d = decompose(&cubic(), &reference_constants(), &scan()).unwrap();
        assert_eq!(d.f1_scale, 0.25);
        assert_eq!(d.f1_shift, 2.0);
        assert_eq!(d.f1(2.0), 0.25 * 8.0 - 2.0);
        assert_relative_eq!(d.kappa2, 2.25);
        assert_eq!(d.alpha2, 0.125);
        assert!(d.remainder_kappa_alpha_margin >= 0.0);
        // max of 2r - r^4/8 at r = 4^(1/3)
        let r = 4f64.powf(1.0 / 3.0);
        assert_relative_eq!(d.beta_shift, 2.0 * r - r.powi(4) / 8.0, max_relative = 1e-9);
        let again = d.recertify(&scan()).unwrap();
        assert!(again.pass, "{again:?}");
        for s in [-3.0, -0.1, 0.0, 2.5] {
            assert_relative_eq!(d.f1(s) + d.f2(s), cubic().value(s), max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn decomposition_requires_certified_input() {
        let c = DissipativityConstants { alpha: 2.0, ..reference_constants() };
        assert!(matches!(decompose(&cubic(), &c, &scan()), Err(Error::NotCertified(_))));
    }

    #[test]
    fn kappa2_limit() {
        let c = DissipativityConstants { alpha: 1e-9, beta: 1.0, ..reference_constants() };
        let d = decompose(&cubic(), &c, &scan()).unwrap();
        assert!((d.kappa2 - 3.0).abs() < 1e-8);
    }

    #[test]
    fn corollary_examples() {
        let f = cubic();
        let d = decompose(&f, &reference_constants(), &scan()).unwrap();
        let r = check_corollary(&f, &d, &[(1.0, 1.0, 2.0), (1.0, 0.0, 0.0)]).unwrap();
        assert!(r.clean());
        assert!(check_corollary(&f, &d, &[(1.0, 0.0, -1.0)]).is_err());
    }

    #[test]
    fn f_add_certification() {
        let f = cubic();
        let ok = certify_f_add(&f, &LipschitzGrowthConstants { kappa0: 3.0, l0: 1.0 }, &scan()).unwrap();
        assert!(ok.pass, "{ok:?}");
        let bad = certify_f_add(&f, &LipschitzGrowthConstants { kappa0: 2.5, l0: 1.0 }, &scan()).unwrap();
        assert!(!bad.pass);
        let lin = NonlinearitySpec::linear(2.0);
        assert!(certify_f_add(&lin, &LipschitzGrowthConstants { kappa0: 1.0, l0: 1.0 }, &scan()).is_err());
    }
}
