//! Experiment configuration: TOML with closed sections.

use std::path::Path;

use rdlab_core::attractor::{NormTag, SamplingPlan};
use rdlab_core::{
    DissipativityConstants, DomainSpec, Field, LipschitzGrowthConstants, NonlinearitySpec, ProblemSpec, ScanSpec, Scheme,
    SolverConfig,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, SchemaError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rng_seed: u64,
    pub problem: ProblemConfig,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConfig>,
    #[serde(default = "default_scan")]
    pub scan: ScanConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingPlan>,
    #[serde(default)]
    pub suites: SuitesConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lambda: f64,
    /// Coefficients of `f` in ascending powers.
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub domain: DomainConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dimension: usize,
    pub side_length: f64,
    pub grid_points: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Eigenmode {
        mode: Vec<usize>,
        amplitude: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub record_stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub p: f64,
    pub kappa: f64,
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub kappa0: f64,
    pub l0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub half_width: f64,
    pub step: f64,
}

fn default_scan() -> ScanConfig {
    ScanConfig {
        half_width: 50.0,
        step: 1e-3,
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decompose: Option<DecomposeSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentsSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gronwall: Option<GronwallSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ak_bk: Option<AkBkSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_bound: Option<LpBoundSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_smoothing: Option<H1SmoothingSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorSuite>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Eigenmode { mode: Vec<usize>, amplitude: f64 },
    Ensemble { index: u64, l2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSuite {
    pub initial: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<LinearOracle>,
}

/// Comparison with the exact decay of an eigenmode under `f = 0`, `g = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearOracle {
    pub time: f64,
    pub tolerance: f64,
    /// Step sizes of the refinement study.
    pub order_dts: Vec<f64>,
    pub order_tolerance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySuite {
    #[serde(default)]
    pub decompose: bool,
    /// Expected `(alpha/2, sigma)` of `f1(s) = (alpha/2)|s|^(p-2)s - sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_f1: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicityTarget {
    pub p: f64,
    pub range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryConfig {
    pub triples: usize,
    pub s_range: [f64; 2],
    pub r_range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSuite {
    #[serde(default = "default_mono_samples")]
    pub samples: usize,
    #[serde(default)]
    pub monotonicity: Vec<MonotonicityTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corollary: Option<CorollaryConfig>,
    /// Random pairs on which monotonicity and growth of `f1` are sampled.
    #[serde(default)]
    pub f1_pairs: usize,
}

fn default_mono_samples() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSuite {
    pub levels: usize,
    /// Exponents always tabulated.
    pub ps: Vec<f64>,
    /// Additional exponents drawn uniformly from `(2, p_max]`.
    pub random_ps: usize,
    pub p_max: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySuite {
    pub runs: usize,
    pub max_l2: f64,
    pub horizon: f64,
    #[serde(default = "all_families")]
    pub families: Vec<rdlab_core::profiles::ProfileFamily>,
}

fn all_families() -> Vec<rdlab_core::profiles::ProfileFamily> {
    rdlab_core::profiles::ProfileFamily::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSuite {
    pub pairs: usize,
    pub horizon: f64,
    pub base_l2: f64,
    pub norm_range: [f64; 2],
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AkBkSuite {
    pub levels: Vec<usize>,
    pub norms: Vec<f64>,
    pub directions: usize,
    pub base_l2: f64,
    pub horizon: f64,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpBoundSuite {
    pub eps: f64,
    /// Windows for the monotonicity check in `eps`.
    pub eps_sweep: Vec<f64>,
    pub k_max: usize,
    pub l2: f64,
    /// Initial `L^p` norms of the spiky family.
    pub targets: Vec<f64>,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudPairs {
    pub stride: usize,
    pub separations: Vec<f64>,
}

/// Second problem with `lambda > l2`, where `c_2 <= e^mu` is checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractiveCheck {
    pub lambda: f64,
    pub coefficients: Vec<f64>,
    pub constants: ConstantsConfig,
    pub pairs: usize,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSuite {
    pub gammas: Vec<f64>,
    pub pairs: usize,
    pub base_l2: f64,
    pub norm_range: [f64; 2],
    pub min_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_pairs: Option<CloudPairs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contractive: Option<ContractiveCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct H1SmoothingSuite {
    pub pairs: usize,
    pub base_l2: f64,
    pub norm_range: [f64; 2],
    pub slope_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub damping: f64,
    pub max_iter: usize,
    /// Relative step size at which the iteration stops.
    pub tolerance: f64,
    /// Largest accepted stationary residual.
    pub max_residual: f64,
    /// Largest admissible `L^2` distance from `+-phi` to the cloud.
    pub presence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    pub constant: f64,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorSuite {
    pub equilibrium: EquilibriumConfig,
    pub bundle_size: usize,
    pub bundle_l2: f64,
    pub bundle_horizon: f64,
    pub bundle_stride: usize,
    /// Norm tags such as `"l2"`, `"l6"` or `"h1"`.
    pub attraction_tags: Vec<String>,
    pub attraction_threshold: f64,
    pub transport_gamma: f64,
    pub transport_eps: Vec<f64>,
    /// Fixed Hölder constants; otherwise taken from a smoothing run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderConfig>,
    pub dimension_p: f64,
    pub dimension_gammas: Vec<f64>,
    pub translation_tolerance: f64,
    pub segment_points: usize,
    pub torus_points: usize,
    pub oracle_tolerance: f64,
}

pub fn parse_tag(s: &str) -> Option<NormTag> {
    let s = s.trim().to_ascii_lowercase();
    if s == "h1" {
        return Some(NormTag::H1);
    }
    let g: f64 = s.strip_prefix('l')?.parse().ok()?;
    (g.is_finite() && g >= 1.0).then_some(NormTag::Lebesgue(g))
}

/// A parsed configuration with its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
    /// Git-style blob hash of the source: `sha256("blob <len>\0" + text)`.
    pub hash: String,
}

pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of the value at a dotted `path` such as `solver.dt`.
fn locate(text: &str, path: &str) -> Option<usize> {
    let doc = toml_edit::ImDocument::parse(text).ok()?;
    let mut item = doc.as_item();
    let mut span = None;
    for key in path.split('.') {
        let next = match key.parse::<usize>() {
            Ok(i) => item.as_array().and_then(|a| a.get(i)).map(|v| (v.span(), None)),
            Err(_) => item.get(key).map(|it| (it.span(), Some(it))),
        };
        let (s, it) = next?;
        span = s.or(span);
        match it {
            Some(it) => item = it,
            None => break,
        }
    }
    span.map(|s| line_of(text, s.start))
}

pub fn parse(text: &str) -> Result<LoadedConfig, CliError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        SchemaError {
            line,
            field: field_from_message(e.message()),
            message: e.message().trim().to_string(),
        }
    })?;
    if let Err(mut e) = config.validate() {
        e.line = locate(text, &e.field);
        return Err(e.into());
    }
    Ok(LoadedConfig {
        config,
        source: text.to_string(),
        hash: content_hash(text),
    })
}

fn field_from_message(message: &str) -> String {
    // serde messages name the field between backticks
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_default()
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse(&text)
}

fn bad(field: &str, message: impl Into<String>) -> SchemaError {
    SchemaError {
        line: None,
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), SchemaError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(field, format!("must be a positive number, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<(), SchemaError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(field, format!("must be a nonnegative number, got {v}")))
    }
}

fn count(field: &str, n: usize) -> Result<(), SchemaError> {
    if n > 0 {
        Ok(())
    } else {
        Err(bad(field, "must be at least 1"))
    }
}

fn range(field: &str, r: [f64; 2]) -> Result<(), SchemaError> {
    positive(field, r[0])?;
    if r[1] >= r[0] && r[1].is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("need 0 < low <= high, got [{}, {}]", r[0], r[1])))
    }
}

fn mode(field: &str, mode: &[usize], dimension: usize) -> Result<(), SchemaError> {
    if mode.len() != dimension || mode.iter().any(|&k| k == 0) {
        return Err(bad(field, format!("need {dimension} positive wave numbers")));
    }
    Ok(())
}

fn constants(field: &str, c: &ConstantsConfig) -> Result<(), SchemaError> {
    c.build().map(|_| ()).map_err(|e| bad(field, e.to_string()))
}

impl ConstantsConfig {
    pub fn build(&self) -> rdlab_core::Result<DissipativityConstants> {
        DissipativityConstants::new(self.p, self.kappa, self.l, self.alpha, self.beta, self.sigma)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SchemaError> {
        let p = &self.problem;
        if !p.lambda.is_finite() {
            return Err(bad("problem.lambda", "must be finite"));
        }
        if p.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(bad("problem.coefficients", "must be finite"));
        }
        if let Some(q) = p.p {
            if !(q.is_finite() && q > 2.0) {
                return Err(bad("problem.p", format!("must exceed 2, got {q}")));
            }
        }
        let d = &p.domain;
        if !(d.dimension == 1 || d.dimension == 2) {
            return Err(bad("problem.domain.dimension", "must be 1 or 2"));
        }
        positive("problem.domain.side_length", d.side_length)?;
        if d.grid_points < 2 {
            return Err(bad("problem.domain.grid_points", "need at least 2 interior points"));
        }
        match &p.forcing {
            ForcingConfig::Zero => {}
            ForcingConfig::Constant { value } if !value.is_finite() => {
                return Err(bad("problem.forcing.value", "must be finite"))
            }
            ForcingConfig::Eigenmode { mode: m, amplitude } => {
                mode("problem.forcing.mode", m, d.dimension)?;
                if !amplitude.is_finite() {
                    return Err(bad("problem.forcing.amplitude", "must be finite"));
                }
            }
            ForcingConfig::Constant { .. } => {}
        }
        let s = &self.solver;
        positive("solver.dt", s.dt)?;
        positive("solver.t_end", s.t_end)?;
        count("solver.record_stride", s.record_stride)?;
        self.solver_config().map_err(|e| bad("solver.t_end", e.to_string()))?;
        if let Some(c) = &self.constants {
            constants("constants", c)?;
        }
        if let Some(g) = &self.growth {
            positive("growth.kappa0", g.kappa0)?;
            nonnegative("growth.l0", g.l0)?;
        }
        ScanSpec::new(self.scan.half_width, self.scan.step).map_err(|e| bad("scan.half_width", e.to_string()))?;
        if let Some(plan) = &self.sampling {
            count("sampling.ensemble_size", plan.ensemble_size)?;
            count("sampling.samples", plan.samples)?;
            positive("sampling.spin_up", plan.spin_up)?;
            positive("sampling.sample_interval", plan.sample_interval)?;
            positive("sampling.sample_duration", plan.sample_duration)?;
            nonnegative("sampling.min_spacing", plan.min_spacing)?;
            range("sampling.initial_norm", [plan.initial_norm.0, plan.initial_norm.1])?;
        }
        self.validate_suites()
    }

    fn validate_suites(&self) -> Result<(), SchemaError> {
        let s = &self.suites;
        let dim = self.problem.domain.dimension;
        if let Some(v) = &s.solve {
            match &v.initial {
                InitialData::Eigenmode { mode: m, amplitude } => {
                    mode("suites.solve.initial.mode", m, dim)?;
                    if !amplitude.is_finite() {
                        return Err(bad("suites.solve.initial.amplitude", "must be finite"));
                    }
                }
                InitialData::Ensemble { l2, .. } => positive("suites.solve.initial.l2", *l2)?,
                InitialData::Zero => {}
            }
            if let Some(o) = &v.oracle {
                positive("suites.solve.oracle.time", o.time)?;
                positive("suites.solve.oracle.tolerance", o.tolerance)?;
                positive("suites.solve.oracle.order_tolerance", o.order_tolerance)?;
                if o.order_dts.len() < 2 {
                    return Err(bad("suites.solve.oracle.order_dts", "need at least two step sizes"));
                }
                for dt in &o.order_dts {
                    positive("suites.solve.oracle.order_dts", *dt)?;
                }
                if !matches!(v.initial, InitialData::Eigenmode { .. }) {
                    return Err(bad("suites.solve.initial", "the linear oracle needs eigenmode initial data"));
                }
                if self.problem.coefficients.iter().any(|&c| c != 0.0) || self.problem.forcing != ForcingConfig::Zero {
                    return Err(bad("suites.solve.oracle", "the linear oracle needs f = 0 and g = 0"));
                }
            }
        }
        if let Some(v) = &s.decompose {
            count("suites.decompose.samples", v.samples.saturating_sub(15))?;
            for (i, m) in v.monotonicity.iter().enumerate() {
                if !(m.p > 2.0 && m.p.is_finite()) {
                    return Err(bad(&format!("suites.decompose.monotonicity.{i}.p"), "must exceed 2"));
                }
            }
            if let Some(c) = &v.corollary {
                if !(c.s_range[0] < c.s_range[1]) {
                    return Err(bad("suites.decompose.corollary.s_range", "need low < high"));
                }
                if !(c.r_range[0] >= 0.0 && c.r_range[0] <= c.r_range[1]) {
                    return Err(bad("suites.decompose.corollary.r_range", "need 0 <= low <= high"));
                }
            }
        }
        if let Some(v) = &s.exponents {
            count("suites.exponents.levels", v.levels)?;
            if v.ps.iter().chain([&v.p_max]).any(|p| !(p.is_finite() && *p > 2.0)) {
                return Err(bad("suites.exponents.ps", "exponents must exceed 2"));
            }
            positive("suites.exponents.tolerance", v.tolerance)?;
        }
        if let Some(v) = &s.energy {
            count("suites.energy.runs", v.runs)?;
            positive("suites.energy.max_l2", v.max_l2)?;
            positive("suites.energy.horizon", v.horizon)?;
            if v.families.is_empty() {
                return Err(bad("suites.energy.families", "must not be empty"));
            }
        }
        if let Some(v) = &s.gronwall {
            count("suites.gronwall.pairs", v.pairs)?;
            positive("suites.gronwall.horizon", v.horizon)?;
            positive("suites.gronwall.base_l2", v.base_l2)?;
            range("suites.gronwall.norm_range", v.norm_range)?;
            nonnegative("suites.gronwall.tolerance", v.tolerance)?;
        }
        if let Some(v) = &s.ak_bk {
            if v.levels.is_empty() || v.levels.contains(&0) {
                return Err(bad("suites.ak_bk.levels", "levels must be positive"));
            }
            if v.norms.len() < 2 {
                return Err(bad("suites.ak_bk.norms", "need at least two norms"));
            }
            for n in &v.norms {
                positive("suites.ak_bk.norms", *n)?;
            }
            count("suites.ak_bk.directions", v.directions)?;
            positive("suites.ak_bk.base_l2", v.base_l2)?;
            positive("suites.ak_bk.horizon", v.horizon)?;
            positive("suites.ak_bk.factor", v.factor)?;
        }
        if let Some(v) = &s.lp_bound {
            if !(v.eps > 0.0 && v.eps < 1.0) {
                return Err(bad("suites.lp_bound.eps", "must lie in (0, 1)"));
            }
            if v.eps_sweep.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                return Err(bad("suites.lp_bound.eps_sweep", "values must lie in (0, 1)"));
            }
            count("suites.lp_bound.k_max", v.k_max)?;
            positive("suites.lp_bound.l2", v.l2)?;
            if v.targets.is_empty() {
                return Err(bad("suites.lp_bound.targets", "must not be empty"));
            }
            for t in &v.targets {
                positive("suites.lp_bound.targets", *t)?;
            }
            positive("suites.lp_bound.factor", v.factor)?;
        }
        if let Some(v) = &s.smoothing {
            if v.gammas.is_empty() || v.gammas.iter().any(|g| !(g.is_finite() && *g >= 2.0)) {
                return Err(bad("suites.smoothing.gammas", "need exponents >= 2"));
            }
            count("suites.smoothing.pairs", v.pairs)?;
            positive("suites.smoothing.base_l2", v.base_l2)?;
            range("suites.smoothing.norm_range", v.norm_range)?;
            if let Some(c) = &v.cloud_pairs {
                count("suites.smoothing.cloud_pairs.stride", c.stride)?;
                for sep in &c.separations {
                    positive("suites.smoothing.cloud_pairs.separations", *sep)?;
                }
                if self.sampling.is_none() {
                    return Err(bad("suites.smoothing.cloud_pairs", "needs a [sampling] section"));
                }
            }
            if let Some(c) = &v.contractive {
                constants("suites.smoothing.contractive.constants", &c.constants)?;
                count("suites.smoothing.contractive.pairs", c.pairs)?;
                nonnegative("suites.smoothing.contractive.tolerance", c.tolerance)?;
            }
        }
        if let Some(v) = &s.h1_smoothing {
            count("suites.h1_smoothing.pairs", v.pairs)?;
            positive("suites.h1_smoothing.base_l2", v.base_l2)?;
            range("suites.h1_smoothing.norm_range", v.norm_range)?;
            nonnegative("suites.h1_smoothing.slope_tolerance", v.slope_tolerance)?;
        }
        if let Some(v) = &s.attractor {
            if self.sampling.is_none() {
                return Err(bad("suites.attractor", "needs a [sampling] section"));
            }
            positive("suites.attractor.equilibrium.damping", v.equilibrium.damping)?;
            count("suites.attractor.equilibrium.max_iter", v.equilibrium.max_iter)?;
            positive("suites.attractor.equilibrium.tolerance", v.equilibrium.tolerance)?;
            positive("suites.attractor.equilibrium.max_residual", v.equilibrium.max_residual)?;
            positive("suites.attractor.equilibrium.presence", v.equilibrium.presence)?;
            count("suites.attractor.bundle_size", v.bundle_size)?;
            positive("suites.attractor.bundle_l2", v.bundle_l2)?;
            positive("suites.attractor.bundle_horizon", v.bundle_horizon)?;
            count("suites.attractor.bundle_stride", v.bundle_stride)?;
            for (i, t) in v.attraction_tags.iter().enumerate() {
                if parse_tag(t).is_none() {
                    return Err(bad(&format!("suites.attractor.attraction_tags.{i}"), format!("unknown norm tag {t:?}")));
                }
            }
            positive("suites.attractor.attraction_threshold", v.attraction_threshold)?;
            if !(v.transport_gamma >= 2.0 && v.transport_gamma.is_finite()) {
                return Err(bad("suites.attractor.transport_gamma", "must be >= 2"));
            }
            for e in &v.transport_eps {
                positive("suites.attractor.transport_eps", *e)?;
            }
            if let Some(h) = &v.holder {
                positive("suites.attractor.holder.constant", h.constant)?;
                positive("suites.attractor.holder.exponent", h.exponent)?;
            }
            if !(v.dimension_p > 2.0) {
                return Err(bad("suites.attractor.dimension_p", "must exceed 2"));
            }
            if v.dimension_gammas.iter().any(|g| !(*g >= 2.0)) {
                return Err(bad("suites.attractor.dimension_gammas", "need exponents >= 2"));
            }
            nonnegative("suites.attractor.translation_tolerance", v.translation_tolerance)?;
            count("suites.attractor.segment_points", v.segment_points.saturating_sub(1))?;
            count("suites.attractor.torus_points", v.torus_points.saturating_sub(1))?;
            positive("suites.attractor.oracle_tolerance", v.oracle_tolerance)?;
        }
        Ok(())
    }

    pub fn domain(&self) -> rdlab_core::Result<DomainSpec> {
        let d = &self.problem.domain;
        DomainSpec::new(d.dimension, d.side_length, d.grid_points)
    }

    pub fn nonlinearity(&self) -> rdlab_core::Result<NonlinearitySpec> {
        let f = NonlinearitySpec::new(self.problem.coefficients.clone())?;
        Ok(match self.problem.p {
            Some(p) => f.with_p(p),
            None => f,
        })
    }

    pub fn forcing(&self) -> rdlab_core::Result<Field> {
        let d = self.domain()?;
        match &self.problem.forcing {
            ForcingConfig::Zero => Ok(d.zeros()),
            ForcingConfig::Constant { value } => d.constant(*value),
            ForcingConfig::Eigenmode { mode, amplitude } => Ok(d.eigenmode(wave(mode)).scale(*amplitude)),
        }
    }

    pub fn problem_spec(&self) -> rdlab_core::Result<ProblemSpec> {
        ProblemSpec::new(self.problem.lambda, self.nonlinearity()?, self.forcing()?)
    }

    pub fn solver_config(&self) -> rdlab_core::Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig::new(s.dt, s.t_end, s.scheme, s.record_stride)?;
        cfg.steps()?;
        Ok(cfg)
    }

    pub fn scan_spec(&self) -> rdlab_core::Result<ScanSpec> {
        ScanSpec::new(self.scan.half_width, self.scan.step)
    }

    pub fn dissipativity(&self) -> Result<DissipativityConstants, CliError> {
        let c = self.constants.as_ref().ok_or_else(|| bad("constants", "section required by this suite"))?;
        Ok(c.build()?)
    }

    pub fn growth_constants(&self) -> Result<LipschitzGrowthConstants, CliError> {
        let g = self.growth.as_ref().ok_or_else(|| bad("growth", "section required by this suite"))?;
        Ok(LipschitzGrowthConstants {
            kappa0: g.kappa0,
            l0: g.l0,
        })
    }

    pub fn sampling_plan(&self) -> Result<SamplingPlan, CliError> {
        self.sampling.ok_or_else(|| bad("sampling", "section required by this suite").into())
    }
}

pub fn wave(mode: &[usize]) -> [usize; 2] {
    [mode[0], mode.get(1).copied().unwrap_or(0)]
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = "\
rng_seed = 3

[problem]
lambda = 1.0
coefficients = [0.0, -1.0, 0.0, 1.0]
domain = { dimension = 1, side_length = 1.0, grid_points = 31 }

[solver]
dt = 1e-3
t_end = 0.1
";

    fn schema(text: &str) -> SchemaError {
        match parse(text) {
            Err(CliError::Schema(e)) => e,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(MINIMAL).unwrap().config;
        assert_eq!(c.solver.record_stride, 1);
        assert_eq!(c.scan, default_scan());
        assert_eq!(c.problem.forcing, ForcingConfig::Zero);
        assert!(c.constants.is_none() && c.sampling.is_none());
    }

    #[test]
    fn negative_dt_names_field_and_line() {
        let e = schema(&MINIMAL.replace("dt = 1e-3", "dt = -1.0"));
        assert_eq!(e.field, "solver.dt");
        assert_eq!(e.line, Some(9));
        assert!(e.to_string().starts_with("line 9, field `solver.dt`"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = schema(&MINIMAL.replace("t_end = 0.1", "t_end = 0.1\nsteps = 4"));
        assert_eq!(e.field, "steps");
        assert_eq!(e.line, Some(11));
    }

    #[test]
    fn bad_dimension_and_grid() {
        assert_eq!(schema(&MINIMAL.replace("dimension = 1", "dimension = 3")).field, "problem.domain.dimension");
        assert_eq!(schema(&MINIMAL.replace("grid_points = 31", "grid_points = 1")).field, "problem.domain.grid_points");
    }

    #[test]
    fn forcing_mode_must_match_dimension() {
        let text = MINIMAL.replace(
            "grid_points = 31 }",
            "grid_points = 31 }\nforcing = { kind = \"eigenmode\", mode = [1, 1], amplitude = 1.0 }",
        );
        assert_eq!(schema(&text).field, "problem.forcing.mode");
    }

    #[test]
    fn hash_matches_git_blob_layout() {
        // sha256 of b"blob 13\0rng_seed = 1\n", computed independently
        assert_eq!(content_hash("rng_seed = 1\n"), "e9d4ffe09b25efc7d59eb0703fb6844529d2dfd6d6419b6a512b60b64bf487ab");
        assert_eq!(parse(MINIMAL).unwrap().hash, content_hash(MINIMAL));
    }

    #[test]
    fn tags_parse_case_insensitively() {
        assert_eq!(parse_tag("H1"), Some(NormTag::H1));
        assert_eq!(parse_tag("l6"), Some(NormTag::Lebesgue(6.0)));
        assert_eq!(parse_tag("L2.5"), Some(NormTag::Lebesgue(2.5)));
        assert_eq!(parse_tag("l0.5"), None);
        assert_eq!(parse_tag("h2"), None);
    }

    #[test]
    fn bundled_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                n += 1;
            }
        }
        assert_eq!(n, 12);
    }
}
