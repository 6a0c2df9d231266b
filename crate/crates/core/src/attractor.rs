//! Finite approximations of the global attractor and their metric analysis.

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{power_sum, DomainSpec, Field, SineTransform};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::nonlinearity::CertificationReport;
use crate::profiles::{ensemble_member, member_rng};
use crate::solver::{Integrator, ProblemSpec, Scheme, SolverConfig, Trajectory};

/// Metric used on fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    Lebesgue(f64),
    H1,
}

impl NormTag {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormTag::Lebesgue(g) if !(g.is_finite() && g >= 1.0) => {
                Err(Error::param("gamma", format!("must be >= 1, got {g}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NormTag::Lebesgue(g) => format!("L{g}"),
            NormTag::H1 => "H1".into(),
        }
    }
}

impl std::fmt::Display for NormTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Fields mapped into a vector space where the tagged distance is computed
/// coordinate-wise: grid values for `L^gamma`, gradient-weighted sine
/// coefficients for `H^1_0`.
pub struct Embedding {
    tag: NormTag,
    vol: f64,
    vectors: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn new(states: &[Field], tag: NormTag) -> Result<Self> {
        tag.validate()?;
        let Some(first) = states.first() else {
            return Ok(Self { tag, vol: 1.0, vectors: Vec::new() });
        };
        let domain = *first.domain();
        if states.iter().any(|s| s.domain() != &domain) {
            return Err(Error::DomainMismatch("states on different grids".into()));
        }
        let vectors = match tag {
            NormTag::Lebesgue(_) => states.iter().map(|s| s.values().to_vec()).collect(),
            NormTag::H1 => {
                let weights: Vec<f64> = domain
                    .laplacian_eigenvalues()
                    .iter()
                    .map(|mu| (mu * domain.parseval_weight()).sqrt())
                    .collect();
                let mut transform = SineTransform::new(domain);
                states
                    .iter()
                    .map(|s| {
                        let mut v = s.values().to_vec();
                        transform.forward_in_place(&mut v);
                        v.iter_mut().zip(&weights).for_each(|(c, w)| *c *= w);
                        v
                    })
                    .collect()
            }
        };
        let vol = match tag {
            NormTag::Lebesgue(_) => domain.cell_volume(),
            NormTag::H1 => 1.0,
        };
        Ok(Self { tag, vol, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn tag(&self) -> NormTag {
        self.tag
    }

    fn vector_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.tag {
            NormTag::Lebesgue(g) if g == 2.0 => {
                (self.vol * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).sqrt()
            }
            NormTag::Lebesgue(g) => {
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                (self.vol * power_sum(&diff, g)).powf(1.0 / g)
            }
            NormTag::H1 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.vector_distance(&self.vectors[i], &self.vectors[j])
    }

    /// Distance between point `i` of `self` and point `j` of `other`.
    pub fn cross_distance(&self, i: usize, other: &Embedding, j: usize) -> f64 {
        self.vector_distance(&self.vectors[i], &other.vectors[j])
    }

    /// All `n(n-1)/2` pairwise distances, row by row.
    pub fn pairwise(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| self.distance(i, j)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .concat()
    }
}

/// Tagged distance between two fields.
pub fn field_distance(a: &Field, b: &Field, tag: NormTag) -> Result<f64> {
    let e = Embedding::new(&[a.clone(), b.clone()], tag)?;
    Ok(e.distance(0, 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudMetadata {
    pub spin_up: f64,
    pub sample_interval: f64,
    /// Sampling time of each state.
    pub times: Vec<f64>,
    /// Ensemble member that produced each state.
    pub members: Vec<usize>,
    pub seed: u64,
    /// Members whose last spin-up increment did not shrink.
    pub unsettled_members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub states: Vec<Field>,
    pub metadata: CloudMetadata,
}

impl PointCloud {
    /// Cloud without sampling history.
    pub fn from_states(states: Vec<Field>) -> Result<Self> {
        for s in &states {
            s.check_finite()?;
        }
        let n = states.len();
        Ok(Self {
            states,
            metadata: CloudMetadata {
                spin_up: 0.0,
                sample_interval: 0.0,
                times: vec![0.0; n],
                members: (0..n).collect(),
                seed: 0,
                unsettled_members: Vec::new(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn embed(&self, tag: NormTag) -> Result<Embedding> {
        Embedding::new(&self.states, tag)
    }

    /// The cloud `{x - z0}`.
    pub fn translated(&self, z0: &Field) -> Result<Self> {
        Ok(Self {
            states: self.states.iter().map(|s| s.sub(z0)).collect::<Result<_>>()?,
            metadata: self.metadata.clone(),
        })
    }

    pub fn diameter(&self, tag: NormTag) -> Result<f64> {
        Ok(self.embed(tag)?.pairwise().into_iter().fold(0.0, f64::max))
    }
}

/// How the attractor is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    pub ensemble_size: usize,
    pub spin_up: f64,
    /// Largest number of states kept per member.
    pub samples: usize,
    pub sample_interval: f64,
    /// Sampling stops this long after the spin-up.
    pub sample_duration: f64,
    /// A candidate is kept only at this `L^2` distance from the previously kept state.
    #[serde(default)]
    pub min_spacing: f64,
    /// Initial `L^2` norms are log-uniform on this range.
    pub initial_norm: (f64, f64),
}

/// Evolves random initial data past the spin-up time, then offers a candidate
/// every `sample_interval` and keeps those at least `min_spacing` away from the
/// previously kept state, so that kept states are spread evenly along orbits.
pub fn sample_attractor(problem: &ProblemSpec, plan: &SamplingPlan, dt: f64, scheme: Scheme, seed: u64) -> Result<PointCloud> {
    if plan.ensemble_size == 0 || plan.samples == 0 {
        return Err(Error::param("ensemble_size", "ensemble and sample counts must be positive"));
    }
    let (lo, hi) = plan.initial_norm;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::param("initial_norm", "need 0 < low <= high"));
    }
    if !(plan.min_spacing >= 0.0) {
        return Err(Error::param("min_spacing", "must be nonnegative"));
    }
    let spin_steps = whole_steps(plan.spin_up, dt, "spin_up")?;
    let gap = whole_steps(plan.sample_interval, dt, "sample_interval")?;
    let candidates = whole_steps(plan.sample_duration, plan.sample_interval, "sample_duration")?;
    if gap == 0 || spin_steps < 2 * gap {
        return Err(Error::param("spin_up", "must cover at least two sample intervals"));
    }
    let domain = *problem.domain();
    let runs: Vec<Member> = (0..plan.ensemble_size)
        .into_par_iter()
        .map(|m| {
            let mut rng = member_rng(seed, 1 << 32 | m as u64);
            let norm = lo * (hi / lo).powf(rng.gen_range(0.0..=1.0));
            let (_, u0) = ensemble_member(&domain, seed, m as u64, norm)?;
            let mut it = Integrator::new(&u0, problem, dt, scheme)?;
            let mut checkpoints = Vec::with_capacity(3);
            for i in 1..=spin_steps {
                it.step()?;
                if i + 2 * gap >= spin_steps && (spin_steps - i) % gap == 0 {
                    checkpoints.push(it.state());
                }
            }
            let inc_prev = checkpoints[1].sub(&checkpoints[0])?.l2_norm();
            let inc_last = checkpoints[2].sub(&checkpoints[1])?.l2_norm();
            let settled = inc_last <= inc_prev || inc_last < 1e-10;
            // random phase: the first kept state lies a uniform fraction of
            // the spacing away from the spin-up state
            let phase = rng.gen_range(0.0..1.0) * plan.min_spacing;
            let anchor = it.state();
            let mut states = Vec::new();
            let mut times = Vec::new();
            if phase == 0.0 {
                states.push(anchor.clone());
                times.push(it.time());
            }
            for _ in 0..candidates {
                if states.len() == plan.samples {
                    break;
                }
                for _ in 0..gap {
                    it.step()?;
                }
                let here = it.state();
                let (reference, spacing) = match states.last() {
                    Some(last) => (last, plan.min_spacing),
                    None => (&anchor, phase),
                };
                if here.sub(reference)?.l2_norm() >= spacing {
                    states.push(here);
                    times.push(it.time());
                }
            }
            let end = (times.last() != Some(&it.time())).then(|| (it.state(), it.time()));
            Ok((states, times, settled, end))
        })
        .collect::<Result<_>>()?;
    let mut cloud = PointCloud {
        states: Vec::new(),
        metadata: CloudMetadata {
            spin_up: plan.spin_up,
            sample_interval: plan.sample_interval,
            times: Vec::new(),
            members: Vec::new(),
            seed,
            unsettled_members: Vec::new(),
        },
    };
    let mut ends: Vec<(usize, Field, f64)> = Vec::new();
    for (m, (states, times, settled, end)) in runs.into_iter().enumerate() {
        if !settled {
            cloud.metadata.unsettled_members.push(m);
        }
        cloud.metadata.members.extend(std::iter::repeat(m).take(states.len()));
        cloud.metadata.times.extend(times);
        cloud.states.extend(states);
        // end states represent the limit sets once each
        if let Some((u, t)) = end {
            let fresh = ends
                .iter()
                .all(|(_, v, _)| u.sub(v).map_or(true, |d| d.l2_norm() >= plan.min_spacing));
            if fresh {
                ends.push((m, u, t));
            }
        }
    }
    for (m, u, t) in ends {
        cloud.metadata.members.push(m);
        cloud.metadata.times.push(t);
        cloud.states.push(u);
    }
    if !cloud.metadata.unsettled_members.is_empty() {
        warn!(
            "{} of {} members still moving away from their spin-up state",
            cloud.metadata.unsettled_members.len(),
            plan.ensemble_size
        );
    }
    Ok(cloud)
}

/// Kept states, their times, whether the spin-up settled, and the end state.
type Member = (Vec<Field>, Vec<f64>, bool, Option<(Field, f64)>);

fn whole_steps(t: f64, dt: f64, name: &'static str) -> Result<usize> {
    let n = (t / dt).round();
    if !(n >= 0.0) || (n * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(Error::param(name, format!("{t} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionSeries {
    pub tag: NormTag,
    /// `(t, max_member min_cloud distance)`.
    pub points: Vec<(f64, f64)>,
    /// Earliest recorded time after which the series never increases.
    pub monotone_from: f64,
}

impl AttractionSeries {
    /// First recorded time with distance below `threshold`.
    pub fn time_below(&self, threshold: f64) -> Option<f64> {
        self.points.iter().find(|p| p.1 < threshold).map(|p| p.0)
    }
}

fn require_h1(tag: NormTag, certificate: Option<&CertificationReport>) -> Result<()> {
    if tag != NormTag::H1 {
        return Ok(());
    }
    match certificate {
        Some(c) if c.pass && c.condition("f_add").is_some() => Ok(()),
        _ => Err(Error::NotCertified("H1 distances need a passing derivative growth certificate".into())),
    }
}

/// Hausdorff semi-distance from the bundle to the cloud at every recorded time.
pub fn attraction_distance(
    bundle: &[Trajectory],
    cloud: &PointCloud,
    tag: NormTag,
    certificate: Option<&CertificationReport>,
) -> Result<AttractionSeries> {
    require_h1(tag, certificate)?;
    if bundle.is_empty() || cloud.is_empty() {
        return Err(Error::param("bundle", "bundle and cloud must be nonempty"));
    }
    let times = &bundle[0].times;
    if bundle.iter().any(|t| t.times.len() != times.len()) {
        return Err(Error::param("bundle", "trajectories must share recorded times"));
    }
    let target = cloud.embed(tag)?;
    let mut points = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let states: Vec<Field> = bundle.iter().map(|tr| tr.states[i].clone()).collect();
        let here = Embedding::new(&states, tag)?;
        let d = (0..here.len())
            .into_par_iter()
            .map(|m| (0..target.len()).map(|j| here.cross_distance(m, &target, j)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max);
        points.push((t, d));
    }
    let mut monotone_from = points.last().map_or(0.0, |p| p.0);
    for w in (1..points.len()).rev() {
        if points[w].1 > points[w - 1].1 * (1.0 + 1e-12) {
            break;
        }
        monotone_from = points[w - 1].0;
    }
    Ok(AttractionSeries { tag, points, monotone_from })
}

/// Greedy farthest-point order: `order[0] = 0`, each next point maximises the
/// distance to the ones before it; `radii[i]` is that distance.
#[derive(Clone, Debug, PartialEq)]
pub struct FarthestPointOrder {
    pub order: Vec<usize>,
    pub radii: Vec<f64>,
}

pub fn farthest_point_order(e: &Embedding) -> FarthestPointOrder {
    let n = e.len();
    let mut order = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    if n == 0 {
        return FarthestPointOrder { order, radii };
    }
    let mut nearest = vec![f64::INFINITY; n];
    let mut current = 0;
    let mut radius = f64::INFINITY;
    loop {
        order.push(current);
        radii.push(radius);
        let updates: Vec<f64> = (0..n).into_par_iter().map(|j| e.distance(current, j)).collect();
        for (d, u) in nearest.iter_mut().zip(updates) {
            *d = d.min(u);
        }
        let (next, far) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &d)| if d > acc.1 { (j, d) } else { acc });
        if order.len() == n || far <= 0.0 {
            break;
        }
        current = next;
        radius = far;
    }
    FarthestPointOrder { order, radii }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNet {
    /// Indices into the cloud.
    pub indices: Vec<usize>,
    pub eps: f64,
    pub tag: NormTag,
    /// `max_x min_net d(x, net)`, at most `eps`.
    pub covering_radius: f64,
}

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Prefix of the farthest-point order covering every point within `eps`.
pub fn net_from_order(e: &Embedding, order: &FarthestPointOrder, eps: f64) -> Result<EpsilonNet> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    let size = order.radii.iter().skip(1).take_while(|&&r| r > eps).count() + 1;
    let indices: Vec<usize> = order.order.iter().take(size.min(order.order.len())).copied().collect();
    let covering_radius = covering_radius(e, &indices);
    if covering_radius > eps {
        return Err(Error::param("eps", format!("covering radius {covering_radius} exceeds {eps}")));
    }
    Ok(EpsilonNet {
        indices,
        eps,
        tag: e.tag(),
        covering_radius,
    })
}

/// `max_x min_{i in net} d(x, x_i)` by exhaustive search.
pub fn covering_radius(e: &Embedding, net: &[usize]) -> f64 {
    (0..e.len())
        .into_par_iter()
        .map(|j| net.iter().map(|&i| e.distance(i, j)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

pub fn greedy_epsilon_net(cloud: &PointCloud, eps: f64, tag: NormTag) -> Result<EpsilonNet> {
    if cloud.is_empty() {
        return Err(Error::param("cloud", "must be nonempty"));
    }
    let e = cloud.embed(tag)?;
    let order = farthest_point_order(&e);
    net_from_order(&e, &order, eps)
}

/// Images of the cloud under the time-`t` solution map.
pub fn solution_map(cloud: &PointCloud, problem: &ProblemSpec, cfg: &SolverConfig) -> Result<PointCloud> {
    let n = cfg.steps()?;
    let states = cloud
        .states
        .par_iter()
        .map(|u| {
            let mut it = Integrator::new(u, problem, cfg.dt, cfg.scheme)?;
            for _ in 0..n {
                it.step()?;
            }
            Ok(it.state())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointCloud {
        states,
        metadata: cloud.metadata.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub eps: f64,
    pub net_size: usize,
    /// `L * eps^delta`.
    pub radius: f64,
    pub covered: usize,
    pub total: usize,
    pub coverage: f64,
    /// Largest `||M(a) - M(a0)||_Y / ||a - a0||_X^delta` over each point and its nearest net point.
    pub worst_ratio: f64,
    /// Cloud index attaining the worst ratio.
    pub worst_point: Option<usize>,
}

impl TransportReport {
    pub fn complete(&self) -> bool {
        self.covered == self.total
    }
}

/// Checks that the image of the net is an `L eps^delta`-net of the image of the cloud.
///
/// `image` must be the cloud transported by the solution map.
pub fn transport_net(
    cloud: &PointCloud,
    image: &PointCloud,
    net: &EpsilonNet,
    source: NormTag,
    target: NormTag,
    holder: (f64, f64),
) -> Result<TransportReport> {
    let (l, delta) = holder;
    if !(net.eps > 0.0 && net.eps <= 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1], got {}", net.eps)));
    }
    if image.len() != cloud.len() {
        return Err(Error::param("image", "must be the transported cloud"));
    }
    let x = cloud.embed(source)?;
    let y = image.embed(target)?;
    let radius = l * net.eps.powf(delta);
    let results: Vec<(bool, f64)> = (0..cloud.len())
        .into_par_iter()
        .map(|j| {
            let covered = net.indices.iter().any(|&i| y.distance(i, j) <= radius);
            let (a0, dx) = net
                .indices
                .iter()
                .map(|&i| (i, x.distance(i, j)))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            let ratio = if dx > 0.0 { y.distance(a0, j) / dx.powf(delta) } else { 0.0 };
            (covered, ratio)
        })
        .collect();
    let covered = results.iter().filter(|r| r.0).count();
    let (worst_point, worst_ratio) = results
        .iter()
        .enumerate()
        .fold((None, 0.0), |acc, (j, r)| if r.1 > acc.1 { (Some(j), r.1) } else { acc });
    Ok(TransportReport {
        eps: net.eps,
        net_size: net.len(),
        radius,
        covered,
        total: cloud.len(),
        coverage: covered as f64 / cloud.len().max(1) as f64,
        worst_ratio,
        worst_point,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    pub scales: usize,
    /// Scales used in the regression.
    pub window: usize,
    /// Scales with fewer close pairs are ignored.
    pub min_pairs: usize,
    /// Scales with a larger correlation fraction are ignored.
    pub max_fraction: f64,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self {
            scales: 40,
            window: 10,
            min_pairs: 20,
            max_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub tag: NormTag,
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub fractions: Vec<f64>,
    /// Regression range `[eps_min, eps_max]`.
    pub window: (f64, f64),
    pub dimension: f64,
    /// Half width of the confidence band.
    pub band: f64,
    pub r_squared: f64,
    pub degenerate: bool,
}

impl DimensionEstimate {
    fn degenerate(tag: NormTag, scales: Vec<f64>, counts: Vec<u64>, fractions: Vec<f64>) -> Self {
        Self {
            tag,
            scales,
            counts,
            fractions,
            window: (0.0, 0.0),
            dimension: 0.0,
            band: 0.0,
            r_squared: 1.0,
            degenerate: true,
        }
    }
}

/// Correlation-sum dimension: slope of `log C(eps)` against `log eps` over
/// the window of scales whose local slopes vary least.
pub fn correlation_dimension(cloud: &PointCloud, tag: NormTag, opts: &DimensionOptions) -> Result<DimensionEstimate> {
    let e = cloud.embed(tag)?;
    let mut d = e.pairwise();
    dimension_from_distances(&mut d, tag, opts)
}

pub fn dimension_from_distances(d: &mut [f64], tag: NormTag, opts: &DimensionOptions) -> Result<DimensionEstimate> {
    if opts.window < 5 || opts.scales < opts.window {
        return Err(Error::param("window", "need 5 <= window <= scales"));
    }
    d.sort_by(f64::total_cmp);
    let total = d.len();
    let positive: Vec<f64> = d.iter().copied().filter(|&x| x > 0.0).collect();
    let (Some(&lo), Some(&hi)) = (positive.first(), positive.last()) else {
        return Ok(DimensionEstimate::degenerate(tag, Vec::new(), Vec::new(), Vec::new()));
    };
    if hi <= lo {
        return Ok(DimensionEstimate::degenerate(tag, Vec::new(), Vec::new(), Vec::new()));
    }
    // endpoints on a fixed lattice of ratio 2^(1/16)
    let lo = (16.0 * lo.log2()).floor() / 16.0;
    let hi = (16.0 * hi.log2()).ceil() / 16.0;
    let (lo, hi) = (lo.exp2(), hi.exp2());
    let n = opts.scales;
    let scales: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let counts: Vec<u64> = scales.iter().map(|&s| d.partition_point(|&x| x <= s) as u64).collect();
    let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let valid: Vec<usize> = (0..n)
        .filter(|&i| counts[i] >= opts.min_pairs as u64 && fractions[i] <= opts.max_fraction)
        .collect();
    // longest run of consecutive valid scales
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &i in &valid {
        match runs.last_mut() {
            Some(r) if r.1 + 1 == i => r.1 = i,
            _ => runs.push((i, i)),
        }
    }
    let Some(&(start, end)) = runs.iter().max_by_key(|r| (r.1 - r.0, usize::MAX - r.0)) else {
        return Ok(DimensionEstimate::degenerate(tag, scales, counts, fractions));
    };
    let len = end - start + 1;
    if len < 5 {
        return Ok(DimensionEstimate::degenerate(tag, scales, counts, fractions));
    }
    let w = opts.window.min(len);
    let lx: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ly: Vec<f64> = fractions.iter().map(|f| f.ln()).collect();
    let local: Vec<f64> = (start..end).map(|i| (ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i])).collect();
    let mut best = (f64::INFINITY, start);
    for s in start..=end + 1 - w {
        let slopes = &local[s - start..s - start + w - 1];
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let var = slopes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / slopes.len() as f64;
        if var.sqrt() < best.0 {
            best = (var.sqrt(), s);
        }
    }
    let s = best.1;
    let fit = linear_fit(&lx[s..s + w], &ly[s..s + w])?;
    let slopes = &local[s - start..s - start + w - 1];
    let spread = slopes.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - slopes.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(DimensionEstimate {
        tag,
        window: (scales[s], scales[s + w - 1]),
        dimension: fit.slope,
        band: (2.0 * fit.slope_stderr).max(0.5 * spread),
        r_squared: fit.r_squared,
        degenerate: false,
        scales,
        counts,
        fractions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionBound {
    pub name: String,
    pub lhs: f64,
    /// `factor * d_L2`.
    pub rhs: f64,
    pub factor: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub estimates: Vec<DimensionEstimate>,
    pub bounds: Vec<DimensionBound>,
    pub degenerate: bool,
    pub pass: bool,
}

fn bound(name: &str, lhs: &DimensionEstimate, base: &DimensionEstimate, factor: f64) -> DimensionBound {
    let tolerance = lhs.band + factor * base.band;
    let rhs = factor * base.dimension;
    DimensionBound {
        name: name.to_string(),
        lhs: lhs.dimension,
        rhs,
        factor,
        tolerance,
        pass: lhs.dimension <= rhs + tolerance,
    }
}

/// Compares dimensions in `L^p`, `L^gamma` (on the cloud translated by
/// `shift`) and `H^1_0` with the `L^2` dimension.
pub fn dimension_bound_check(
    cloud: &PointCloud,
    p: f64,
    gamma: f64,
    shift: Option<&Field>,
    opts: &DimensionOptions,
) -> Result<BoundCheckReport> {
    let base = correlation_dimension(cloud, NormTag::Lebesgue(2.0), opts)?;
    let lp = correlation_dimension(cloud, NormTag::Lebesgue(p), opts)?;
    let moved = match shift {
        Some(z) => cloud.translated(z)?,
        None => cloud.clone(),
    };
    let lg = correlation_dimension(&moved, NormTag::Lebesgue(gamma), opts)?;
    let h1 = correlation_dimension(cloud, NormTag::H1, opts)?;
    let bounds = vec![
        bound("lp", &lp, &base, p / 2.0),
        bound("lgamma_translated", &lg, &base, gamma / 2.0),
        bound("h1", &h1, &base, p - 1.0),
    ];
    let degenerate = [&base, &lp, &lg, &h1].iter().any(|e| e.degenerate);
    let pass = bounds.iter().all(|b| b.pass);
    Ok(BoundCheckReport {
        estimates: vec![base, lp, lg, h1],
        bounds,
        degenerate,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub state: Field,
    /// `||-Laplace u + lambda u + f(u) - g||_2`.
    pub residual: f64,
    pub iterations: usize,
}

/// Stationary solution by the damped iteration `(A + c) u_new = c u - f(u) + g`
/// with `A = lambda - Laplace`.
pub fn find_equilibrium(problem: &ProblemSpec, guess: &Field, damping: f64, max_iter: usize, tol: f64) -> Result<Equilibrium> {
    if !(damping > 0.0) {
        return Err(Error::param("damping", "must be positive"));
    }
    let domain = *problem.domain();
    let f = problem.nonlinearity();
    let g = problem.forcing().values();
    let lambda = problem.lambda();
    let mu = domain.laplacian_eigenvalues();
    let mut transform = SineTransform::new(domain);
    let mut u = guess.values().to_vec();
    let mut work = vec![0.0; u.len()];
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        for ((w, &x), &gi) in work.iter_mut().zip(&u).zip(g) {
            *w = damping * x - f.value(x) + gi;
        }
        transform.forward_in_place(&mut work);
        for (w, m) in work.iter_mut().zip(&mu) {
            *w /= lambda + m + damping;
        }
        transform.inverse_in_place(&mut work);
        let change = work.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let size = work.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        std::mem::swap(&mut u, &mut work);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: 0.0, step: it });
        }
        if change <= tol * size {
            break;
        }
    }
    let state = Field::new(domain, u)?;
    let residual = stationary_residual(problem, &state)?;
    Ok(Equilibrium { state, residual, iterations })
}

/// `||-Laplace u + lambda u + f(u) - g||_2` evaluated spectrally.
pub fn stationary_residual(problem: &ProblemSpec, u: &Field) -> Result<f64> {
    let domain = *problem.domain();
    let mut transform = SineTransform::new(domain);
    let mu = domain.laplacian_eigenvalues();
    let mut lin = u.values().to_vec();
    transform.forward_in_place(&mut lin);
    for (c, m) in lin.iter_mut().zip(&mu) {
        *c *= problem.lambda() + m;
    }
    transform.inverse_in_place(&mut lin);
    let f = problem.nonlinearity();
    let r: Vec<f64> = lin
        .iter()
        .zip(u.values())
        .zip(problem.forcing().values())
        .map(|((l, &x), gi)| l + f.value(x) - gi)
        .collect();
    Ok(Field::new(domain, r)?.l2_norm())
}

/// Pairs `(a_i, a_j - a_i)` of cloud points: for every `stride`-th point `a_j`
/// and every target separation `s`, a partner `a_i` drawn uniformly among the
/// points at `L^2` distance within a factor `sqrt 2` of `s` (targets without
/// candidates are skipped).
pub fn neighbour_pairs<R: Rng>(
    cloud: &PointCloud,
    stride: usize,
    separations: &[f64],
    rng: &mut R,
) -> Result<Vec<(Field, Field)>> {
    if stride == 0 {
        return Err(Error::param("stride", "must be positive"));
    }
    if separations.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::param("separations", "must be positive"));
    }
    let e = cloud.embed(NormTag::Lebesgue(2.0))?;
    let band = std::f64::consts::SQRT_2;
    let mut pairs = Vec::new();
    for j in (0..cloud.len()).step_by(stride) {
        let dist: Vec<f64> = (0..cloud.len()).map(|i| e.distance(i, j)).collect();
        for &target in separations {
            let candidates: Vec<usize> = (0..cloud.len())
                .filter(|&i| dist[i] >= target / band && dist[i] <= target * band)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let i = candidates[rng.gen_range(0..candidates.len())];
            pairs.push((cloud.states[i].clone(), cloud.states[j].sub(&cloud.states[i])?));
        }
    }
    Ok(pairs)
}

/// Points `s * phi`, `s` uniform on `[0, 1]`.
pub fn segment_cloud<R: Rng>(phi: &Field, count: usize, rng: &mut R) -> PointCloud {
    let states = (0..count).map(|_| phi.scale(rng.gen_range(0.0..=1.0))).collect();
    PointCloud::from_states(states).expect("scaled finite field")
}

/// Flat torus `a (cos t1 e1 + sin t1 e2) + b (cos t2 e3 + sin t2 e4)` on four
/// orthogonal eigenmodes with uniform angles.
pub fn torus_cloud<R: Rng>(domain: &DomainSpec, radii: (f64, f64), count: usize, rng: &mut R) -> Result<PointCloud> {
    let modes: Vec<Field> = if domain.dimension() == 1 {
        (1..=4).map(|k| domain.eigenmode([k, 0])).collect()
    } else {
        [[1, 1], [1, 2], [2, 1], [2, 2]].iter().map(|&k| domain.eigenmode(k)).collect()
    };
    let tau = 2.0 * std::f64::consts::PI;
    let states = (0..count)
        .map(|_| {
            let (t1, t2) = (rng.gen_range(0.0..tau), rng.gen_range(0.0..tau));
            let v: Vec<f64> = (0..domain.len())
                .map(|i| {
                    radii.0 * (t1.cos() * modes[0].values()[i] + t1.sin() * modes[1].values()[i])
                        + radii.1 * (t2.cos() * modes[2].values()[i] + t2.sin() * modes[3].values()[i])
                })
                .collect();
            Field::new(*domain, v)
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::from_states(states)
}
