//! Box domains `(0, L)^N` with homogeneous Dirichlet data, grid fields, norms
//! and the sine transform that diagonalises the Dirichlet Laplacian.
//!
//! Interior grid points sit at `x_i = i h`, `h = L / (M + 1)`, `i = 1..=M` on
//! every axis. Boundary values are zero and never stored. Fields are stored
//! row-major, the last axis varying fastest.
//!
//! A field `f` is expanded as `f_i = sum_k c_k prod_axis sin(k pi x_i / L)`, so
//! the coefficients `c_k` are the amplitudes of the continuum eigenmodes and
//! `||f||_2^2 = (L/2)^N sum_k c_k^2` holds exactly for the rectangle rule.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustdct::{DctPlanner, Dst1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Dirichlet eigenvalues the spectral operators use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenvalueConvention {
    /// `(k pi / L)^2`, exact for the continuum eigenmodes.
    #[default]
    Continuum,
    /// Eigenvalues of the three-point second difference, `(4/h^2) sin^2(k pi h / 2L)`.
    SecondDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    dimension: usize,
    side_length: f64,
    grid_points: usize,
    #[serde(default)]
    eigenvalues: EigenvalueConvention,
}

impl DomainSpec {
    pub fn new(dimension: usize, side_length: f64, grid_points: usize) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::param("dimension", format!("must be 1 or 2, got {dimension}")));
        }
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(Error::param("side_length", format!("must be positive, got {side_length}")));
        }
        if grid_points < 8 {
            return Err(Error::param("grid_points", format!("must be at least 8, got {grid_points}")));
        }
        Ok(Self {
            dimension,
            side_length,
            grid_points,
            eigenvalues: EigenvalueConvention::Continuum,
        })
    }

    pub fn with_eigenvalues(mut self, convention: EigenvalueConvention) -> Self {
        self.eigenvalues = convention;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn eigenvalue_convention(&self) -> EigenvalueConvention {
        self.eigenvalues
    }

    /// Grid spacing `h = L / (M + 1)`.
    pub fn spacing(&self) -> f64 {
        self.side_length / (self.grid_points + 1) as f64
    }

    /// Quadrature weight of one interior point, `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Number of stored values, `M^N`.
    pub fn len(&self) -> usize {
        self.grid_points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of interior point `index`.
    pub fn coordinates(&self, index: usize) -> [f64; 2] {
        let h = self.spacing();
        let m = self.grid_points;
        match self.dimension {
            1 => [(index + 1) as f64 * h, 0.0],
            _ => [(index / m + 1) as f64 * h, (index % m + 1) as f64 * h],
        }
    }

    /// Wave numbers of spectral slot `index` (1-based per axis).
    pub fn wave_numbers(&self, index: usize) -> [usize; 2] {
        let m = self.grid_points;
        match self.dimension {
            1 => [index + 1, 0],
            _ => [index / m + 1, index % m + 1],
        }
    }

    /// Eigenvalue of `-d^2/dx^2` on one axis for wave number `k`.
    pub fn axis_eigenvalue(&self, k: usize) -> f64 {
        match self.eigenvalues {
            EigenvalueConvention::Continuum => (k as f64 * PI / self.side_length).powi(2),
            EigenvalueConvention::SecondDifference => {
                let h = self.spacing();
                let s = (k as f64 * PI * h / (2.0 * self.side_length)).sin();
                4.0 * s * s / (h * h)
            }
        }
    }

    /// Dirichlet Laplacian eigenvalues for every spectral slot, in storage order.
    pub fn laplacian_eigenvalues(&self) -> Vec<f64> {
        let axis: Vec<f64> = (1..=self.grid_points).map(|k| self.axis_eigenvalue(k)).collect();
        match self.dimension {
            1 => axis,
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for a in &axis {
                    for b in &axis {
                        out.push(a + b);
                    }
                }
                out
            }
        }
    }

    /// Weight relating squared coefficients to the squared `L^2` norm, `(L/2)^N`.
    pub fn parseval_weight(&self) -> f64 {
        (0.5 * self.side_length).powi(self.dimension as i32)
    }

    /// Builds a field by sampling `f` at the interior points.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Result<Field> {
        let values = (0..self.len()).map(|i| f(self.coordinates(i))).collect();
        Field::new(*self, values)
    }

    /// The sine eigenmode with wave numbers `k` (second entry ignored for N = 1).
    pub fn eigenmode(&self, k: [usize; 2]) -> Field {
        let l = self.side_length;
        let values = (0..self.len())
            .map(|i| {
                let x = self.coordinates(i);
                let mut v = (k[0] as f64 * PI * x[0] / l).sin();
                if self.dimension == 2 {
                    v *= (k[1] as f64 * PI * x[1] / l).sin();
                }
                v
            })
            .collect();
        Field { domain: *self, values }
    }

    pub fn zeros(&self) -> Field {
        Field {
            domain: *self,
            values: vec![0.0; self.len()],
        }
    }

    pub fn constant(&self, value: f64) -> Result<Field> {
        Field::new(*self, vec![value; self.len()])
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(0,{})^{} with {} interior points per axis",
            self.side_length, self.dimension, self.grid_points
        )
    }
}

/// A grid function with zero boundary values.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    domain: DomainSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch(format!(
                "expected {} values, got {}",
                domain.len(),
                values.len()
            )));
        }
        check_finite(&values, "field")?;
        Ok(Self { domain, values })
    }

    /// Wraps values already known to be finite and correctly sized.
    pub(crate) fn from_raw(domain: DomainSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        Self { domain, values }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.values, "field")
    }

    fn same_domain(&self, other: &Field) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(format!("{} vs {}", self.domain, other.domain)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_domain(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Field::from_raw(self.domain, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_domain(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field::from_raw(self.domain, values))
    }

    pub fn scale(&self, factor: f64) -> Field {
        Field::from_raw(self.domain, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||f||_gamma`.
    pub fn lebesgue_norm(&self, gamma: f64) -> Result<f64> {
        lebesgue_norm(self, gamma)
    }

    /// `||f||_gamma^gamma`, computed without taking a root.
    pub fn lebesgue_power(&self, gamma: f64) -> Result<f64> {
        validate_gamma(gamma)?;
        self.check_finite()?;
        Ok(power_sum(&self.values, gamma) * self.domain.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        (power_sum(&self.values, 2.0) * self.domain.cell_volume()).sqrt()
    }
}

pub(crate) fn check_finite(values: &[f64], context: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { context, index }),
        None => Ok(()),
    }
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::param("gamma", format!("must be >= 1, got {gamma}")));
    }
    Ok(())
}

/// `sum_i |v_i|^gamma`, with integer exponents evaluated by `powi`.
pub(crate) fn power_sum(values: &[f64], gamma: f64) -> f64 {
    if gamma == 2.0 {
        return values.iter().map(|v| v * v).sum();
    }
    if gamma.fract() == 0.0 && gamma <= 64.0 {
        let n = gamma as i32;
        return values.iter().map(|v| v.abs().powi(n)).sum();
    }
    values.iter().map(|v| v.abs().powf(gamma)).sum()
}

/// Rectangle-rule Lebesgue norm `(h^N sum_i |f_i|^gamma)^(1/gamma)`.
pub fn lebesgue_norm(f: &Field, gamma: f64) -> Result<f64> {
    Ok(f.lebesgue_power(gamma)?.powf(1.0 / gamma))
}

/// Spectral `H_0^1` seminorm `||grad f||`.
pub fn h1_seminorm(f: &Field) -> Result<f64> {
    f.check_finite()?;
    let mut transform = SineTransform::new(*f.domain());
    let coefficients = transform.forward(f)?;
    Ok(coefficients.h1_seminorm())
}

/// Dirichlet Laplacian eigenvalues of `d` in spectral storage order.
pub fn laplacian_eigenvalues(d: &DomainSpec) -> Vec<f64> {
    d.laplacian_eigenvalues()
}

/// Sine coefficients of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    domain: DomainSpec,
    coefficients: Vec<f64>,
}

impl SpectralField {
    pub fn new(domain: DomainSpec, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != domain.len() {
            return Err(Error::DomainMismatch(format!(
                "expected {} coefficients, got {}",
                domain.len(),
                coefficients.len()
            )));
        }
        check_finite(&coefficients, "spectral field")?;
        Ok(Self { domain, coefficients })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `(L/2)^N sum_k c_k^2`, equal to the squared `L^2` norm of the field.
    pub fn weighted_energy(&self) -> f64 {
        self.domain.parseval_weight() * self.coefficients.iter().map(|c| c * c).sum::<f64>()
    }

    pub fn h1_seminorm(&self) -> f64 {
        let mu = self.domain.laplacian_eigenvalues();
        let sum: f64 = self.coefficients.iter().zip(&mu).map(|(c, m)| m * c * c).sum();
        (self.domain.parseval_weight() * sum).sqrt()
    }
}

/// Forward and inverse sine transform on one domain.
///
/// Holds its own scratch space; create one per worker.
pub struct SineTransform {
    domain: DomainSpec,
    plan: Arc<dyn Dst1<f64>>,
    scratch: Vec<f64>,
    column: Vec<f64>,
    forward_scale: f64,
}

impl SineTransform {
    pub fn new(domain: DomainSpec) -> Self {
        let mut planner = DctPlanner::new();
        let plan = planner.plan_dst1(domain.grid_points());
        let scratch = vec![0.0; plan.get_scratch_len()];
        let m = domain.grid_points();
        let forward_scale = (2.0 / (m + 1) as f64).powi(domain.dimension() as i32);
        Self {
            domain,
            plan,
            scratch,
            column: vec![0.0; m],
            forward_scale,
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Unnormalised separable DST-I in place.
    fn raw(&mut self, data: &mut [f64]) {
        let m = self.domain.grid_points();
        for row in data.chunks_exact_mut(m) {
            self.plan.process_dst1_with_scratch(row, &mut self.scratch);
        }
        if self.domain.dimension() == 2 {
            for j in 0..m {
                for i in 0..m {
                    self.column[i] = data[i * m + j];
                }
                self.plan.process_dst1_with_scratch(&mut self.column, &mut self.scratch);
                for i in 0..m {
                    data[i * m + j] = self.column[i];
                }
            }
        }
    }

    /// Physical values to sine coefficients, in place.
    pub fn forward_in_place(&mut self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.domain.len());
        self.raw(data);
        let s = self.forward_scale;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Sine coefficients to physical values, in place.
    pub fn inverse_in_place(&mut self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.domain.len());
        self.raw(data);
    }

    pub fn forward(&mut self, f: &Field) -> Result<SpectralField> {
        if f.domain() != &self.domain {
            return Err(Error::DomainMismatch(format!("{} vs {}", f.domain(), self.domain)));
        }
        let mut data = f.values().to_vec();
        self.forward_in_place(&mut data);
        Ok(SpectralField {
            domain: self.domain,
            coefficients: data,
        })
    }

    pub fn inverse(&mut self, c: &SpectralField) -> Result<Field> {
        if c.domain() != &self.domain {
            return Err(Error::DomainMismatch(format!("{} vs {}", c.domain(), self.domain)));
        }
        let mut data = c.coefficients().to_vec();
        self.inverse_in_place(&mut data);
        Ok(Field::from_raw(self.domain, data))
    }
}

pub fn transform_forward(f: &Field) -> Result<SpectralField> {
    SineTransform::new(*f.domain()).forward(f)
}

pub fn transform_inverse(c: &SpectralField) -> Result<Field> {
    SineTransform::new(*c.domain()).inverse(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(m: usize) -> DomainSpec {
        DomainSpec::new(1, 1.0, m).unwrap()
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(DomainSpec::new(3, 1.0, 16).is_err());
        assert!(DomainSpec::new(1, 0.0, 16).is_err());
        assert!(DomainSpec::new(1, 1.0, 7).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let d = line(8);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(d, v), Err(Error::NonFinite { index: 3, .. })));
        assert!(Field::new(d, vec![0.0; 7]).is_err());
    }

    #[test]
    fn norm_of_zero_and_constant() {
        let d = line(127);
        assert_eq!(lebesgue_norm(&d.zeros(), 4.0).unwrap(), 0.0);
        let one = d.constant(1.0).unwrap();
        assert_relative_eq!(lebesgue_norm(&one, 2.0).unwrap(), (127.0f64 / 128.0).sqrt(), max_relative = 1e-14);
        assert!(lebesgue_norm(&one, 0.5).is_err());
    }

    #[test]
    fn sine_norms_converge() {
        let d = line(255);
        let f = d.eigenmode([1, 0]);
        assert_relative_eq!(lebesgue_norm(&f, 2.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(h1_seminorm(&f).unwrap(), PI / 2f64.sqrt(), max_relative = 1e-12);
        let g = d.eigenmode([2, 0]);
        assert_relative_eq!(h1_seminorm(&g).unwrap() / h1_seminorm(&f).unwrap(), 2.0, max_relative = 1e-12);
        assert_eq!(h1_seminorm(&d.zeros()).unwrap(), 0.0);
    }

    #[test]
    fn eigenvalue_conventions() {
        let d = line(31);
        let mu = d.laplacian_eigenvalues();
        assert_relative_eq!(mu[0], PI * PI, max_relative = 1e-15);
        assert_relative_eq!(mu[1], 4.0 * PI * PI, max_relative = 1e-15);
        let sq = DomainSpec::new(2, 1.0, 16).unwrap().laplacian_eigenvalues();
        assert_relative_eq!(sq[0], 2.0 * PI * PI, max_relative = 1e-15);
        let fd = d.with_eigenvalues(EigenvalueConvention::SecondDifference).laplacian_eigenvalues();
        assert!(fd[0] < mu[0] && (fd[0] - mu[0]).abs() / mu[0] < 1e-2);
        assert!(fd.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn eigenmode_has_single_coefficient() {
        for dim in [1, 2] {
            let d = DomainSpec::new(dim, 2.0, 16).unwrap();
            let k = [3, 2];
            let c = transform_forward(&d.eigenmode(k)).unwrap();
            for (i, v) in c.coefficients().iter().enumerate() {
                let w = d.wave_numbers(i);
                let hit = w[0] == k[0] && (dim == 1 || w[1] == k[1]);
                if hit {
                    assert_relative_eq!(*v, 1.0, max_relative = 1e-12);
                } else {
                    assert!(v.abs() < 1e-13, "slot {i}: {v}");
                }
            }
        }
    }

    #[test]
    fn transform_matches_direct_sum() {
        let d = line(12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::new(d, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let c = transform_forward(&f).unwrap();
        for k in 1..=12 {
            let direct: f64 = (1..=12)
                .map(|i| f.values()[i - 1] * (PI * (i * k) as f64 / 13.0).sin())
                .sum::<f64>()
                * 2.0
                / 13.0;
            assert_relative_eq!(c.coefficients()[k - 1], direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn round_trip_and_parseval_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [1, 2] {
            let d = DomainSpec::new(dim, 1.7, if dim == 1 { 63 } else { 12 }).unwrap();
            let mut t = SineTransform::new(d);
            for _ in 0..500 {
                let f = Field::new(d, (0..d.len()).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
                let c = t.forward(&f).unwrap();
                let back = t.inverse(&c).unwrap();
                let err = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
                assert!(err < 1e-12, "round trip {err}");
                let inv = t.inverse(&c).unwrap();
                let again = t.forward(&inv).unwrap();
                let cerr: f64 = again.coefficients().iter().zip(c.coefficients()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(cerr < 1e-12);
                assert_relative_eq!(f.l2_norm().powi(2), c.weighted_energy(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let a = line(8).zeros();
        let b = line(9).zeros();
        assert!(matches!(a.sub(&b), Err(Error::DomainMismatch(_))));
        let mut t = SineTransform::new(line(9));
        assert!(t.forward(&a).is_err());
    }
}
