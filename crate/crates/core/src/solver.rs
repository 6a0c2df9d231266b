//! Pseudo-spectral time stepping for `u_t + lambda u - Laplace u + f(u) = g`.
//!
//! The linear part is treated implicitly and is diagonal in the sine basis;
//! the reaction term is explicit. Pairs of solutions are evolved as a base
//! solution together with their difference, whose reaction increment
//! `f(u2 + d) - f(u2)` is formed without cancellation.

use std::io::{Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::domain::{check_finite, power_sum, DomainSpec, Field, SineTransform};
use crate::error::{Error, Result};
use crate::nonlinearity::{DissipativityConstants, NonlinearitySpec};

/// Reaction terms with `dt * |f'(u)|` above this trigger a stability warning.
const STABILITY_GUARD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    lambda: f64,
    f: NonlinearitySpec,
    g: Field,
}

impl ProblemSpec {
    pub fn new(lambda: f64, f: NonlinearitySpec, g: Field) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        g.check_finite()?;
        Ok(Self { lambda, f, g })
    }

    /// Problem with zero forcing.
    pub fn unforced(lambda: f64, f: NonlinearitySpec, domain: DomainSpec) -> Result<Self> {
        Self::new(lambda, f, domain.zeros())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.f
    }

    pub fn forcing(&self) -> &Field {
        &self.g
    }

    pub fn domain(&self) -> &DomainSpec {
        self.g.domain()
    }

    pub fn with_forcing(&self, g: Field) -> Result<Self> {
        if g.domain() != self.domain() {
            return Err(Error::DomainMismatch("forcing lives on a different grid".into()));
        }
        Self::new(self.lambda, self.f.clone(), g)
    }

    fn check_domain(&self, u: &Field) -> Result<()> {
        if u.domain() != self.domain() {
            return Err(Error::DomainMismatch(format!(
                "state on {} but problem on {}",
                u.domain(),
                self.domain()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// First order: implicit linear part, explicit reaction.
    #[default]
    ImexEuler,
    /// Second order: Crank-Nicolson linear part, Adams-Bashforth reaction.
    ImexCnAb2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_stride() -> usize {
    1
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme, record_stride: usize) -> Result<Self> {
        let c = Self { dt, t_end, scheme, record_stride };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::param("t_end", format!("must be at least dt, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be at least 1"));
        }
        self.steps().map(|_| ())
    }

    /// Number of steps; `t_end` must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if ((n * self.dt - self.t_end) / self.t_end).abs() > 1e-9 || n < 1.0 {
            return Err(Error::param("t_end", format!("{} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        Ok(n as usize)
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    /// Spacing of recorded times.
    pub fn record_interval(&self) -> f64 {
        self.dt * self.record_stride as f64
    }
}

/// Linear part and scratch shared by single and pair integrators.
struct Stepper {
    transform: SineTransform,
    /// `lambda + mu_k`.
    decay: Vec<f64>,
    dt: f64,
    scheme: Scheme,
    steps: usize,
    warned: bool,
}

impl Stepper {
    fn new(problem: &ProblemSpec, dt: f64, scheme: Scheme) -> Self {
        let domain = *problem.domain();
        let decay = domain
            .laplacian_eigenvalues()
            .into_iter()
            .map(|mu| problem.lambda + mu)
            .collect();
        Self {
            transform: SineTransform::new(domain),
            decay,
            dt,
            scheme,
            steps: 0,
            warned: false,
        }
    }

    fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Advances `hat` given the transformed explicit term `n_hat` and, for the
    /// multistep scheme, the previous one.
    fn advance(&self, hat: &mut [f64], n_hat: &[f64], prev: Option<&[f64]>) {
        let dt = self.dt;
        match self.scheme {
            Scheme::ImexEuler => {
                for ((u, &n), &a) in hat.iter_mut().zip(n_hat).zip(&self.decay) {
                    *u = (*u + dt * n) / (1.0 + dt * a);
                }
            }
            Scheme::ImexCnAb2 => {
                for (k, (u, &n)) in hat.iter_mut().zip(n_hat).enumerate() {
                    let a = self.decay[k];
                    let explicit = match prev {
                        Some(p) => 1.5 * n - 0.5 * p[k],
                        None => n,
                    };
                    *u = ((1.0 - 0.5 * dt * a) * *u + dt * explicit) / (1.0 + 0.5 * dt * a);
                }
            }
        }
    }

    fn guard(&mut self, f: &NonlinearitySpec, values: &[f64]) {
        if self.warned || f.degree() < 1 {
            return;
        }
        let slope = values.iter().map(|&v| f.derivative(v).abs()).fold(0.0, f64::max);
        if self.dt * slope > STABILITY_GUARD {
            warn!(
                "dt * max|f'(u)| = {:.3} exceeds {STABILITY_GUARD} at t = {}",
                self.dt * slope,
                self.time()
            );
            self.warned = true;
        }
    }

    fn blow_up(&self) -> Error {
        Error::BlowUp {
            time: self.time(),
            step: self.steps,
        }
    }
}

/// Single-trajectory integrator holding the current state.
pub struct Integrator<'a> {
    problem: &'a ProblemSpec,
    stepper: Stepper,
    hat: Vec<f64>,
    values: Vec<f64>,
    work: Vec<f64>,
    prev: Option<Vec<f64>>,
}

impl<'a> Integrator<'a> {
    pub fn new(u0: &Field, problem: &'a ProblemSpec, dt: f64, scheme: Scheme) -> Result<Self> {
        problem.check_domain(u0)?;
        u0.check_finite()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let mut stepper = Stepper::new(problem, dt, scheme);
        let values = u0.values().to_vec();
        let mut hat = values.clone();
        stepper.transform.forward_in_place(&mut hat);
        Ok(Self {
            problem,
            stepper,
            hat,
            values,
            work: vec![0.0; u0.values().len()],
            prev: None,
        })
    }

    pub fn time(&self) -> f64 {
        self.stepper.time()
    }

    pub fn steps(&self) -> usize {
        self.stepper.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sine coefficients of the current state.
    pub fn coefficients(&self) -> &[f64] {
        &self.hat
    }

    pub fn state(&self) -> Field {
        Field::from_raw(*self.problem.domain(), self.values.clone())
    }

    pub fn step(&mut self) -> Result<()> {
        let f = &self.problem.f;
        let g = self.problem.g.values();
        self.stepper.guard(f, &self.values);
        for ((w, &u), &gi) in self.work.iter_mut().zip(&self.values).zip(g) {
            *w = gi - f.value(u);
        }
        self.stepper.transform.forward_in_place(&mut self.work);
        self.stepper.advance(&mut self.hat, &self.work, self.prev.as_deref());
        if self.stepper.scheme == Scheme::ImexCnAb2 {
            match &mut self.prev {
                Some(p) => p.copy_from_slice(&self.work),
                None => self.prev = Some(self.work.clone()),
            }
        }
        self.stepper.steps += 1;
        self.values.copy_from_slice(&self.hat);
        self.stepper.transform.inverse_in_place(&mut self.values);
        if check_finite(&self.values, "state").is_err() {
            return Err(self.stepper.blow_up());
        }
        Ok(())
    }
}

/// Integrator for a base solution `u2` and a difference `d = u1 - u2`.
pub struct PairIntegrator<'a> {
    base: Integrator<'a>,
    stepper: Stepper,
    hat: Vec<f64>,
    values: Vec<f64>,
    work: Vec<f64>,
    prev: Option<Vec<f64>>,
}

impl<'a> PairIntegrator<'a> {
    pub fn new(u20: &Field, d0: &Field, problem: &'a ProblemSpec, dt: f64, scheme: Scheme) -> Result<Self> {
        problem.check_domain(d0)?;
        d0.check_finite()?;
        let base = Integrator::new(u20, problem, dt, scheme)?;
        let mut stepper = Stepper::new(problem, dt, scheme);
        stepper.warned = true;
        let values = d0.values().to_vec();
        let mut hat = values.clone();
        stepper.transform.forward_in_place(&mut hat);
        Ok(Self {
            base,
            stepper,
            hat,
            values,
            work: vec![0.0; d0.values().len()],
            prev: None,
        })
    }

    pub fn time(&self) -> f64 {
        self.stepper.time()
    }

    pub fn base(&self) -> &Integrator<'a> {
        &self.base
    }

    pub fn difference_values(&self) -> &[f64] {
        &self.values
    }

    pub fn difference_coefficients(&self) -> &[f64] {
        &self.hat
    }

    pub fn difference(&self) -> Field {
        Field::from_raw(*self.base.problem.domain(), self.values.clone())
    }

    pub fn step(&mut self) -> Result<()> {
        let f = &self.base.problem.f;
        for ((w, &d), &u) in self.work.iter_mut().zip(&self.values).zip(&self.base.values) {
            *w = -f.difference(u, d);
        }
        self.base.step()?;
        self.stepper.transform.forward_in_place(&mut self.work);
        self.stepper.advance(&mut self.hat, &self.work, self.prev.as_deref());
        if self.stepper.scheme == Scheme::ImexCnAb2 {
            match &mut self.prev {
                Some(p) => p.copy_from_slice(&self.work),
                None => self.prev = Some(self.work.clone()),
            }
        }
        self.stepper.steps += 1;
        self.values.copy_from_slice(&self.hat);
        self.stepper.transform.inverse_in_place(&mut self.values);
        if check_finite(&self.values, "difference").is_err() {
            return Err(self.stepper.blow_up());
        }
        Ok(())
    }
}

/// One step of the configured scheme from `u` (a multistep scheme starts up
/// with its one-step variant).
pub fn step(u: &Field, problem: &ProblemSpec, dt: f64, scheme: Scheme) -> Result<Field> {
    let mut it = Integrator::new(u, problem, dt, scheme)?;
    it.step()?;
    Ok(it.state())
}

/// Recorded states of one solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory records the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory records the initial time")
    }

    /// `(t, ||u||_2, ||u||_p, ||grad u||)` for every recorded state.
    pub fn norm_rows(&self, p: f64) -> Result<Vec<[f64; 4]>> {
        let Some(first) = self.states.first() else {
            return Ok(Vec::new());
        };
        let mut transform = SineTransform::new(*first.domain());
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, u)| {
                let grad = transform.forward(u)?.h1_seminorm();
                Ok([t, u.l2_norm(), u.lebesgue_norm(p)?, grad])
            })
            .collect()
    }

    /// CSV with header `t,norm_l2,norm_lp,norm_grad`.
    pub fn write_csv<W: Write>(&self, p: f64, mut out: W) -> Result<()> {
        writeln!(out, "t,norm_l2,norm_lp,norm_grad")?;
        for r in self.norm_rows(p)? {
            writeln!(out, "{},{},{},{}", r[0], r[1], r[2], r[3])?;
        }
        Ok(())
    }
}

/// A base solution and the difference to a second solution.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTrajectory {
    pub base: Trajectory,
    pub difference: Trajectory,
}

impl PairTrajectory {
    pub fn initial_difference(&self) -> &Field {
        &self.difference.states[0]
    }

    /// Reconstructs the second solution `u2 + d` at every recorded time.
    pub fn second_solution(&self) -> Result<Trajectory> {
        let states = self
            .base
            .states
            .iter()
            .zip(&self.difference.states)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.base.times.clone(),
            states,
        })
    }
}

/// Integrates to `cfg.t_end`, calling `observe(t, values)` on the initial
/// state and after every step.
pub fn solve_observed<F>(u0: &Field, problem: &ProblemSpec, cfg: &SolverConfig, mut observe: F) -> Result<Field>
where
    F: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    let n = cfg.steps()?;
    let mut it = Integrator::new(u0, problem, cfg.dt, cfg.scheme)?;
    observe(0.0, it.values());
    for _ in 0..n {
        it.step()?;
        observe(it.time(), it.values());
    }
    Ok(it.state())
}

pub fn solve(u0: &Field, problem: &ProblemSpec, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.steps()?;
    let mut it = Integrator::new(u0, problem, cfg.dt, cfg.scheme)?;
    let mut tr = Trajectory {
        times: vec![0.0],
        states: vec![u0.clone()],
    };
    for i in 1..=n {
        it.step()?;
        if i % cfg.record_stride == 0 || i == n {
            tr.times.push(it.time());
            tr.states.push(it.state());
        }
    }
    Ok(tr)
}

/// Pair integration calling `observe(t, base, difference)` after every step
/// and on the initial data.
pub fn solve_pair_observed<F>(
    u20: &Field,
    d0: &Field,
    problem: &ProblemSpec,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<(Field, Field)>
where
    F: FnMut(f64, &[f64], &[f64]),
{
    cfg.validate()?;
    let n = cfg.steps()?;
    let mut it = PairIntegrator::new(u20, d0, problem, cfg.dt, cfg.scheme)?;
    observe(0.0, it.base().values(), it.difference_values());
    for _ in 0..n {
        it.step()?;
        observe(it.time(), it.base().values(), it.difference_values());
    }
    Ok((it.base().state(), it.difference()))
}

pub fn solve_pair(u20: &Field, d0: &Field, problem: &ProblemSpec, cfg: &SolverConfig) -> Result<PairTrajectory> {
    cfg.validate()?;
    let n = cfg.steps()?;
    let mut it = PairIntegrator::new(u20, d0, problem, cfg.dt, cfg.scheme)?;
    let mut base = Trajectory {
        times: vec![0.0],
        states: vec![u20.clone()],
    };
    let mut difference = Trajectory {
        times: vec![0.0],
        states: vec![d0.clone()],
    };
    for i in 1..=n {
        it.step()?;
        if i % cfg.record_stride == 0 || i == n {
            base.times.push(it.time());
            base.states.push(it.base().state());
            difference.times.push(it.time());
            difference.states.push(it.difference());
        }
    }
    Ok(PairTrajectory { base, difference })
}

/// Smallest constants making the two energy inequalities hold along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Infimal `c` with `d/dt||u||^2 + lambda||u||^2 + ||u||_p^p <= c||g||^2 + c`.
    pub c_l2: f64,
    /// Infimal `c` with `d/dt||u||_p^p + lambda||u||_p^p + alpha||u||_(2p-2)^(2p-2) <= c||g||^2 + c`.
    pub c_lp: f64,
    /// Time (left end of the interval) where each constant is attained.
    pub argmax_l2: f64,
    pub argmax_lp: f64,
    pub g_norm_sq: f64,
    pub intervals: usize,
    /// False when the recording interval exceeds 0.01.
    pub reliable: bool,
}

/// Forward-difference energy residuals over the recorded intervals.
pub fn energy_monitor(tr: &Trajectory, problem: &ProblemSpec, c: &DissipativityConstants) -> Result<EnergyReport> {
    if tr.len() < 2 {
        return Err(Error::param("trajectory", "need at least two recorded states"));
    }
    let p = c.p;
    let lambda = problem.lambda;
    let g_norm_sq = problem.g.l2_norm().powi(2);
    let denom = g_norm_sq + 1.0;
    let vol = problem.domain().cell_volume();
    let mut out = EnergyReport {
        c_l2: 0.0,
        c_lp: 0.0,
        argmax_l2: 0.0,
        argmax_lp: 0.0,
        g_norm_sq,
        intervals: tr.len() - 1,
        reliable: true,
    };
    let energies: Vec<(f64, f64, f64)> = tr
        .states
        .iter()
        .map(|u| {
            let v = u.values();
            (
                vol * power_sum(v, 2.0),
                vol * power_sum(v, p),
                vol * power_sum(v, 2.0 * p - 2.0),
            )
        })
        .collect();
    for i in 0..tr.len() - 1 {
        let dt = tr.times[i + 1] - tr.times[i];
        if dt > 0.01 + 1e-12 {
            out.reliable = false;
        }
        let (e2, ep, eq) = energies[i];
        let (n2, np, _) = energies[i + 1];
        let l2 = ((n2 - e2) / dt + lambda * e2 + ep) / denom;
        let lp = ((np - ep) / dt + lambda * ep + c.alpha * eq) / denom;
        if l2 > out.c_l2 {
            out.c_l2 = l2;
            out.argmax_l2 = tr.times[i];
        }
        if lp > out.c_lp {
            out.c_lp = lp;
            out.argmax_lp = tr.times[i];
        }
    }
    Ok(out)
}

/// Writes states as: `u32 N, u32 M, f64 L, u64 count`, then `count * M^N`
/// raw `f64`, all little-endian.
pub fn write_states<W: Write>(domain: &DomainSpec, states: &[Field], mut out: W) -> Result<()> {
    out.write_all(&(domain.dimension() as u32).to_le_bytes())?;
    out.write_all(&(domain.grid_points() as u32).to_le_bytes())?;
    out.write_all(&domain.side_length().to_le_bytes())?;
    out.write_all(&(states.len() as u64).to_le_bytes())?;
    for s in states {
        if s.domain() != domain {
            return Err(Error::DomainMismatch("state on a different grid".into()));
        }
        for v in s.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_states<R: Read>(mut input: R) -> Result<(DomainSpec, Vec<Field>)> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b8)?;
    let side = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let domain = DomainSpec::new(dim, side, m)?;
    let mut states = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let mut values = Vec::with_capacity(domain.len());
        for _ in 0..domain.len() {
            input.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        states.push(Field::new(domain, values)?);
    }
    Ok((domain, states))
}
