//! Numerical laboratory for dissipative reaction-diffusion equations
//! `u_t + lambda u - Laplace u + f(u) = g` on boxes with Dirichlet boundary.

pub mod attractor;
pub mod domain;
pub mod error;
pub mod estimates;
pub mod fit;
pub mod nonlinearity;
pub mod profiles;
mod radial;
pub mod solver;

pub use domain::{DomainSpec, EigenvalueConvention, Field, SineTransform, SpectralField};
pub use error::{Error, Result};
pub use nonlinearity::{
    certify_conditions, certify_f_add, decompose, CertificationReport, Decomposition, DissipativityConstants,
    LipschitzGrowthConstants, NonlinearitySpec, ScanSpec,
};
pub use solver::{
    energy_monitor, solve, solve_pair, EnergyReport, PairTrajectory, ProblemSpec, Scheme, SolverConfig, Trajectory,
};
