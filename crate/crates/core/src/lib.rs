//! Exact joint densities of the local times of a continuous-time Markov chain
//! on a finite range, with independent oracles, large-deviation upper bounds
//! and the Ray–Knight kernels for one-dimensional random walk.
//!
//! The entry points are grouped by module:
//!
//! - [`chain`]: generators, ranges, restriction/killing and `eta`.
//! - [`density`]: the density by series, quadrature and finite differences.
//! - [`simulate`]: exact path simulation and Monte Carlo estimates.
//! - [`oracles`]: matrix exponentials, killed semigroups, simplex integrals.
//! - [`ldp`]: the rate function, density bounds and variational problems.
//! - [`rayknight`]: Bessel kernels, samplers and the statistical test.
//! - [`cli`]: the `ltd` experiment runner.

pub mod chain;
pub mod cli;
pub mod density;
pub mod error;
pub mod ldp;
pub mod linalg;
pub mod oracles;
pub mod parallel;
pub mod rayknight;
pub mod simulate;

pub use chain::{eta, restrict, validate_generator, Generator, RangeSpec, RestrictedGenerator};
pub use density::{
    density_finite_difference, density_integral, density_quadrature, density_series, enumerate_balanced_flows,
    gauge_invariance_check, theta_integral_series, BalancedFlow, DensityResult, LocalTimeVector,
    Method,
};
pub use error::{Error, Result};
