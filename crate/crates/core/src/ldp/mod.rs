//! Large deviations of the empirical measure `l_T / T`: the rate function,
//! pointwise density bounds, finite-horizon probability bounds and the
//! rescaled variational problems on lattice boxes.

mod bound;
mod chi;
mod functional;
mod measure;
mod optim;
mod rate;
mod region;
mod rescaled;
mod thm36;

pub use bound::{density_bound, density_bound_symmetric, log_density_bound};
pub use chi::{chi_continuum_zero, chi_discrete, Lattice, MAX_LATTICE_SITES};
pub use functional::{Entropy, Functional, FunctionalSpec, Linear, Power, Zero};
pub use measure::{MeasureOnRange, TiltFunction, MASS_TOL};
pub use optim::{minimize_on_simplex, softmax, Energy, OptimOptions, SimplexOptimum};
pub use rate::{rate_function, rate_function_general, rate_function_symmetric, RateOptions, RateResult};
pub use region::{project_simplex, Region, SimplexBall, WholeSimplex, REGION_TOL};
pub use rescaled::{rescaled_bound_experiment, RescaledRow};
pub use thm36::{thm36_error_terms, thm36_lhs, thm36_rhs, thm36_rhs_functional, Thm36Result};
