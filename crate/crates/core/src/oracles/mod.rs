//! Independent ground truth: matrix exponentials, killed semigroups,
//! inclusion–exclusion over ranges, the resolvent identity, the complex
//! Gaussian integral and integration over the local-time simplex.

mod gaussian;
mod killed;
pub mod quad;
mod resolvent;
mod simplex;

pub use gaussian::{gaussian_identity_check, gaussian_identity_check_with, GaussianCheck, GaussianMethod};
pub use killed::{killed_prob, matrix_exponential, matrix_exponential_complex, range_exact_prob, MAX_RANGE_SUBSETS};
pub use resolvent::{resolvent_check, ResolventCheck};
pub use simplex::{simplex_integrate, SimplexChart, SimplexIntegral, SimplexResolution};
