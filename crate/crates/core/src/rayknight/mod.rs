//! Ray–Knight description of walk local times at an inverse local time:
//! Bessel functions, the two transition kernels, exact samplers and a
//! statistical test battery against simulated walks.

mod bessel;
mod kernels;
mod ks;
mod statistical;

pub use bessel::{bessel_i, bessel_i_scaled, i0e, i1e};
pub use kernels::{f_kernel, kernel_cdf_sorted, kernel_moments, pstar_kernel, sample_f, sample_pstar, Kernel, PStar};
pub use ks::{ks_critical, ks_one_sample, ks_two_sample};
pub use statistical::{rk_statistical_test, simulate_profiles, LocalTimeProfile, RkOptions, RkReport, RkTestLine};
