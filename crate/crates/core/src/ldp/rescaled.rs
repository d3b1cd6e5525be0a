use super::chi::{chi_continuum_zero, chi_discrete, Lattice};
use super::functional::FunctionalSpec;
use super::optim::OptimOptions;
use super::thm36::thm36_error_terms;
use crate::error::{Error, Result};

/// One horizon of the rescaled experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledRow {
    pub t: f64,
    pub alpha: f64,
    pub sites: usize,
    pub eta: f64,
    pub error_terms: f64,
    /// `alpha^2 / T * error_terms`.
    pub scaled_error: f64,
    /// Discrete variational value on the box of radius `R alpha`.
    pub chi_t: f64,
    /// `-chi_t + scaled_error`.
    pub scaled_rhs: f64,
    /// Continuum value when known in closed form.
    pub chi_continuum: Option<f64>,
    pub disagreement: bool,
}

/// Runs the finite-T bound for `alpha_T = T^exponent` on the box
/// `(-R, R)^d`; the exponent must lie in `(0, 1/(d+2))`.
pub fn rescaled_bound_experiment(
    d: usize,
    radius: f64,
    exponent: f64,
    horizons: &[f64],
    f: &FunctionalSpec,
    opts: &OptimOptions,
) -> Result<Vec<RescaledRow>> {
    let upper = 1.0 / (d as f64 + 2.0);
    if !(exponent > 0.0 && exponent < upper) {
        return Err(Error::InvalidArgument(format!("scale exponent {exponent} outside the growth window (0, {upper})")));
    }
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("no horizons given".into()));
    }
    horizons
        .iter()
        .map(|&t| {
            if !(t > 1.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!("horizon {t} must exceed 1")));
            }
            let alpha = t.powf(exponent);
            let lattice = Lattice::from_scale(d, radius, alpha)?;
            let func = f.instantiate(alpha, d, lattice.len())?;
            let opt = chi_discrete(&lattice, func.as_ref(), opts)?;
            let eta = lattice.eta();
            let error_terms = thm36_error_terms(lattice.len(), eta, t);
            let scaled_error = alpha * alpha / t * error_terms;
            Ok(RescaledRow {
                t,
                alpha,
                sites: lattice.len(),
                eta,
                error_terms,
                scaled_error,
                chi_t: opt.value,
                scaled_rhs: -opt.value + scaled_error,
                chi_continuum: f.is_zero().then(|| chi_continuum_zero(d, radius)),
                disagreement: opt.disagreement,
            })
        })
        .collect()
}
