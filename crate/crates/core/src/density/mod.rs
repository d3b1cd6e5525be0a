//! The joint density of the local times on a fixed range.
//!
//! Three evaluators share the same conventions:
//!
//! - [`density_series`] sums the balanced-flow expansion of the angular
//!   integral and applies the cofactor expansion term by term;
//! - [`density_quadrature`] integrates the derivative-free angular form with a
//!   periodic trapezoid rule;
//! - [`density_finite_difference`] applies the differential operator of the
//!   original formula by central differences.
//!
//! Local times are given in the order of [`RangeSpec::range`].

mod finite_difference;
mod flows;
mod quadrature;
mod series;

pub use finite_difference::{density_finite_difference, DEFAULT_RELATIVE_STEP};
pub use flows::{enumerate_balanced_flows, BalancedFlow, MAX_FLOWS};
pub use quadrature::{density_quadrature, density_quadrature_adaptive, QUADRATURE_MAX_NODES};
pub use series::{
    density_series, density_series_gauged, gauge_invariance_check, lemma33_upper, theta_derivatives,
    theta_integral_series, ThetaDerivatives, ThetaValue,
};

use std::fmt;

use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};
use crate::oracles::{simplex_integrate, SimplexChart, SimplexIntegral, SimplexResolution};

/// Relative tolerance on `sum(l) == T` when a horizon is supplied.
pub const HORIZON_TOL: f64 = 1e-12;

/// A point of the open simplex of local-time vectors on a range.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeVector {
    times: Vec<f64>,
    horizon: f64,
}

impl LocalTimeVector {
    /// Takes the horizon to be the sum of the entries.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidLocalTimes("empty vector".into()));
        }
        if let Some(bad) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidLocalTimes(format!("entry {bad} is not strictly positive")));
        }
        let horizon = times.iter().sum();
        Ok(Self { times, horizon })
    }

    /// Like [`LocalTimeVector::new`] but also checks the entries sum to `horizon`.
    pub fn with_horizon(times: Vec<f64>, horizon: f64) -> Result<Self> {
        let v = Self::new(times)?;
        if (v.horizon - horizon).abs() > HORIZON_TOL * horizon.abs() {
            return Err(Error::InvalidLocalTimes(format!(
                "entries sum to {}, expected horizon {horizon}",
                v.horizon
            )));
        }
        Ok(Self { horizon, ..v })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The normalized measure `l / T`.
    pub fn measure(&self) -> Vec<f64> {
        self.times.iter().map(|t| t / self.horizon).collect()
    }
}

/// Which evaluator produced a [`DensityResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Series,
    Quadrature,
    FiniteDifference,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Quadrature => "quadrature",
            Method::FiniteDifference => "finite-difference",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Truncation or discretization used by an evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// Number of circulation shells summed and the largest shell radius.
    Shells { shells: usize, max_radius: usize },
    /// Trapezoid nodes per free angle.
    Nodes { per_angle: usize },
    /// Finest difference step.
    Step { h: f64 },
    /// No discretization was needed.
    Exact,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Shells { shells, max_radius } => write!(f, "shells={shells};radius={max_radius}"),
            Resolution::Nodes { per_angle } => write!(f, "nodes={per_angle}"),
            Resolution::Step { h } => write!(f, "step={h:e}"),
            Resolution::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityResult {
    pub value: f64,
    pub method: Method,
    pub error_estimate: f64,
    pub resolution: Resolution,
}

/// Rounding error of `exp(arg)` as computed in floating point.
pub(crate) fn exp_roundoff(arg: f64) -> f64 {
    let v = arg.exp();
    if v == 0.0 {
        0.0
    } else {
        4.0 * f64::EPSILON * v * (1.0 + arg.abs())
    }
}

pub(crate) fn check_point(spec: &RangeSpec, l: &LocalTimeVector) -> Result<()> {
    if l.len() != spec.len() {
        return Err(Error::InvalidLocalTimes(format!(
            "{} local times for a range of {} states",
            l.len(),
            spec.len()
        )));
    }
    Ok(())
}

/// Evaluates with the method suggested for the range size: the series for
/// small ranges, quadrature beyond.
pub fn density(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector, tol: f64) -> Result<DensityResult> {
    if spec.len() <= 6 {
        density_series(gen, spec, l, tol)
    } else {
        density_quadrature_adaptive(gen, spec, l, tol, QUADRATURE_MAX_NODES)
    }
}

/// `int F(l) rho(l) dsigma_T` over the local-time simplex of the range.
/// A single-state range is a point mass of weight `exp(A_aa T)`.
pub fn density_integral<F>(
    gen: &Generator,
    spec: &RangeSpec,
    t: f64,
    f: F,
    resolution: SimplexResolution,
    tol: f64,
) -> Result<SimplexIntegral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if spec.len() == 1 {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        let mass = if spec.start() == spec.end() { (gen.rate(spec.start(), spec.start()) * t).exp() } else { 0.0 };
        return Ok(SimplexIntegral { value: mass * f(&[t]), error_estimate: 0.0 });
    }
    let chart = SimplexChart::new(spec.len(), spec.start_local(), t)?;
    let evaluator_err = std::sync::atomic::AtomicU64::new(0);
    let r = simplex_integrate(
        |l| {
            let Ok(lv) = LocalTimeVector::with_horizon(l.to_vec(), t) else {
                return 0.0;
            };
            match density(gen, spec, &lv, tol) {
                Ok(d) => {
                    let e = (d.error_estimate * f(l).abs()).to_bits();
                    evaluator_err.fetch_max(e, std::sync::atomic::Ordering::Relaxed);
                    d.value * f(l)
                }
                Err(_) => f64::NAN,
            }
        },
        &chart,
        resolution,
    )?;
    if !r.value.is_finite() {
        return Err(Error::Numerical("density evaluation failed inside the simplex".into()));
    }
    let worst = f64::from_bits(evaluator_err.into_inner());
    Ok(SimplexIntegral { value: r.value, error_estimate: r.error_estimate + worst * chart.volume() })
}
