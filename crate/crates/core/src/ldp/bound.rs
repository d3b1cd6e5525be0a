use super::rate::rate_function_symmetric;
use super::measure::MeasureOnRange;
use crate::chain::{eta, Generator, RangeSpec};
use crate::density::LocalTimeVector;
use crate::error::{Error, Result};

fn check(spec: &RangeSpec, l: &LocalTimeVector) -> Result<()> {
    if l.len() != spec.len() {
        return Err(Error::InvalidLocalTimes(format!("expected {} local times, got {}", spec.len(), l.len())));
    }
    Ok(())
}

/// Logarithm of the pointwise upper bound on the density for a positive tilt
/// `g` on the range (default `sqrt(l / T)`).
pub fn log_density_bound(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector, g: Option<&[f64]>) -> Result<f64> {
    check(spec, l)?;
    let r = spec.range();
    let m = r.len();
    let t = l.horizon();
    let lt = l.times();
    let default: Vec<f64>;
    let g = match g {
        Some(g) => g,
        None => {
            default = lt.iter().map(|x| (x / t).sqrt()).collect();
            &default
        }
    };
    if g.len() != m || g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidArgument("tilt must be positive with one value per state of the range".into()));
    }
    let a = gen.submatrix(r);
    let eta = eta(gen, r)?;
    let mut tilt = 0.0;
    let mut cross = 0.0;
    for x in 0..m {
        let mut ag = a[(x, x)] * g[x];
        for y in 0..m {
            if y != x {
                ag += a[(x, y)] * g[y];
                cross += lt[x].sqrt() * g[y] * a[(x, y)] / (lt[y].sqrt() * g[x]);
            }
        }
        tilt += lt[x] * ag / g[x];
    }
    let volume: f64 = (0..m)
        .filter(|&x| x != spec.start_local() && x != spec.end_local())
        .map(|x| 0.5 * (t / lt[x]).ln())
        .sum();
    Ok(tilt + volume + (m as f64 - 1.0) * eta.ln() + (1.0 / eta + 1.0 / (4.0 * eta * eta * t)) * cross)
}

/// Pointwise upper bound on the density.
pub fn density_bound(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector, g: Option<&[f64]>) -> Result<f64> {
    Ok(log_density_bound(gen, spec, l, g)?.exp())
}

/// The bound for symmetric generators:
/// `exp(-T I(l/T)) prod sqrt(T/l_x) eta^(|R|-1) exp(|R|(1 + 1/(4 eta T)))`.
pub fn density_bound_symmetric(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector) -> Result<f64> {
    check(spec, l)?;
    let r = spec.range();
    let m = r.len() as f64;
    let t = l.horizon();
    let eta = eta(gen, r)?;
    let mu = MeasureOnRange::from_local_times(r.to_vec(), l)?;
    let rate = rate_function_symmetric(gen, &mu)?;
    let volume: f64 = (0..r.len())
        .filter(|&x| x != spec.start_local() && x != spec.end_local())
        .map(|x| 0.5 * (t / l.times()[x]).ln())
        .sum();
    Ok((-t * rate + volume + (m - 1.0) * eta.ln() + m * (1.0 + 1.0 / (4.0 * eta * t))).exp())
}
