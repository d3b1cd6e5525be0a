//! The original differential form: the cofactor of `-A + d/dl` applied to
//! the angular integral, with derivatives taken by central differences.

use super::series::{cofactor_masks, complement_cofactor, theta_derivatives_scaled};
use super::{check_point, DensityResult, LocalTimeVector, Method, Resolution};
use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};

/// Largest ratio `step / min l` accepted.
pub const MAX_RELATIVE_STEP: f64 = 0.1;

/// First-order step as a fraction of `min l`.
pub const DEFAULT_RELATIVE_STEP: f64 = 5e-3;

/// Step for a mixed difference of order `k` given the first-order step.
/// Extrapolated differences lose `h^4` to truncation and `eps / h^k` to
/// roundoff, so the balanced step scales as `eps^(1/(k+4))`.
fn order_step(step: f64, k: usize, min_l: f64) -> f64 {
    let ratio = f64::EPSILON.powf(1.0 / (k as f64 + 4.0) - 0.2);
    (step * ratio).min(MAX_RELATIVE_STEP * min_l).max(step)
}

/// Tensor central difference of `d^Q g` at `l` with step `h`.
fn mixed_difference(g: &dyn Fn(&[f64]) -> Result<f64>, l: &[f64], members: &[usize], h: f64) -> Result<f64> {
    let k = members.len();
    let mut total = 0.0;
    let mut point = l.to_vec();
    for signs in 0..1u32 << k {
        let mut sign = 1.0;
        for (i, &x) in members.iter().enumerate() {
            if signs >> i & 1 == 1 {
                point[x] = l[x] + h;
            } else {
                point[x] = l[x] - h;
                sign = -sign;
            }
        }
        total += sign * g(&point)?;
    }
    Ok(total / (2.0 * h).powi(k as i32))
}

/// Density by central differences of
/// `G(l) = exp(sum l_x A_xx) * Theta_B(l)` with Richardson extrapolation over
/// two steps `h` and `h / 2`, where `h` is `step` for first-order terms and
/// grows with the order of the mixed difference.
pub fn density_finite_difference(
    gen: &Generator,
    spec: &RangeSpec,
    l: &LocalTimeVector,
    step: f64,
) -> Result<DensityResult> {
    check_point(spec, l)?;
    let lt = l.times();
    let min_l = lt.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    if step > MAX_RELATIVE_STEP * min_l {
        return Err(Error::InvalidArgument(format!(
            "step {step} too large for smallest local time {min_l}"
        )));
    }
    let m = spec.len();
    let a = spec.start_local();
    let b = spec.end_local();
    let am = gen.submatrix(spec.range());
    let mut bm = am.clone();
    bm.fill_diagonal(0.0);
    let diag: Vec<f64> = (0..m).map(|x| am[(x, x)]).collect();
    let g = |p: &[f64]| -> Result<f64> {
        let (d, log_scale) = theta_derivatives_scaled(&bm, p, &[0], 1e-16)?;
        let log_pre: f64 = p.iter().zip(&diag).map(|(t, d)| t * d).sum();
        Ok((log_pre + log_scale).exp() * d.values[0])
    };
    if m == 1 {
        let v = g(lt)?;
        return Ok(DensityResult {
            value: v,
            method: Method::FiniteDifference,
            error_estimate: super::exp_roundoff(v.ln()),
            resolution: Resolution::Exact,
        });
    }
    let neg_a = -&am;
    let g0 = g(lt)?.abs();
    let mut value = 0.0;
    let mut err = 0.0;
    for q in cofactor_masks(m, a, b) {
        let c = complement_cofactor(&neg_a, m, q, a, b);
        if c == 0.0 {
            continue;
        }
        let members: Vec<usize> = (0..m).filter(|&x| q >> x & 1 == 1).collect();
        if members.is_empty() {
            value += c * g(lt)?;
            err += c.abs() * 64.0 * f64::EPSILON * g0;
            continue;
        }
        let h = order_step(step, members.len(), min_l);
        let coarse = mixed_difference(&g, lt, &members, h)?;
        let fine = mixed_difference(&g, lt, &members, h / 2.0)?;
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let roundoff = 64.0 * f64::EPSILON * g0 / (h / 2.0).powi(members.len() as i32);
        value += c * extrapolated;
        err += c.abs() * ((fine - coarse).abs() / 3.0 + roundoff);
    }
    Ok(DensityResult {
        value,
        method: Method::FiniteDifference,
        error_estimate: err,
        resolution: Resolution::Step { h: step / 2.0 },
    })
}
