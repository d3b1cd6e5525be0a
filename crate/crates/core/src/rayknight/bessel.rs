use crate::error::{Error, Result};

const ASYMPTOTIC_FROM: f64 = 30.0;

fn check(z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Bessel argument must be finite and nonnegative, got {z}")))
    }
}

/// `e^{-z} I_nu(z)` by the power series.
fn series_scaled(order: u32, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = if order == 0 { 1.0 } else { 0.5 * z };
    let mut sum = term;
    let mut i = 0.0;
    loop {
        i += 1.0;
        term *= q / (i * (i + order as f64));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum * (-z).exp()
}

/// `e^{-z} I_nu(z)` by the large-argument expansion.
fn asymptotic_scaled(order: u32, z: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// `e^{-z} I_nu(z)` for `nu` in `{0, 1}`.
pub fn bessel_i_scaled(order: u32, z: f64) -> Result<f64> {
    check(z)?;
    if order > 1 {
        return Err(Error::InvalidArgument("only orders 0 and 1 are supported".into()));
    }
    Ok(if z > ASYMPTOTIC_FROM { asymptotic_scaled(order, z) } else { series_scaled(order, z) })
}

/// Modified Bessel function `I_nu(z)` of order 0 or 1.
pub fn bessel_i(order: u32, z: f64) -> Result<f64> {
    check(z)?;
    if order > 1 {
        return Err(Error::InvalidArgument("only orders 0 and 1 are supported".into()));
    }
    if z <= ASYMPTOTIC_FROM {
        let q = 0.25 * z * z;
        let mut term = if order == 0 { 1.0 } else { 0.5 * z };
        let mut sum = term;
        let mut i = 0.0;
        loop {
            i += 1.0;
            term *= q / (i * (i + order as f64));
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
        }
        Ok(sum)
    } else {
        Ok(asymptotic_scaled(order, z) * z.exp())
    }
}

pub fn i0e(z: f64) -> f64 {
    bessel_i_scaled(0, z).unwrap_or(f64::NAN)
}

pub fn i1e(z: f64) -> f64 {
    bessel_i_scaled(1, z).unwrap_or(f64::NAN)
}
