use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::killed::matrix_exponential_complex;
use super::quad::gauss_legendre_on;
use crate::chain::Generator;
use crate::error::{Error, Result};

const MAX_PANELS: usize = 1_000_000;
const TAIL_TOL: f64 = 1e-14;

/// Outcome of comparing the time integral of the Feynman–Kac semigroup with
/// the linear-solve entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventCheck {
    pub quadrature: Complex64,
    pub direct: Complex64,
    pub deviation: f64,
    pub error_estimate: f64,
    pub t_max: f64,
}

/// Compares `int_0^inf (exp(t (A|S + V)))_{ab} dt` with `(-A|S - V)^{-1}_{ab}`.
pub fn resolvent_check(gen: &Generator, s: &[usize], a: usize, b: usize, v: &[Complex64]) -> Result<ResolventCheck> {
    let s = gen.check_subset(s)?;
    let pa = s.iter().position(|&x| x == a).ok_or_else(|| Error::InvalidRange("start not in S".into()))?;
    let pb = s.iter().position(|&x| x == b).ok_or_else(|| Error::InvalidRange("end not in S".into()))?;
    if v.len() != s.len() {
        return Err(Error::InvalidArgument(format!("potential has length {}, expected {}", v.len(), s.len())));
    }
    if !v.iter().all(|z| z.re < 0.0 && z.is_finite()) {
        return Err(Error::InvalidArgument("potential must have strictly negative real part".into()));
    }
    let n = s.len();
    let mut k = gen.submatrix(&s).map(|x| Complex64::new(x, 0.0));
    for i in 0..n {
        k[(i, i)] += v[i];
    }
    let direct = {
        let neg = -&k;
        let rhs = DVector::from_fn(n, |i, _| if i == pb { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let sol = neg.lu().solve(&rhs).ok_or_else(|| Error::Numerical("singular resolvent".into()))?;
        sol[pa]
    };

    let norm = (0..n).map(|i| (0..n).map(|j| k[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let w = (1.0 / norm).min(1.0);
    let (x20, w20) = gauss_legendre_on(20, 0.0, w);
    let (x10, w10) = gauss_legendre_on(10, 0.0, w);
    let nodes20: Vec<DMatrix<Complex64>> = x20.iter().map(|&t| matrix_exponential_complex(&k, t)).collect::<Result<_>>()?;
    let nodes10: Vec<DMatrix<Complex64>> = x10.iter().map(|&t| matrix_exponential_complex(&k, t)).collect::<Result<_>>()?;
    let step = matrix_exponential_complex(&k, w)?;

    let mut row = nalgebra::RowDVector::from_fn(n, |_, j| if j == pa { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
    let mut fine = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut panels = 0;
    loop {
        let mut p20 = Complex64::new(0.0, 0.0);
        for (m, wt) in nodes20.iter().zip(&w20) {
            p20 += (&row * m)[pb] * *wt;
        }
        let mut p10 = Complex64::new(0.0, 0.0);
        for (m, wt) in nodes10.iter().zip(&w10) {
            p10 += (&row * m)[pb] * *wt;
        }
        fine += p20;
        err += (p20 - p10).norm();
        row = &row * &step;
        panels += 1;
        let mass: f64 = row.iter().map(|z| z.norm()).sum();
        if mass < TAIL_TOL {
            break;
        }
        if panels >= MAX_PANELS {
            return Err(Error::NonConvergence(format!("time quadrature did not decay below {TAIL_TOL} by t = {}", panels as f64 * w)));
        }
    }
    Ok(ResolventCheck {
        quadrature: fine,
        direct,
        deviation: (fine - direct).norm(),
        error_estimate: err + TAIL_TOL * w,
        t_max: panels as f64 * w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_potential() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let v = [Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)];
        let r = resolvent_check(&g, &[0, 1], 0, 1, &v).unwrap();
        assert!((r.direct.re - 0.2).abs() < 1e-14);
        assert!(r.deviation < 1e-8, "{}", r.deviation);
    }

    #[test]
    fn constant_potential_and_complex_potential() {
        let g = Generator::from_rows(&[vec![-3.0, 1.0, 2.0], vec![0.5, -1.0, 0.5], vec![4.0, 0.0, -4.0]]).unwrap();
        let lam = 0.3;
        let v = vec![Complex64::new(-lam, 0.0); 3];
        let r = resolvent_check(&g, &[0, 1, 2], 2, 1, &v).unwrap();
        assert!(r.deviation < 1e-10, "{}", r.deviation);
        let v = [Complex64::new(-0.5, 1.0), Complex64::new(-1.0, -2.0)];
        let r = resolvent_check(&g, &[0, 2], 0, 2, &v).unwrap();
        assert!(r.deviation < 1e-10, "{}", r.deviation);
    }

    #[test]
    fn rejects_nonnegative_real_part() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let v = [Complex64::new(0.0, 0.0), Complex64::new(-2.0, 0.0)];
        assert!(resolvent_check(&g, &[0, 1], 0, 1, &v).is_err());
    }
}
