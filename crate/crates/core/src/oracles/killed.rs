use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};

/// Largest range for inclusion–exclusion (2^|R| killed semigroups).
pub const MAX_RANGE_SUBSETS: usize = 20;

/// `exp(t M)`.
pub fn matrix_exponential(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !m.iter().all(|v| v.is_finite()) || !t.is_finite() {
        return Err(Error::Numerical("non-finite matrix exponential input".into()));
    }
    let e = (m * t).exp();
    if !e.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(e)
}

/// `exp(t M)` for complex `M`.
pub fn matrix_exponential_complex(m: &DMatrix<Complex64>, t: f64) -> Result<DMatrix<Complex64>> {
    if !m.iter().all(|v| v.is_finite()) || !t.is_finite() {
        return Err(Error::Numerical("non-finite matrix exponential input".into()));
    }
    let e = (m * Complex64::new(t, 0.0)).exp();
    if !e.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(e)
}

/// `P_a(X_T = b, R_T within S)`: the `(a, b)` entry of `exp(T A|S)` with the
/// original diagonal kept.
pub fn killed_prob(gen: &Generator, s: &[usize], a: usize, b: usize, t: f64) -> Result<f64> {
    let s = gen.check_subset(s)?;
    let pa = s.iter().position(|&x| x == a).ok_or_else(|| Error::InvalidRange("start not in S".into()))?;
    let pb = s.iter().position(|&x| x == b).ok_or_else(|| Error::InvalidRange("end not in S".into()))?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument("time must be nonnegative".into()));
    }
    Ok(matrix_exponential(&gen.submatrix(&s), t)?[(pa, pb)])
}

/// `P_a(X_T = b, R_T = R)` by inclusion–exclusion over the subsets of R
/// that contain `a` and `b`.
pub fn range_exact_prob(gen: &Generator, spec: &RangeSpec, t: f64) -> Result<f64> {
    let r = spec.range();
    if r.len() > MAX_RANGE_SUBSETS {
        return Err(Error::Capacity { what: "range size for inclusion-exclusion", count: r.len(), limit: MAX_RANGE_SUBSETS });
    }
    let optional: Vec<usize> = r.iter().copied().filter(|&x| x != spec.start() && x != spec.end()).collect();
    let mut total = 0.0;
    for mask in 0u64..1 << optional.len() {
        let mut s: Vec<usize> = vec![spec.start(), spec.end()];
        let mut dropped = optional.len();
        for (i, &x) in optional.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.push(x);
                dropped -= 1;
            }
        }
        s.sort_unstable();
        s.dedup();
        let sign = if dropped % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * killed_prob(gen, &s, spec.start(), spec.end(), t)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: f64) -> f64 {
        x.exp()
    }

    #[test]
    fn exponential_examples() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(matrix_exponential(&z, 1.0).unwrap(), DMatrix::identity(3, 3));
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let ea = matrix_exponential(&a, 1.0).unwrap();
        assert!((ea[(0, 0)] - 0.5 * (1.0 + e(-2.0))).abs() < 1e-14);
        let g = Generator::from_rows(&[vec![-3.0, 1.0, 2.0], vec![0.5, -1.0, 0.5], vec![4.0, 0.0, -4.0]]).unwrap();
        let et = matrix_exponential(g.rates(), 2.5).unwrap();
        for i in 0..3 {
            assert!((et.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_exponential_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::new(-1.0, 2.0), Complex64::new(0.5, -1.0)]));
        let em = matrix_exponential_complex(&m, 0.7).unwrap();
        assert!((em[(0, 0)] - (Complex64::new(-1.0, 2.0) * 0.7).exp()).norm() < 1e-14);
        assert!(em[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn killed_examples() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        assert!((killed_prob(&g, &[0, 1], 0, 1, 1.0).unwrap() - 0.5 * (1.0 - e(-2.0))).abs() < 1e-14);
        assert!((killed_prob(&g, &[0], 0, 0, 1.0).unwrap() - e(-1.0)).abs() < 1e-15);
        assert!(killed_prob(&g, &[0], 0, 1, 1.0).is_err());
    }

    #[test]
    fn range_exact_examples() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let spec = RangeSpec::new(&g, &[0, 1], 0, 0).unwrap();
        let v = range_exact_prob(&g, &spec, 1.0).unwrap();
        assert!((v - (0.5 * (1.0 + e(-2.0)) - e(-1.0))).abs() < 1e-14);
        assert!((v - 0.1997882).abs() < 1e-7);
        let single = RangeSpec::new(&g, &[0], 0, 0).unwrap();
        assert!((range_exact_prob(&g, &single, 2.0).unwrap() - e(-2.0)).abs() < 1e-15);
    }

    #[test]
    fn partition_of_sample_space() {
        let g = Generator::from_rows(&[vec![-3.0, 1.0, 2.0], vec![0.5, -1.0, 0.5], vec![4.0, 0.0, -4.0]]).unwrap();
        let a = 1;
        let mut total = 0.0;
        for mask in 1u64..8 {
            let r: Vec<usize> = (0..3).filter(|&x| mask >> x & 1 == 1).collect();
            for &b in &r {
                if !r.contains(&a) {
                    continue;
                }
                let spec = RangeSpec::new(&g, &r, a, b).unwrap();
                let p = range_exact_prob(&g, &spec, 0.8).unwrap();
                assert!((-1e-14..=1.0).contains(&p));
                total += p;
            }
        }
        assert!((total - 1.0).abs() < 1e-13);
    }
}
