use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use super::quad::exp_sinh;
use crate::error::{Error, Result};
use crate::parallel::{chunked_reduce, tree_merge};

/// How the Gaussian integral was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianMethod {
    Polar,
    MonteCarlo { samples: usize, seed: u64 },
}

/// `int_{C^n} exp(-<phi, M conj(phi)>) dphi` against `pi^n / det M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCheck {
    pub integral: Complex64,
    pub expected: Complex64,
    pub deviation: f64,
    pub error_estimate: f64,
    pub method: GaussianMethod,
}

const MC_SAMPLES: usize = 1 << 20;
const MC_CHUNK: usize = 4096;

/// Compares the complex Gaussian integral with `pi^n / det M`; polar
/// quadrature for `n <= 2`, Monte Carlo with a fixed seed for `n = 3`.
pub fn gaussian_identity_check(m: &DMatrix<Complex64>) -> Result<GaussianCheck> {
    gaussian_identity_check_with(m, MC_SAMPLES, 0)
}

/// As [`gaussian_identity_check`] with explicit Monte Carlo parameters.
pub fn gaussian_identity_check_with(m: &DMatrix<Complex64>, samples: usize, seed: u64) -> Result<GaussianCheck> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidArgument("matrix must be square and nonempty".into()));
    }
    if n > 3 {
        return Err(Error::Capacity { what: "gaussian identity dimension", count: n, limit: 3 });
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = herm[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    if embed.symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::InvalidArgument("Hermitian part of M is not positive definite".into()));
    }
    let chol = herm.clone().cholesky().ok_or_else(|| Error::Numerical("Cholesky factorization failed".into()))?;
    let det = m.determinant();
    let expected = Complex64::new(PI.powi(n as i32), 0.0) / det;
    let (integral, err, method) = if n <= 2 {
        let (fine, coarse) = (polar(m, 1.0 / 32.0), polar(m, 1.0 / 16.0));
        (fine, (fine - coarse).norm(), GaussianMethod::Polar)
    } else {
        let (mean, se) = monte_carlo(m, &herm, chol.l(), samples, seed)?;
        (mean, se, GaussianMethod::MonteCarlo { samples, seed })
    };
    Ok(GaussianCheck {
        integral,
        expected,
        deviation: (integral - expected).norm() / expected.norm(),
        error_estimate: err / expected.norm(),
        method,
    })
}

fn polar(m: &DMatrix<Complex64>, h: f64) -> Complex64 {
    let (x, w) = exp_sinh(h);
    let n = m.nrows();
    let scale = Complex64::new(PI.powi(n as i32), 0.0);
    if n == 1 {
        let s: Complex64 = x.iter().zip(&w).map(|(l, wt)| (-m[(0, 0)] * *l).exp() * *wt).sum();
        return s * scale;
    }
    let angles = 64;
    let phases: Vec<Complex64> = (0..angles).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / angles as f64)).collect();
    let parts: Vec<Complex64> = x
        .iter()
        .zip(&w)
        .map(|(&l1, &w1)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&l2, &w2) in x.iter().zip(&w) {
                let diag = m[(0, 0)] * l1 + m[(1, 1)] * l2;
                if diag.re > 745.0 {
                    continue;
                }
                let r = (l1 * l2).sqrt();
                let mut ang = Complex64::new(0.0, 0.0);
                for e in &phases {
                    ang += (-(diag + (m[(0, 1)] * e.conj() + m[(1, 0)] * e) * r)).exp();
                }
                acc += ang * (w1 * w2 / angles as f64);
            }
            acc
        })
        .collect();
    tree_merge(parts, &|a, b| a + b).unwrap_or_default() * scale
}

#[derive(Clone, Copy, Default)]
struct Acc {
    sum: Complex64,
    sum_sq: f64,
}

fn monte_carlo(
    m: &DMatrix<Complex64>,
    herm: &DMatrix<Complex64>,
    l: DMatrix<Complex64>,
    samples: usize,
    seed: u64,
) -> Result<(Complex64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let n = m.nrows();
    let anti = (m - herm) * Complex64::new(0.0, -1.0);
    let l_adj_inv = l
        .adjoint()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let acc = chunked_reduce(
        chunks,
        1,
        |range| {
            let mut acc = Acc::default();
            for c in range {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let count = MC_CHUNK.min(samples - c * MC_CHUNK);
                for _ in 0..count {
                    let z = nalgebra::DVector::from_fn(n, |_, _| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                    });
                    let psi = &l_adj_inv * z;
                    let q = (psi.adjoint() * &anti * &psi)[(0, 0)];
                    let val = (Complex64::new(0.0, -1.0) * q).exp();
                    acc.sum += val;
                    acc.sum_sq += val.norm_sqr();
                }
            }
            acc
        },
        |a, b| Acc { sum: a.sum + b.sum, sum_sq: a.sum_sq + b.sum_sq },
    )
    .unwrap_or_default();
    let nf = samples as f64;
    let mean = acc.sum / nf;
    let var = (acc.sum_sq / nf - mean.norm_sqr()).max(0.0) * nf / (nf - 1.0);
    let norm = Complex64::new(PI.powi(n as i32), 0.0) / herm.determinant();
    Ok((mean * norm, (var / nf).sqrt() * norm.norm()))
}
