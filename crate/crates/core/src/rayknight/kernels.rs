use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::bessel::{i0e, i1e};
use crate::error::{Error, Result};
use crate::oracles::quad::gauss_legendre_on;

/// Inner-segment transition density `e^{-h1-h2} I_0(2 sqrt(h1 h2))`.
pub fn f_kernel(h1: f64, h2: f64) -> Result<f64> {
    if !(h1 > 0.0 && h2 > 0.0) {
        return Err(Error::InvalidArgument("f kernel needs positive arguments".into()));
    }
    Ok(f_density(h1, h2))
}

fn f_density(h1: f64, h2: f64) -> f64 {
    let d = h1.sqrt() - h2.sqrt();
    (-d * d).exp() * i0e(2.0 * (h1 * h2).sqrt())
}

fn pstar_density(h1: f64, h2: f64) -> f64 {
    if h1 == 0.0 {
        return 0.0;
    }
    let d = h1.sqrt() - h2.sqrt();
    (-d * d).exp() * (h1 / h2).sqrt() * i1e(2.0 * (h1 * h2).sqrt())
}

/// Outer-segment kernel: atom at zero plus a density on `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PStar {
    pub h1: f64,
    pub atom: f64,
}

impl PStar {
    pub fn density(&self, h2: f64) -> f64 {
        if h2 > 0.0 {
            pstar_density(self.h1, h2)
        } else {
            0.0
        }
    }
}

pub fn pstar_kernel(h1: f64) -> Result<PStar> {
    if !(h1 >= 0.0 && h1.is_finite()) {
        return Err(Error::InvalidArgument("P* kernel needs a nonnegative level".into()));
    }
    Ok(PStar { h1, atom: (-h1).exp() })
}

/// Which transition kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    F,
    PStar,
}

impl Kernel {
    fn density(self, h1: f64, h2: f64) -> f64 {
        match self {
            Kernel::F => f_density(h1, h2),
            Kernel::PStar => pstar_density(h1, h2),
        }
    }
}

/// `(int density, int h2 density)` over `(0, inf)` by Gauss–Legendre panels in
/// `s = sqrt(h2)`.
pub fn kernel_moments(kernel: Kernel, h1: f64) -> (f64, f64) {
    let s_max = h1.sqrt() + 12.0;
    let panels = (s_max / 0.25).ceil() as usize;
    let w = s_max / panels as f64;
    let mut mass = 0.0;
    let mut mean = 0.0;
    for p in 0..panels {
        let (x, wt) = gauss_legendre_on(30, p as f64 * w, (p + 1) as f64 * w);
        for (s, wt) in x.iter().zip(&wt) {
            let h2 = s * s;
            let v = 2.0 * s * kernel.density(h1, h2) * wt;
            mass += v;
            mean += v * h2;
        }
    }
    (mass, mean)
}

/// Distribution function of the continuous part at each point of an
/// increasing sequence (the P* atom is added).
pub fn kernel_cdf_sorted(kernel: Kernel, h1: f64, sorted: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = if kernel == Kernel::PStar { (-h1).exp() } else { 0.0 };
    let mut prev = 0.0f64;
    let (x, w) = gauss_legendre_on(8, 0.0, 1.0);
    for &v in sorted {
        let v = v.max(0.0);
        if v > prev {
            let (a, b) = (prev.sqrt(), v.sqrt());
            for (t, wt) in x.iter().zip(&w) {
                let s = a + (b - a) * t;
                acc += (b - a) * wt * 2.0 * s * kernel.density(h1, s * s);
            }
            prev = v;
        }
        out.push(acc);
    }
    out
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

fn gamma<R: Rng + ?Sized>(shape: u64, rng: &mut R) -> f64 {
    Gamma::new(shape as f64, 1.0).expect("positive shape").sample(rng)
}

/// Draw from `f(h1, .)`: `Gamma(N + 1, 1)` with `N ~ Poisson(h1)`.
pub fn sample_f<R: Rng + ?Sized>(h1: f64, rng: &mut R) -> f64 {
    let n = poisson(h1, rng);
    gamma(n + 1, rng)
}

/// Draw from `P*(h1, .)`: zero if `N = 0`, else `Gamma(N, 1)`, `N ~ Poisson(h1)`.
pub fn sample_pstar<R: Rng + ?Sized>(h1: f64, rng: &mut R) -> f64 {
    let n = poisson(h1, rng);
    if n == 0 {
        0.0
    } else {
        gamma(n, rng)
    }
}
