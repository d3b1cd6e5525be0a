//! Derivative-free angular form of the density, integrated by the periodic
//! trapezoid rule.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_point, DensityResult, LocalTimeVector, Method, Resolution};
use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};
use crate::linalg::cofactor_full;
use crate::parallel::tree_merge;

/// Cap on the total number of integrand evaluations of the adaptive rule.
pub const QUADRATURE_MAX_NODES: usize = 1 << 24;

#[derive(Clone, Copy, Default)]
struct Acc {
    full: Complex64,
    half: Complex64,
    abs: f64,
}

impl Acc {
    fn merge(self, o: Acc) -> Acc {
        Acc { full: self.full + o.full, half: self.half + o.half, abs: self.abs + o.abs }
    }
}

struct Integrand {
    m: usize,
    a: usize,
    b: usize,
    am: DMatrix<f64>,
    bm: DMatrix<f64>,
    sqrt_l: Vec<f64>,
}

impl Integrand {
    fn eval(&self, phase: &[Complex64]) -> Complex64 {
        let m = self.m;
        let mut expo = Complex64::new(0.0, 0.0);
        let mut mat = DMatrix::<Complex64>::zeros(m, m);
        for x in 0..m {
            let mut v = Complex64::new(0.0, 0.0);
            for y in 0..m {
                let rel = phase[x] * phase[y].conj();
                expo += rel * (self.am[(x, y)] * self.sqrt_l[x] * self.sqrt_l[y]);
                if x != y {
                    v += rel * (self.bm[(x, y)] * self.sqrt_l[y] / self.sqrt_l[x]);
                    mat[(x, y)] = Complex64::new(-self.bm[(x, y)], 0.0);
                }
            }
            mat[(x, x)] = v;
        }
        cofactor_full(&mat, self.a, self.b) * expo.exp()
    }
}

/// Trapezoid sums on `n` nodes per free angle together with the embedded
/// `n/2` rule (every second node).
fn trapezoid(f: &Integrand, n: usize) -> (Complex64, Complex64, f64) {
    let m = f.m;
    let free: Vec<usize> = (0..m).filter(|&x| x != f.a).collect();
    let dim = free.len();
    let table: Vec<Complex64> =
        (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64)).collect();
    let parts: Vec<Acc> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut acc = Acc::default();
            let mut phase = vec![Complex64::new(1.0, 0.0); m];
            let mut idx = vec![0usize; dim];
            idx[0] = first;
            loop {
                for (p, &x) in free.iter().enumerate() {
                    phase[x] = table[idx[p]];
                }
                let val = f.eval(&phase);
                acc.full += val;
                acc.abs += val.norm();
                if idx.iter().all(|i| i % 2 == 0) {
                    acc.half += val;
                }
                let mut p = 1;
                loop {
                    if p >= dim {
                        return acc;
                    }
                    idx[p] += 1;
                    if idx[p] < n {
                        break;
                    }
                    idx[p] = 0;
                    p += 1;
                }
            }
        })
        .collect();
    let total = tree_merge(parts, &Acc::merge).unwrap_or_default();
    let nf = (n as f64).powi(dim as i32);
    let hf = ((n / 2) as f64).powi(dim as i32);
    (total.full / nf, total.half / hf, total.abs / nf)
}

fn setup(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector) -> Result<Integrand> {
    check_point(spec, l)?;
    let am = gen.submatrix(spec.range());
    let mut bm = am.clone();
    bm.fill_diagonal(0.0);
    Ok(Integrand {
        m: spec.len(),
        a: spec.start_local(),
        b: spec.end_local(),
        am,
        bm,
        sqrt_l: l.times().iter().map(|t| t.sqrt()).collect(),
    })
}

fn single_site(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector) -> DensityResult {
    let a = spec.range()[0];
    let arg = gen.rate(a, a) * l.times()[0];
    DensityResult {
        value: arg.exp(),
        method: Method::Quadrature,
        error_estimate: super::exp_roundoff(arg),
        resolution: Resolution::Exact,
    }
}

fn result(full: Complex64, half: Complex64, abs: f64, n: usize) -> DensityResult {
    let err = (full - half).norm() + full.im.abs() + 64.0 * f64::EPSILON * abs;
    DensityResult {
        value: full.re,
        method: Method::Quadrature,
        error_estimate: err,
        resolution: Resolution::Nodes { per_angle: n },
    }
}

/// Trapezoid rule with `grid_points_per_angle` nodes on each free angle; the
/// angle at the start state is pinned to zero.
pub fn density_quadrature(
    gen: &Generator,
    spec: &RangeSpec,
    l: &LocalTimeVector,
    grid_points_per_angle: usize,
) -> Result<DensityResult> {
    if grid_points_per_angle < 4 || grid_points_per_angle % 2 != 0 {
        return Err(Error::InvalidArgument("grid_points_per_angle must be even and at least 4".into()));
    }
    let f = setup(gen, spec, l)?;
    if f.m == 1 {
        return Ok(single_site(gen, spec, l));
    }
    let total = (grid_points_per_angle as f64).powi(f.m as i32 - 1);
    if total > QUADRATURE_MAX_NODES as f64 * 16.0 {
        return Err(Error::Capacity { what: "quadrature nodes", count: total as usize, limit: QUADRATURE_MAX_NODES * 16 });
    }
    let (full, half, abs) = trapezoid(&f, grid_points_per_angle);
    Ok(result(full, half, abs, grid_points_per_angle))
}

/// Doubles the node count from 16 until two successive rules agree to `tol`
/// relative or to roundoff in the integral of the modulus, or the node
/// budget is exhausted.
pub fn density_quadrature_adaptive(
    gen: &Generator,
    spec: &RangeSpec,
    l: &LocalTimeVector,
    tol: f64,
    max_nodes: usize,
) -> Result<DensityResult> {
    let f = setup(gen, spec, l)?;
    if f.m == 1 {
        return Ok(single_site(gen, spec, l));
    }
    let mut n = 16;
    loop {
        let (full, half, abs) = trapezoid(&f, n);
        let res = result(full, half, abs, n);
        if (full - half).norm() <= (tol * full.norm()).max(64.0 * f64::EPSILON * abs) {
            return Ok(res);
        }
        let next = (2.0 * n as f64).powi(f.m as i32 - 1);
        if next > max_nodes as f64 {
            return Err(Error::NonConvergence(format!(
                "quadrature not settled at {n} nodes per angle (change {:e})",
                (full - half).norm()
            )));
        }
        n *= 2;
    }
}
