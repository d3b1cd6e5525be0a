use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::parallel::{chunked_reduce, tree_merge, Moments};

const MAX_GRID_NODES: f64 = 1e9;
const MC_CHUNK: usize = 4096;

/// Coordinates on `{l in (0,inf)^R : sum l = T}` obtained by dropping one
/// coordinate; the surface measure is the product measure on the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexChart {
    size: usize,
    dropped: usize,
    horizon: f64,
}

impl SimplexChart {
    pub fn new(size: usize, dropped: usize, horizon: f64) -> Result<Self> {
        if size == 0 || dropped >= size {
            return Err(Error::InvalidArgument(format!("cannot drop coordinate {dropped} of {size}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        Ok(SimplexChart { size, dropped, horizon })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `T^(m-1) / (m-1)!`.
    pub fn volume(&self) -> f64 {
        (1..self.size).fold(1.0, |v, k| v * self.horizon / k as f64)
    }

    fn free(&self) -> Vec<usize> {
        (0..self.size).filter(|&x| x != self.dropped).collect()
    }
}

/// Grid (midpoint with one Richardson step) or Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexResolution {
    Grid { nodes: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexIntegral {
    pub value: f64,
    pub error_estimate: f64,
}

/// `int f dsigma_T` over the chart.
pub fn simplex_integrate<F>(f: F, chart: &SimplexChart, resolution: SimplexResolution) -> Result<SimplexIntegral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if chart.size == 1 {
        return Ok(SimplexIntegral { value: f(&[chart.horizon]), error_estimate: 0.0 });
    }
    match resolution {
        SimplexResolution::Grid { nodes } => {
            if nodes < 2 || nodes % 2 != 0 {
                return Err(Error::InvalidArgument("grid node count must be even and at least 2".into()));
            }
            let total = (nodes as f64).powi(chart.size as i32 - 1);
            if total > MAX_GRID_NODES {
                return Err(Error::Capacity { what: "simplex grid nodes", count: total as usize, limit: MAX_GRID_NODES as usize });
            }
            let fine = midpoint(&f, chart, nodes);
            let coarse = midpoint(&f, chart, nodes / 2);
            Ok(SimplexIntegral { value: (4.0 * fine - coarse) / 3.0, error_estimate: (fine - coarse).abs() / 3.0 })
        }
        SimplexResolution::MonteCarlo { samples, seed } => monte_carlo(&f, chart, samples, seed),
    }
}

/// Stick-breaking map from the unit cube; returns the Jacobian.
fn stick_break(chart: &SimplexChart, free: &[usize], u: &[f64], l: &mut [f64]) -> f64 {
    let mut rem = chart.horizon;
    let mut jac = 1.0;
    for (&x, &t) in free.iter().zip(u) {
        jac *= rem;
        l[x] = rem * t;
        rem -= l[x];
    }
    l[chart.dropped] = rem;
    jac
}

fn midpoint<F: Fn(&[f64]) -> f64 + Sync>(f: &F, chart: &SimplexChart, n: usize) -> f64 {
    let free = chart.free();
    let dim = free.len();
    let h = 1.0 / n as f64;
    let parts: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; dim];
            idx[0] = first;
            let mut u = vec![0.0; dim];
            let mut l = vec![0.0; chart.size];
            let mut acc = 0.0;
            loop {
                for (p, &i) in idx.iter().enumerate() {
                    u[p] = (i as f64 + 0.5) * h;
                }
                let jac = stick_break(chart, &free, &u, &mut l);
                acc += jac * f(&l);
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
    tree_merge(parts, &|a, b| a + b).unwrap_or(0.0) * h.powi(dim as i32)
}

fn monte_carlo<F: Fn(&[f64]) -> f64 + Sync>(f: &F, chart: &SimplexChart, samples: usize, seed: u64) -> Result<SimplexIntegral> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let m = chart.size;
    let chunks = samples.div_ceil(MC_CHUNK);
    let mom = chunked_reduce(
        chunks,
        1,
        |range| {
            let mut mom = Moments::default();
            let mut l = vec![0.0; m];
            for c in range {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                for _ in 0..MC_CHUNK.min(samples - c * MC_CHUNK) {
                    let mut s = 0.0;
                    for x in l.iter_mut() {
                        *x = Exp1.sample(&mut rng);
                        s += *x;
                    }
                    for x in l.iter_mut() {
                        *x *= chart.horizon / s;
                    }
                    mom.push(f(&l));
                }
            }
            mom
        },
        Moments::merge,
    )
    .unwrap_or_default();
    let vol = chart.volume();
    Ok(SimplexIntegral { value: vol * mom.mean_over(samples as u64), error_estimate: vol * mom.std_error_over(samples as u64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_and_singleton() {
        for m in 1..=4 {
            let chart = SimplexChart::new(m, 0, 2.0).unwrap();
            let r = simplex_integrate(|_| 1.0, &chart, SimplexResolution::Grid { nodes: 8 }).unwrap();
            assert!((r.value - chart.volume()).abs() < 1e-12);
        }
        let chart = SimplexChart::new(1, 0, 3.0).unwrap();
        let r = simplex_integrate(|l| l[0] * l[0], &chart, SimplexResolution::Grid { nodes: 4 }).unwrap();
        assert_eq!(r.value, 9.0);
    }

    #[test]
    fn dirichlet_moment() {
        // int l0 l1 over the 2-simplex of size T is T^4 / 24.
        let chart = SimplexChart::new(3, 2, 1.5).unwrap();
        let r = simplex_integrate(|l| l[0] * l[1], &chart, SimplexResolution::Grid { nodes: 64 }).unwrap();
        assert!((r.value - 1.5f64.powi(4) / 24.0).abs() < 1e-9);
        let r = simplex_integrate(|l| l[0] * l[1], &chart, SimplexResolution::MonteCarlo { samples: 200_000, seed: 3 }).unwrap();
        assert!((r.value - 1.5f64.powi(4) / 24.0).abs() < 4.0 * r.error_estimate);
    }

    #[test]
    fn chart_independence() {
        let f = |l: &[f64]| (l[0] - 0.3 * l[1] + 0.2 * l[2]).exp() * (1.0 + l[1] * l[2]);
        let vals: Vec<f64> = (0..3)
            .map(|d| {
                let chart = SimplexChart::new(3, d, 1.0).unwrap();
                simplex_integrate(f, &chart, SimplexResolution::Grid { nodes: 128 }).unwrap().value
            })
            .collect();
        for v in &vals[1..] {
            assert!((v - vals[0]).abs() <= 1e-9 * vals[0].abs(), "{vals:?}");
        }
    }

    #[test]
    fn monte_carlo_deterministic_across_workers() {
        let chart = SimplexChart::new(4, 0, 1.0).unwrap();
        let run = |w| {
            crate::parallel::with_workers(Some(w), || {
                simplex_integrate(|l| l[1].sin(), &chart, SimplexResolution::MonteCarlo { samples: 20_000, seed: 11 }).unwrap()
            })
            .unwrap()
        };
        assert_eq!(run(1), run(3));
    }
}
