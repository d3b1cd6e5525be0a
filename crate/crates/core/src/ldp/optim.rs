use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::functional::Functional;
use crate::error::{Error, Result};

/// `scale * (sum_x d_x mu_x - sum_{x != y} B_xy sqrt(mu_x mu_y))`, the
/// Dirichlet form of `sqrt(mu)` for a symmetric sub-generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Energy {
    pub scale: f64,
    pub diag: Vec<f64>,
    /// Ordered links `x -> (y, B_xy)`.
    pub links: Vec<Vec<(usize, f64)>>,
}

impl Energy {
    pub fn from_matrix(a: &DMatrix<f64>, scale: f64) -> Self {
        let n = a.nrows();
        let diag = (0..n).map(|x| -a[(x, x)]).collect();
        let links = (0..n).map(|x| (0..n).filter(|&y| y != x && a[(x, y)] != 0.0).map(|y| (y, a[(x, y)])).collect()).collect();
        Energy { scale, diag, links }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn value(&self, mu: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in 0..self.len() {
            s += self.diag[x] * mu[x];
            for &(y, b) in &self.links[x] {
                s -= b * (mu[x] * mu[y]).sqrt();
            }
        }
        self.scale * s
    }

    pub fn scaled_gradient(&self, mu: &[f64], out: &mut [f64]) {
        for x in 0..self.len() {
            let mut s = self.diag[x] * mu[x];
            for &(y, b) in &self.links[x] {
                s -= b * (mu[x] * mu[y]).sqrt();
            }
            out[x] = self.scale * s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: u64,
    pub tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { starts: 8, seed: 0, max_iter: 20_000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptimum {
    /// `min_mu [energy(mu) - F(mu)]`.
    pub value: f64,
    pub mu: Vec<f64>,
    pub restart_values: Vec<f64>,
    pub disagreement: bool,
    pub iterations: u64,
}

pub fn softmax(w: &[f64]) -> Vec<f64> {
    let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

struct Problem<'a> {
    energy: &'a Energy,
    f: &'a dyn Functional,
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, w: &Self::Param) -> std::result::Result<f64, ArgminError> {
        let mu = softmax(w);
        Ok(self.energy.value(&mu) - self.f.value(&mu))
    }
}

impl Gradient for Problem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, w: &Self::Param) -> std::result::Result<Vec<f64>, ArgminError> {
        let mu = softmax(w);
        let n = mu.len();
        let mut se = vec![0.0; n];
        let mut sf = vec![0.0; n];
        self.energy.scaled_gradient(&mu, &mut se);
        self.f.scaled_gradient(&mu, &mut sf);
        let s: Vec<f64> = se.iter().zip(&sf).map(|(a, b)| a - b).collect();
        let total: f64 = s.iter().sum();
        Ok((0..n).map(|x| s[x] - mu[x] * total).collect())
    }
}

fn run(problem: Problem, w0: Vec<f64>, opts: &OptimOptions) -> Result<(f64, Vec<f64>, u64)> {
    let ls = MoreThuenteLineSearch::new();
    let solver = LBFGS::new(ls, 10)
        .with_tolerance_grad(opts.tol * 1e-3)
        .and_then(|s| s.with_tolerance_cost(1e-16))
        .map_err(|e| Error::Optimization(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.param(w0).max_iters(opts.max_iter))
        .run()
        .map_err(|e| Error::Optimization(e.to_string()))?;
    let state = res.state();
    let w = state.get_best_param().cloned().ok_or_else(|| Error::Optimization("no iterate".into()))?;
    Ok((state.get_best_cost(), softmax(&w), state.get_iter()))
}

/// Minimizes `energy(mu) - F(mu)` over the simplex through `mu = softmax(w)`
/// with L-BFGS from several starts.
pub fn minimize_on_simplex(energy: &Energy, f: &dyn Functional, opts: &OptimOptions) -> Result<SimplexOptimum> {
    let n = energy.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty state set".into()));
    }
    if n == 1 {
        let v = energy.value(&[1.0]) - f.value(&[1.0]);
        return Ok(SimplexOptimum { value: v, mu: vec![1.0], restart_values: vec![v], disagreement: false, iterations: 0 });
    }
    let runs: Vec<Result<(f64, Vec<f64>, u64)>> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|k| {
            let w0 = if k == 0 {
                vec![0.0; n]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64);
                (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            run(Problem { energy, f }, w0, opts)
        })
        .collect();
    let mut ok = Vec::new();
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(v) if v.0.is_finite() => ok.push(v),
            Ok(_) => last_err = Some(Error::Optimization("non-finite objective".into())),
            Err(e) => last_err = Some(e),
        }
    }
    if ok.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Optimization("no restart succeeded".into())));
    }
    let restart_values: Vec<f64> = ok.iter().map(|r| r.0).collect();
    let lo = restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best = ok.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("nonempty");
    Ok(SimplexOptimum {
        value: best.0,
        mu: best.1,
        restart_values,
        disagreement: hi - lo > opts.tol.sqrt() * lo.abs().max(1.0),
        iterations: best.2,
    })
}
