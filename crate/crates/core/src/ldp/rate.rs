use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::measure::{MeasureOnRange, TiltFunction};
use crate::chain::Generator;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const DIVERGENCE_LOG: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RateOptions {
    /// Gradient-norm tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of starting points; the first is `g = 1`.
    pub starts: usize,
    pub seed: u64,
    /// Position within the range where `g = 1`; defaults to the heaviest state.
    pub anchor: Option<usize>,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { tol: 1e-10, max_iter: 10_000, starts: 4, seed: 0, anchor: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub value: f64,
    /// Minimizer on the support of μ (`None` when μ has a single atom).
    pub tilt: Option<TiltFunction>,
    /// Positions within the range carrying the tilt.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub restart_values: Vec<f64>,
    /// Restart optima differ by more than the tolerance.
    pub disagreement: bool,
    /// The minimizing sequence left every compact set.
    pub diverged: bool,
}

/// `<sqrt(mu), -A sqrt(mu)>` with `A` restricted to the range of `mu`.
pub fn rate_function_symmetric(gen: &Generator, mu: &MeasureOnRange) -> Result<f64> {
    let a = gen.submatrix(&gen.check_subset(mu.range())?);
    let order = sorted_positions(mu.range());
    let a = permute(&a, &order);
    if !is_symmetric(&a) {
        return Err(Error::InvalidGenerator("rate_function_symmetric needs a symmetric generator; use rate_function_general".into()));
    }
    let psi = DVector::from_iterator(mu.len(), mu.weights().iter().map(|w| w.sqrt()));
    Ok(-(psi.transpose() * &a * &psi)[(0, 0)])
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= SYMMETRY_TOL * (1.0 + a[(i, j)].abs())))
}

/// Position in sorted order of each entry of `range`.
fn sorted_positions(range: &[usize]) -> Vec<usize> {
    let mut sorted = range.to_vec();
    sorted.sort_unstable();
    range.iter().map(|x| sorted.binary_search(x).expect("member")).collect()
}

/// Reorders a matrix given in sorted-state order into `range` order.
fn permute(a: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(order.len(), order.len(), |i, j| a[(order[i], order[j])])
}

/// `J(u) = sum_x mu_x (A e^u)_x / e^{u_x}` with gradient and Hessian.
struct Objective<'a> {
    a: &'a DMatrix<f64>,
    mu: &'a [f64],
}

impl Objective<'_> {
    fn value(&self, u: &[f64]) -> f64 {
        let n = self.mu.len();
        let mut j = 0.0;
        for x in 0..n {
            let mut s = self.a[(x, x)];
            for y in 0..n {
                if y != x && self.a[(x, y)] != 0.0 {
                    s += self.a[(x, y)] * (u[y] - u[x]).exp();
                }
            }
            j += self.mu[x] * s;
        }
        j
    }

    fn derivatives(&self, u: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.mu.len();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                if y == x || self.a[(x, y)] == 0.0 {
                    continue;
                }
                let t = self.mu[x] * self.a[(x, y)] * (u[y] - u[x]).exp();
                g[y] += t;
                g[x] -= t;
                h[(y, y)] += t;
                h[(x, x)] += t;
                h[(x, y)] -= t;
                h[(y, x)] -= t;
            }
        }
        (g, h)
    }
}

struct Run {
    value: f64,
    u: Vec<f64>,
    iterations: usize,
    diverged: bool,
}

fn newton(obj: &Objective, mut u: Vec<f64>, anchor: usize, opts: &RateOptions) -> Result<Run> {
    let n = u.len();
    let free: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
    u[anchor] = 0.0;
    let mut j = obj.value(&u);
    for it in 0..opts.max_iter {
        let (g, h) = obj.derivatives(&u);
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
        let hf = DMatrix::from_fn(free.len(), free.len(), |p, q| h[(free[p], free[q])]);
        if gf.amax() < opts.tol {
            let flat = hf.clone().symmetric_eigenvalues().min() < 1e3 * opts.tol;
            return Ok(Run { value: j, u, iterations: it, diverged: flat });
        }
        if u.iter().any(|v| v.abs() > DIVERGENCE_LOG) {
            return Ok(Run { value: j, u, iterations: it, diverged: true });
        }
        let mut lambda = 0.0;
        let mut improved = false;
        for _ in 0..60 {
            let mut hl = hf.clone();
            for p in 0..free.len() {
                hl[(p, p)] += lambda;
            }
            if let Some(chol) = hl.cholesky() {
                let d = chol.solve(&(-&gf));
                let slope = gf.dot(&d);
                let mut step = 1.0;
                while step > 1e-12 {
                    let mut trial = u.clone();
                    for (p, &i) in free.iter().enumerate() {
                        trial[i] += step * d[p];
                    }
                    let jt = obj.value(&trial);
                    if jt.is_finite() && jt <= j + 1e-4 * step * slope {
                        u = trial;
                        j = jt;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if improved {
                    break;
                }
            }
            lambda = if lambda == 0.0 { 1e-8 * (1.0 + hf.amax()) } else { lambda * 10.0 };
        }
        if !improved {
            return Err(Error::Optimization(format!("no descent step at iteration {it} (gradient {:e})", gf.amax())));
        }
    }
    Err(Error::NonConvergence(format!("rate function optimizer hit the cap of {} iterations", opts.max_iter)))
}

/// `I_A(mu) = -inf_g sum_x mu_x (A g)_x / g_x` by damped Newton in `log g`.
/// States of the range with zero weight are dropped, which gives the exact
/// value since `g` may vanish there.
pub fn rate_function_general(gen: &Generator, mu: &MeasureOnRange, opts: &RateOptions) -> Result<RateResult> {
    gen.check_subset(mu.range())?;
    let support = mu.support();
    let states: Vec<usize> = support.iter().map(|&i| mu.range()[i]).collect();
    let sorted_sub = {
        let mut s = states.clone();
        s.sort_unstable();
        s
    };
    let a = permute(&gen.submatrix(&sorted_sub), &sorted_positions(&states));
    let w: Vec<f64> = support.iter().map(|&i| mu.weights()[i]).collect();
    let n = w.len();
    if n == 1 {
        let v = -a[(0, 0)];
        return Ok(RateResult {
            value: v,
            tilt: None,
            support,
            iterations: 0,
            restart_values: vec![v],
            disagreement: false,
            diverged: false,
        });
    }
    let anchor = match opts.anchor {
        Some(p) => support
            .iter()
            .position(|&i| i == p)
            .ok_or_else(|| Error::InvalidArgument("anchor must carry positive weight".into()))?,
        None => (0..n).max_by(|&x, &y| w[x].total_cmp(&w[y])).unwrap_or(0),
    };
    let obj = Objective { a: &a, mu: &w };
    let runs: Vec<Result<Run>> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|k| {
            let u0: Vec<f64> = if k == 0 {
                vec![0.0; n]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64);
                (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            newton(&obj, u0, anchor, opts)
        })
        .collect();
    let mut ok = Vec::new();
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(run) => ok.push(run),
            Err(e) => last_err = Some(e),
        }
    }
    if ok.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Optimization("no restart succeeded".into())));
    }
    let restart_values: Vec<f64> = ok.iter().map(|r| -r.value).collect();
    let best = ok.iter().min_by(|x, y| x.value.total_cmp(&y.value)).expect("nonempty");
    let spread = restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let value = -best.value;
    let tilt = TiltFunction::new(best.u.iter().map(|v| v.exp()).collect(), anchor).ok();
    Ok(RateResult {
        value,
        tilt,
        support,
        iterations: best.iterations,
        restart_values,
        disagreement: spread > 1e3 * opts.tol * value.abs().max(1.0),
        diverged: best.diverged,
    })
}

/// Symmetric generators use the Dirichlet form; others the optimizer.
pub fn rate_function(gen: &Generator, mu: &MeasureOnRange, opts: &RateOptions) -> Result<f64> {
    match rate_function_symmetric(gen, mu) {
        Ok(v) => Ok(v),
        Err(Error::InvalidGenerator(_)) => Ok(rate_function_general(gen, mu, opts)?.value),
        Err(e) => Err(e),
    }
}
