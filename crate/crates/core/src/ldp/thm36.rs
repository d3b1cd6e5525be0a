use nalgebra::DMatrix;
use rayon::prelude::*;

use super::functional::Functional;
use super::optim::{minimize_on_simplex, Energy, OptimOptions};
use super::region::Region;
use crate::chain::{eta_of_matrix, Generator, RangeSpec};
use crate::density::{density, LocalTimeVector};
use crate::error::{Error, Result};
use crate::oracles::{simplex_integrate, SimplexChart, SimplexResolution};

const SYMMETRY_TOL: f64 = 1e-12;

/// `|S| log(eta sqrt(8e) T) + log|S| + |S| / (4T)`.
pub fn thm36_error_terms(size: usize, eta: f64, t: f64) -> f64 {
    let s = size as f64;
    s * (eta * (8.0 * std::f64::consts::E).sqrt() * t).ln() + s.ln() + s / (4.0 * t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thm36Result {
    pub rhs: f64,
    /// `inf over the region of I`, or `sup (F - I)` for the functional form.
    pub optimum: f64,
    pub optimizer: Vec<f64>,
    pub eta: f64,
    pub error_terms: f64,
    pub restart_values: Vec<f64>,
    pub disagreement: bool,
}

fn symmetric_block(gen: &Generator, s: &[usize], t: f64) -> Result<(Vec<usize>, DMatrix<f64>)> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::InvalidArgument("the large-deviation bound needs T >= 1".into()));
    }
    let s = gen.check_subset(s)?;
    let a = gen.submatrix(&s);
    let n = s.len();
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * (1.0 + a[(i, j)].abs()) {
                return Err(Error::InvalidGenerator("the large-deviation bound needs a symmetric generator".into()));
            }
        }
    }
    Ok((s, a))
}

fn dirichlet(a: &DMatrix<f64>, mu: &[f64]) -> f64 {
    let n = mu.len();
    let mut v = 0.0;
    for x in 0..n {
        for y in 0..n {
            v -= a[(x, y)] * (mu[x] * mu[y]).sqrt();
        }
    }
    v
}

/// Projected gradient on `mu` with backtracking.
fn projected_descent(a: &DMatrix<f64>, region: &dyn Region, mut mu: Vec<f64>, max_iter: usize) -> (f64, Vec<f64>) {
    let n = mu.len();
    let mut f = dirichlet(a, &mu);
    let mut step = 1.0;
    for _ in 0..max_iter {
        let grad: Vec<f64> = (0..n)
            .map(|x| {
                let mx = mu[x].max(1e-14);
                -a[(x, x)] - (0..n).filter(|&y| y != x).map(|y| a[(x, y)] * (mu[y] / mx).sqrt()).sum::<f64>()
            })
            .collect();
        let mut moved = false;
        while step > 1e-16 {
            let trial = region.project(&(0..n).map(|x| mu[x] - step * grad[x]).collect::<Vec<_>>());
            let ft = dirichlet(a, &trial);
            let dist2: f64 = trial.iter().zip(&mu).map(|(p, q)| (p - q).powi(2)).sum();
            if ft <= f - 1e-4 * dist2 / step && dist2 > 0.0 {
                moved = dist2.sqrt() > 1e-14;
                mu = trial;
                f = ft;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (f, mu)
}

/// `-T inf_{mu in region} I(mu) + error terms` for a symmetric generator
/// killed outside `S`; the region lives on the simplex over `S` (sorted).
pub fn thm36_rhs(gen: &Generator, s: &[usize], region: &dyn Region, t: f64, opts: &OptimOptions) -> Result<Thm36Result> {
    let (s, a) = symmetric_block(gen, s, t)?;
    let n = s.len();
    if region.dim() != n {
        return Err(Error::InvalidArgument(format!("region has dimension {}, S has {n} states", region.dim())));
    }
    let eta = eta_of_matrix(&a);
    let error_terms = thm36_error_terms(n, eta, t);
    let eig = (-&a).symmetric_eigen();
    let k = (0..n).min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).expect("nonempty");
    let ground: Vec<f64> = eig.eigenvectors.column(k).iter().map(|v| v * v).collect();
    let (optimum, optimizer, restart_values) = if region.contains(&ground) {
        (eig.eigenvalues[k], ground, vec![eig.eigenvalues[k]])
    } else {
        let mut starts = vec![region.project(&ground), region.project(&vec![1.0 / n as f64; n])];
        for i in 0..opts.starts.saturating_sub(2) {
            let mut e = vec![0.0; n];
            e[i % n] = 1.0;
            starts.push(region.project(&e));
        }
        let runs: Vec<(f64, Vec<f64>)> =
            starts.into_par_iter().map(|m| projected_descent(&a, region, m, opts.max_iter as usize)).collect();
        let vals: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let best = runs.into_iter().min_by(|x, y| x.0.total_cmp(&y.0)).expect("nonempty");
        (best.0, best.1, vals)
    };
    let lo = restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Thm36Result {
        rhs: -t * optimum + error_terms,
        optimum,
        optimizer,
        eta,
        error_terms,
        disagreement: hi - lo > opts.tol.sqrt() * lo.abs().max(1.0),
        restart_values,
    })
}

/// `T sup (F - I) + error terms`; linear functionals use the top eigenvalue
/// of `A|S + V`.
pub fn thm36_rhs_functional(gen: &Generator, s: &[usize], f: &dyn Functional, t: f64, opts: &OptimOptions) -> Result<Thm36Result> {
    let (s, a) = symmetric_block(gen, s, t)?;
    let n = s.len();
    let eta = eta_of_matrix(&a);
    let error_terms = thm36_error_terms(n, eta, t);
    let (optimum, optimizer, restart_values, disagreement) = if let Some(v) = f.linear_potential() {
        if v.len() != n {
            return Err(Error::InvalidArgument(format!("potential has {} values, S has {n} states", v.len())));
        }
        let mut av = a.clone();
        for x in 0..n {
            av[(x, x)] += v[x];
        }
        let eig = av.symmetric_eigen();
        let k = (0..n).max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).expect("nonempty");
        let mu: Vec<f64> = eig.eigenvectors.column(k).iter().map(|x| x * x).collect();
        (eig.eigenvalues[k], mu, vec![eig.eigenvalues[k]], false)
    } else {
        let opt = minimize_on_simplex(&Energy::from_matrix(&a, 1.0), f, opts)?;
        (-opt.value, opt.mu, opt.restart_values.iter().map(|v| -v).collect(), opt.disagreement)
    };
    Ok(Thm36Result { rhs: t * optimum + error_terms, optimum, optimizer, eta, error_terms, restart_values, disagreement })
}

/// `P_a(l_T / T in region, R_T within S)` by integrating the density over
/// every range `R` within `S` containing `a` and every end state; returns
/// the probability and the summed quadrature error estimates.
pub fn thm36_lhs(gen: &Generator, s: &[usize], a: usize, region: &dyn Region, t: f64, nodes: usize) -> Result<(f64, f64)> {
    let s = gen.check_subset(s)?;
    let n = s.len();
    let pa = s.iter().position(|&x| x == a).ok_or_else(|| Error::InvalidRange("start not in S".into()))?;
    if region.dim() != n {
        return Err(Error::InvalidArgument("region dimension does not match S".into()));
    }
    if n > 4 {
        return Err(Error::Capacity { what: "states for exact region probability", count: n, limit: 4 });
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for mask in 1u64..1 << n {
        if mask >> pa & 1 == 0 {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let range: Vec<usize> = members.iter().map(|&i| s[i]).collect();
        if range.len() == 1 {
            let mut delta = vec![0.0; n];
            delta[pa] = 1.0;
            if region.contains(&delta) {
                total += (gen.rate(a, a) * t).exp();
            }
            continue;
        }
        for &b in &range {
            let spec = RangeSpec::new(gen, &range, a, b)?;
            let chart = SimplexChart::new(range.len(), spec.start_local(), t)?;
            let f = |l: &[f64]| {
                let mut mu = vec![0.0; n];
                for (k, &i) in members.iter().enumerate() {
                    mu[i] = l[k] / t;
                }
                if !region.contains(&mu) {
                    return 0.0;
                }
                LocalTimeVector::with_horizon(l.to_vec(), t)
                    .and_then(|lv| density(gen, &spec, &lv, 1e-13))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            };
            let r = simplex_integrate(f, &chart, SimplexResolution::Grid { nodes })?;
            if !r.value.is_finite() {
                return Err(Error::Numerical("density evaluation failed inside the region integral".into()));
            }
            total += r.value;
            err += r.error_estimate;
        }
    }
    Ok((total, err))
}
