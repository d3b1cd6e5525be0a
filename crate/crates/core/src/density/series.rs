//! Balanced-flow series for the angular integral and its mixed derivatives.
//!
//! Flows are grouped by their net circulation on each unordered edge. For a
//! fixed circulation the remaining sum over symmetric parts factorizes over
//! edges into Bessel-type series, so only the circulation lattice has to be
//! enumerated. Circulations are visited in shells of growing sup-norm.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{check_point, DensityResult, LocalTimeVector, Method, Resolution};
use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};
use crate::linalg::cofactor_ab;

/// Cap on circulation vectors visited before giving up.
pub const MAX_CIRCULATIONS: usize = 50_000_000;
/// Cap on shell radius.
pub const MAX_SHELLS: usize = 2_000;
const MAX_EDGE_TERMS: usize = 1_000_000;

/// Value of the angular integral with a truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: f64,
    pub error_estimate: f64,
    pub shells: usize,
}

/// Mixed first-order derivatives `d^Q` of the angular integral, one entry
/// per requested subset mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDerivatives {
    pub masks: Vec<u64>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    pub shells: usize,
    pub max_radius: usize,
}

/// Sum over the symmetric part of one edge at net circulation `k`:
/// `[sum t, sum t*deg, sum t*deg^2]` with `t = u^{n+} v^{n-} / (n+! n-!)`,
/// all multiplied by `exp(-(|u| + |v|))`.
fn edge_moments(u: f64, v: f64, k: i64) -> Result<[f64; 3]> {
    let kp = k.max(0) as u64;
    let km = (-k).max(0) as u64;
    if (kp > 0 && u == 0.0) || (km > 0 && v == 0.0) {
        return Ok([0.0; 3]);
    }
    let (au, av) = (u.abs(), v.abs());
    let mut sign = 1.0;
    if u < 0.0 && kp % 2 == 1 {
        sign = -sign;
    }
    if v < 0.0 && km % 2 == 1 {
        sign = -sign;
    }
    let log_pow = |x: f64, n: u64| if n == 0 { 0.0 } else { n as f64 * x.ln() - ln_factorial(n) };
    let mut log_t = log_pow(au, kp) + log_pow(av, km) - au - av;
    let half = k.unsigned_abs() as f64 / 2.0;
    let uv = u * v;
    let mut m = [0.0f64; 3];
    let mut j = 0u64;
    loop {
        let t = sign * log_t.exp();
        let deg = j as f64 + half;
        m[0] += t;
        m[1] += t * deg;
        m[2] += t * deg * deg;
        if uv == 0.0 {
            break;
        }
        let ratio = uv / (((j + 1 + kp) * (j + 1 + km)) as f64);
        let next = t * ratio;
        let deg_next = deg + 1.0;
        if ratio.abs() < 0.5 && (next * deg_next * deg_next).abs() <= 1e-18 * m[2].abs().max(m[0].abs()) {
            break;
        }
        log_t += ratio.abs().ln();
        if ratio < 0.0 {
            sign = -sign;
        }
        j += 1;
        if j as usize > MAX_EDGE_TERMS {
            return Err(Error::NonConvergence(format!("edge series did not settle (uv = {uv:e})")));
        }
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("edge series overflowed".into()));
    }
    Ok(m)
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// Moments for `k` in `-kmax..=kmax`, indexed by `k + kmax`.
struct EdgeTable {
    u: f64,
    v: f64,
    kmax: i64,
    rows: Vec<[f64; 3]>,
}

impl EdgeTable {
    fn new(u: f64, v: f64) -> Result<Self> {
        let mut t = Self { u, v, kmax: -1, rows: Vec::new() };
        t.grow(0)?;
        Ok(t)
    }

    fn grow(&mut self, kmax: i64) -> Result<()> {
        if kmax <= self.kmax {
            return Ok(());
        }
        let mut rows = Vec::with_capacity((2 * kmax + 1) as usize);
        for k in -kmax..=kmax {
            if k.abs() <= self.kmax {
                rows.push(self.rows[(k + self.kmax) as usize]);
            } else {
                rows.push(edge_moments(self.u, self.v, k)?);
            }
        }
        self.rows = rows;
        self.kmax = kmax;
        Ok(())
    }

    fn is_zero_edge(&self) -> bool {
        self.u == 0.0 && self.v == 0.0
    }

    #[inline]
    fn get(&self, k: i64) -> &[f64; 3] {
        &self.rows[(k + self.kmax) as usize]
    }
}

/// Expansion of `prod_{x in Q} sum_{e ~ x} deg_e` into per-edge exponents.
struct DerivativePlan {
    terms: Vec<(Vec<(usize, u8)>, f64)>,
    inv_l: f64,
}

fn plan_for(mask: u64, m: usize, edge_index: &HashMap<(usize, usize), usize>, l: &[f64]) -> DerivativePlan {
    let members: Vec<usize> = (0..m).filter(|&x| mask >> x & 1 == 1).collect();
    let mut acc: HashMap<Vec<u8>, f64> = HashMap::new();
    let ne = edge_index.len();
    let mut choice = vec![0usize; members.len()];
    let neighbours: Vec<Vec<usize>> = members
        .iter()
        .map(|&x| (0..m).filter(|&y| y != x).map(|y| edge_index[&(x.min(y), x.max(y))]).collect())
        .collect();
    loop {
        let mut exps = vec![0u8; ne];
        for (i, &c) in choice.iter().enumerate() {
            exps[neighbours[i][c]] += 1;
        }
        *acc.entry(exps).or_insert(0.0) += 1.0;
        let mut i = 0;
        loop {
            if i == choice.len() {
                let mut terms: Vec<(Vec<(usize, u8)>, f64)> = acc
                    .into_iter()
                    .map(|(e, c)| (e.iter().enumerate().filter(|(_, &p)| p > 0).map(|(i, &p)| (i, p)).collect(), c))
                    .collect();
                terms.sort_by(|a, b| a.0.cmp(&b.0));
                let inv_l = members.iter().map(|&x| 1.0 / l[x]).product();
                return DerivativePlan { terms, inv_l };
            }
            choice[i] += 1;
            if choice[i] < neighbours[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Visits every integer vector of dimension `dim` with sup-norm exactly `s`.
fn for_each_in_shell(dim: usize, s: i64, f: &mut dyn FnMut(&[i64]) -> Result<()>) -> Result<()> {
    if s == 0 {
        return f(&vec![0; dim]);
    }
    // `lead` is the first coordinate of modulus s; earlier ones are smaller.
    for lead in 0..dim {
        let lims: Vec<i64> = (0..dim).map(|i| if i < lead { s - 1 } else { s }).collect();
        for sign in [-1i64, 1] {
            let mut cur: Vec<i64> = lims.iter().map(|&b| -b).collect();
            cur[lead] = sign * s;
            'odometer: loop {
                f(&cur)?;
                let mut i = 0;
                loop {
                    if i == dim {
                        break 'odometer;
                    }
                    if i != lead && cur[i] < lims[i] {
                        cur[i] += 1;
                        break;
                    }
                    if i != lead {
                        cur[i] = -lims[i];
                    }
                    i += 1;
                }
            }
        }
    }
    Ok(())
}

/// Mixed derivatives `d^Q Theta(l)` for each mask in `masks`, where
/// `Theta(l) = int exp(sum bt[x][y] sqrt(l_x l_y) e^{i(theta_x - theta_y)}) dtheta`.
///
/// Shells are summed until two consecutive shells each change every
/// requested value by at most `tol` relative.
pub fn theta_derivatives(bt: &DMatrix<f64>, l: &[f64], masks: &[u64], tol: f64) -> Result<ThetaDerivatives> {
    let (mut d, log_scale) = theta_derivatives_scaled(bt, l, masks, tol)?;
    let f = log_scale.exp();
    for v in d.values.iter_mut().chain(d.error_estimates.iter_mut()) {
        *v *= f;
    }
    if let Some(bad) = d.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("angular integral is {bad}")));
    }
    Ok(d)
}

/// As [`theta_derivatives`], with values and errors divided by
/// `exp(log_scale)`; the second component is `log_scale`.
pub(crate) fn theta_derivatives_scaled(
    bt: &DMatrix<f64>,
    l: &[f64],
    masks: &[u64],
    tol: f64,
) -> Result<(ThetaDerivatives, f64)> {
    let m = l.len();
    if bt.nrows() != m || bt.ncols() != m {
        return Err(Error::InvalidArgument("weight matrix does not match the local times".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some(&bad) = masks.iter().find(|&&q| m < 64 && q >> m != 0) {
        return Err(Error::InvalidArgument(format!("derivative mask {bad:#b} exceeds the range")));
    }
    if m == 1 {
        let values = masks.iter().map(|&q| if q == 0 { 1.0 } else { 0.0 }).collect();
        return Ok((
            ThetaDerivatives { masks: masks.to_vec(), values, error_estimates: vec![0.0; masks.len()], shells: 1, max_radius: 0 },
            0.0,
        ));
    }

    let mut edges = Vec::new();
    let mut edge_index = HashMap::new();
    for x in 0..m {
        for y in x + 1..m {
            edge_index.insert((x, y), edges.len());
            edges.push((x, y));
        }
    }
    let mut tables = edges
        .iter()
        .map(|&(x, y)| {
            let s = (l[x] * l[y]).sqrt();
            EdgeTable::new(bt[(x, y)] * s, bt[(y, x)] * s)
        })
        .collect::<Result<Vec<_>>>()?;

    // Free circulation variables live on edges avoiding site 0; the edge
    // (0, y) carries whatever keeps site y balanced.
    let free: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|&(e, &(x, _))| x >= 1 && !tables[e].is_zero_edge())
        .map(|(e, _)| e)
        .collect();
    let root: Vec<usize> = (1..m).map(|y| edge_index[&(0, y)]).collect();
    // For site y >= 1: list of (free-variable position, sign of k(y -> z)).
    let mut incidence: Vec<Vec<(usize, i64)>> = vec![Vec::new(); m];
    for (p, &e) in free.iter().enumerate() {
        let (x, y) = edges[e];
        incidence[x].push((p, 1));
        incidence[y].push((p, -1));
    }

    let plans: Vec<DerivativePlan> = masks.iter().map(|&q| plan_for(q, m, &edge_index, l)).collect();
    let nq = masks.len();
    let mut sums = vec![0.0f64; nq];
    let mut abs_sums = vec![0.0f64; nq];
    let mut quiet = 0usize;
    let mut last_shell = vec![0.0f64; nq];
    let mut prev_shell = vec![0.0f64; nq];
    let mut visited = 0usize;
    let mut kfull = vec![0i64; edges.len()];
    let dim = free.len();
    let fan = (m as i64 - 2).max(1);

    let mut s = 0i64;
    loop {
        for t in tables.iter_mut() {
            t.grow(fan * s)?;
        }
        let mut shell = vec![0.0f64; nq];
        let mut shell_abs = vec![0.0f64; nq];
        {
            let tables = &tables;
            let mut visit = |k: &[i64]| -> Result<()> {
                visited += 1;
                if visited > MAX_CIRCULATIONS {
                    return Err(Error::Capacity { what: "circulations", count: visited, limit: MAX_CIRCULATIONS });
                }
                for v in kfull.iter_mut() {
                    *v = 0;
                }
                for (p, &e) in free.iter().enumerate() {
                    kfull[e] = k[p];
                }
                for y in 1..m {
                    let net: i64 = incidence[y].iter().map(|&(p, sg)| sg * k[p]).sum();
                    let e = root[y - 1];
                    if net != 0 && tables[e].is_zero_edge() {
                        return Ok(());
                    }
                    kfull[e] = net;
                }
                let rows: Vec<&[f64; 3]> = kfull.iter().enumerate().map(|(e, &ke)| tables[e].get(ke)).collect();
                for (qi, plan) in plans.iter().enumerate() {
                    let mut total = 0.0;
                    for (exps, mult) in &plan.terms {
                        let mut prod = *mult;
                        let mut j = 0;
                        for (e, row) in rows.iter().enumerate() {
                            let c = if j < exps.len() && exps[j].0 == e {
                                j += 1;
                                exps[j - 1].1
                            } else {
                                0
                            };
                            prod *= row[c as usize];
                            if prod == 0.0 {
                                break;
                            }
                        }
                        total += prod;
                    }
                    total *= plan.inv_l;
                    shell[qi] += total;
                    shell_abs[qi] += total.abs();
                }
                Ok(())
            };
            for_each_in_shell(dim, s, &mut visit)?;
        }
        for qi in 0..nq {
            sums[qi] += shell[qi];
            abs_sums[qi] += shell_abs[qi];
        }
        prev_shell = std::mem::replace(&mut last_shell, shell);
        let small = (0..nq).all(|qi| last_shell[qi].abs() <= tol * sums[qi].abs());
        quiet = if small { quiet + 1 } else { 0 };
        if dim == 0 || quiet >= 2 {
            break;
        }
        s += 1;
        if s as usize > MAX_SHELLS {
            return Err(Error::NonConvergence(format!("no convergence after {MAX_SHELLS} circulation shells")));
        }
    }
    if let Some(bad) = sums.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("series sum is {bad}")));
    }
    let eps = f64::EPSILON;
    let error_estimates = (0..nq)
        .map(|qi| {
            let tail = if dim == 0 { 0.0 } else { last_shell[qi].abs() + prev_shell[qi].abs() };
            tail + 64.0 * eps * abs_sums[qi]
        })
        .collect();
    let log_scale = tables.iter().map(|t| t.u.abs() + t.v.abs()).sum();
    Ok((
        ThetaDerivatives {
            masks: masks.to_vec(),
            values: sums,
            error_estimates,
            shells: s as usize + 1,
            max_radius: s as usize,
        },
        log_scale,
    ))
}

/// The angular integral itself: the sum over balanced flows of
/// `prod (bt[x][y] sqrt(l_x l_y))^{n_xy} / n_xy!`.
pub fn theta_integral_series(bt: &DMatrix<f64>, l: &LocalTimeVector, tol: f64) -> Result<ThetaValue> {
    let d = theta_derivatives(bt, l.times(), &[0], tol)?;
    Ok(ThetaValue { value: d.values[0], error_estimate: d.error_estimates[0], shells: d.shells })
}

/// Subsets of the range (as local-position masks) that avoid `a` and `b`.
pub(crate) fn cofactor_masks(m: usize, a: usize, b: usize) -> Vec<u64> {
    let free: Vec<usize> = (0..m).filter(|&x| x != a && x != b).collect();
    (0..1u64 << free.len())
        .map(|bits| free.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &x)| 1u64 << x).sum())
        .collect()
}

/// `det_ab` on the complement of `mask` within `0..m`.
pub(crate) fn complement_cofactor(mat: &DMatrix<f64>, m: usize, mask: u64, a: usize, b: usize) -> f64 {
    let idx: Vec<usize> = (0..m).filter(|&x| mask >> x & 1 == 0).collect();
    let pa = idx.iter().position(|&x| x == a).unwrap();
    let pb = idx.iter().position(|&x| x == b).unwrap();
    cofactor_ab(mat, &idx, pa, pb)
}

/// Density by the series, using the conjugated weights `r_x B_xy / r_y` in
/// the angular integral.
pub fn density_series_gauged(
    gen: &Generator,
    spec: &RangeSpec,
    l: &LocalTimeVector,
    r: Option<&[f64]>,
    tol: f64,
) -> Result<DensityResult> {
    check_point(spec, l)?;
    let m = spec.len();
    let a = spec.start_local();
    let b = spec.end_local();
    let am = gen.submatrix(spec.range());
    let mut bmat = am.clone();
    bmat.fill_diagonal(0.0);
    let lt = l.times();
    let log_prefactor = (0..m).map(|x| lt[x] * am[(x, x)]).sum::<f64>();
    if m == 1 {
        return Ok(DensityResult {
            value: log_prefactor.exp(),
            method: Method::Series,
            error_estimate: super::exp_roundoff(log_prefactor),
            resolution: Resolution::Exact,
        });
    }
    let bt = match r {
        None => bmat.clone(),
        Some(r) => {
            if r.len() != m || r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("gauge vector must be positive on the range".into()));
            }
            DMatrix::from_fn(m, m, |x, y| r[x] * bmat[(x, y)] / r[y])
        }
    };
    let neg_b = -&bmat;
    let mut masks = Vec::new();
    let mut cofs = Vec::new();
    for q in cofactor_masks(m, a, b) {
        let c = complement_cofactor(&neg_b, m, q, a, b);
        if c != 0.0 {
            masks.push(q);
            cofs.push(c);
        }
    }
    if masks.is_empty() {
        return Ok(DensityResult {
            value: 0.0,
            method: Method::Series,
            error_estimate: 0.0,
            resolution: Resolution::Exact,
        });
    }
    let (d, log_scale) = theta_derivatives_scaled(&bt, lt, &masks, tol)?;
    let prefactor = (log_prefactor + log_scale).exp();
    let mut value = 0.0;
    let mut err = 0.0;
    let mut scale = 0.0;
    for (i, c) in cofs.iter().enumerate() {
        value += c * d.values[i];
        err += c.abs() * d.error_estimates[i];
        scale += (c * d.values[i]).abs();
    }
    err += 16.0 * f64::EPSILON * scale;
    Ok(DensityResult {
        value: prefactor * value,
        method: Method::Series,
        error_estimate: prefactor * err,
        resolution: Resolution::Shells { shells: d.shells, max_radius: d.max_radius },
    })
}

/// Density by the balanced-flow series with the cofactor expansion.
pub fn density_series(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector, tol: f64) -> Result<DensityResult> {
    density_series_gauged(gen, spec, l, None, tol)
}

/// `|rho(r) - rho(1)|` where `rho(r)` uses the conjugated weights.
pub fn gauge_invariance_check(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector, r: &[f64]) -> Result<f64> {
    let tol = 1e-15;
    let base = density_series_gauged(gen, spec, l, None, tol)?;
    let gauged = density_series_gauged(gen, spec, l, Some(r), tol)?;
    Ok((gauged.value - base.value).abs())
}

/// `d^Q exp(sum_{x != y} bt[x][y] sqrt(l_x l_y))`, the dominating function of
/// the angular integral for nonnegative weights.
pub fn lemma33_upper(bt: &DMatrix<f64>, l: &[f64], mask: u64) -> f64 {
    let m = l.len();
    let phi: f64 =
        (0..m).flat_map(|x| (0..m).filter(move |&y| y != x).map(move |y| (x, y))).map(|(x, y)| bt[(x, y)] * (l[x] * l[y]).sqrt()).sum();
    let d1 = |x: usize| -> f64 {
        (0..m).filter(|&y| y != x).map(|y| (bt[(x, y)] + bt[(y, x)]) * l[y].sqrt()).sum::<f64>() / (2.0 * l[x].sqrt())
    };
    let d2 = |x: usize, y: usize| -> f64 { (bt[(x, y)] + bt[(y, x)]) / (4.0 * (l[x] * l[y]).sqrt()) };
    // The exponent is a sum of two-site terms, so only blocks of size one
    // and two survive in the set-partition (Faa di Bruno) expansion.
    fn partitions(items: &[usize], d1: &dyn Fn(usize) -> f64, d2: &dyn Fn(usize, usize) -> f64) -> f64 {
        match items.split_first() {
            None => 1.0,
            Some((&first, rest)) => {
                let mut total = d1(first) * partitions(rest, d1, d2);
                for i in 0..rest.len() {
                    let mut others = rest.to_vec();
                    let y = others.remove(i);
                    total += d2(first, y) * partitions(&others, d1, d2);
                }
                total
            }
        }
    }
    let members: Vec<usize> = (0..m).filter(|&x| mask >> x & 1 == 1).collect();
    phi.exp() * partitions(&members, &d1, &d2)
}
