//! Generators (Q-matrices), ranges, and the restricted/killed chain on a range.
//!
//! States carry arbitrary string labels; internally they are addressed by
//! their position in the generator's label list.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance on row sums when validating conservativity.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Largest dense state space the library will materialize.
pub const MAX_STATES: usize = 4096;

/// A validated conservative generator on a finite, labelled state set.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    rates: DMatrix<f64>,
}

/// Validates a square matrix of rates, labelling states `1..=n`.
pub fn validate_generator(rows: &[Vec<f64>]) -> Result<Generator> {
    Generator::from_rows(rows)
}

impl Generator {
    pub fn new(labels: Vec<String>, rates: DMatrix<f64>) -> Result<Self> {
        let n = rates.nrows();
        if rates.ncols() != n {
            return Err(Error::InvalidGenerator(format!(
                "rate matrix is {}x{}, expected square",
                n,
                rates.ncols()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGenerator("need at least 2 states".into()));
        }
        if n > MAX_STATES {
            return Err(Error::Capacity { what: "states", count: n, limit: MAX_STATES });
        }
        if labels.len() != n {
            return Err(Error::InvalidGenerator(format!(
                "{} labels for {} states",
                labels.len(),
                n
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidGenerator(format!("duplicate state label `{l}`")));
            }
        }
        for x in 0..n {
            let mut sum = 0.0;
            let mut max_abs: f64 = 0.0;
            for y in 0..n {
                let r = rates[(x, y)];
                if !r.is_finite() {
                    return Err(Error::InvalidGenerator(format!(
                        "non-finite rate at ({}, {})",
                        labels[x], labels[y]
                    )));
                }
                if x != y && r < 0.0 {
                    return Err(Error::InvalidGenerator(format!(
                        "negative off-diagonal rate {r} at ({}, {})",
                        labels[x], labels[y]
                    )));
                }
                sum += r;
                max_abs = max_abs.max(r.abs());
            }
            if sum.abs() > ROW_SUM_TOL * max_abs {
                return Err(Error::InvalidGenerator(format!(
                    "row `{}` sums to {sum:e}, not 0",
                    labels[x]
                )));
            }
        }
        Ok(Self { labels, index, rates })
    }

    /// Builds a generator from row vectors with labels `1..=n`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGenerator("rate matrix is not square".into()));
        }
        let labels = (1..=n).map(|i| i.to_string()).collect();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(labels, m)
    }

    /// Parses a whitespace-separated matrix, one row per line. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_rows(&parse_matrix_text(text)?)
    }

    /// Two-state chain with rates `p` (1 -> 2) and `q` (2 -> 1).
    pub fn two_state(p: f64, q: f64) -> Result<Self> {
        Self::from_rows(&[vec![-p, p], vec![q, -q]])
    }

    /// Nearest-neighbour walk on the integer interval `lo..=hi` with `rate` to
    /// each neighbour; jumps leaving the interval are suppressed.
    pub fn line_srw(lo: i64, hi: i64, rate: f64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::InvalidArgument(format!("empty interval {lo}..={hi}")));
        }
        let n = (hi - lo + 1) as usize;
        let labels = (lo..=hi).map(|x| x.to_string()).collect();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if i > 0 {
                m[(i, i - 1)] = rate;
            }
            if i + 1 < n {
                m[(i, i + 1)] = rate;
            }
            m[(i, i)] = -(m.row(i).sum());
        }
        Self::new(labels, m)
    }

    /// Simple random walk on the box `{-radius..=radius}^d` with `rate` to
    /// each lattice neighbour. Jumps leaving the box are suppressed, so on
    /// the sites at distance < radius from the centre the chain agrees with
    /// the walk on the whole lattice.
    pub fn box_srw(d: usize, radius: i64, rate: f64) -> Result<Self> {
        if d == 0 || radius < 0 {
            return Err(Error::InvalidArgument("box needs d >= 1 and radius >= 0".into()));
        }
        let sites = box_sites(d, radius)?;
        let n = sites.len();
        if n > MAX_STATES {
            return Err(Error::Capacity { what: "box sites", count: n, limit: MAX_STATES });
        }
        let pos: HashMap<&[i64], usize> =
            sites.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut m = DMatrix::zeros(n, n);
        let mut nb = vec![0i64; d];
        for (i, s) in sites.iter().enumerate() {
            for k in 0..d {
                for step in [-1i64, 1] {
                    nb.copy_from_slice(s);
                    nb[k] += step;
                    if let Some(&j) = pos.get(nb.as_slice()) {
                        m[(i, j)] = rate;
                    }
                }
            }
            m[(i, i)] = -(m.row(i).sum());
        }
        Self::new(sites.iter().map(|s| site_label(s)).collect(), m)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index.get(label).copied().ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[(x, y)]
    }

    /// The off-diagonal part B of the generator.
    pub fn off_diagonal(&self) -> DMatrix<f64> {
        let mut b = self.rates.clone();
        b.fill_diagonal(0.0);
        b
    }

    /// `A` restricted to `indices x indices`, keeping the original diagonal
    /// (the generator of the chain killed on leaving the index set).
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| self.rates[(indices[i], indices[j])])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.len();
        let scale = self.rates.amax().max(1.0);
        (0..n).all(|x| (0..x).all(|y| (self.rates[(x, y)] - self.rates[(y, x)]).abs() <= tol * scale))
    }

    /// Checks that `indices` is a nonempty set of valid, distinct states and
    /// returns it sorted.
    pub fn check_subset(&self, indices: &[usize]) -> Result<Vec<usize>> {
        if indices.is_empty() {
            return Err(Error::InvalidRange("empty range".into()));
        }
        let mut v = indices.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() != indices.len() {
            return Err(Error::InvalidRange("range lists a state twice".into()));
        }
        if let Some(&bad) = v.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidRange(format!("state index {bad} out of bounds")));
        }
        Ok(v)
    }
}

fn site_label(s: &[i64]) -> String {
    let mut out = String::new();
    for (k, c) in s.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "{c}").unwrap();
    }
    out
}

/// Lattice points of `{-radius..=radius}^d` in lexicographic order.
pub fn box_sites(d: usize, radius: i64) -> Result<Vec<Vec<i64>>> {
    let side = (2 * radius + 1) as usize;
    let count = side.checked_pow(d as u32).unwrap_or(usize::MAX);
    if count > MAX_STATES {
        return Err(Error::Capacity { what: "box sites", count, limit: MAX_STATES });
    }
    let mut out = Vec::with_capacity(count);
    let mut cur = vec![-radius; d];
    loop {
        out.push(cur.clone());
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if cur[k] < radius {
                cur[k] += 1;
                break;
            }
            cur[k] = -radius;
        }
    }
}

/// Parses whitespace-separated rows of reals.
pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::InvalidGenerator(format!("line {}: cannot parse `{t}` as a number", ln + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// A finite range R with entry state `a` and terminal state `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeSpec {
    range: Vec<usize>,
    start: usize,
    end: usize,
}

impl RangeSpec {
    /// `range` holds state indices of `gen`; `start`/`end` must lie in it.
    pub fn new(gen: &Generator, range: &[usize], start: usize, end: usize) -> Result<Self> {
        let range = gen.check_subset(range)?;
        for (name, s) in [("start", start), ("end", end)] {
            if !range.contains(&s) {
                return Err(Error::InvalidRange(format!(
                    "{name} state `{}` is not in the range",
                    gen.labels.get(s).map(String::as_str).unwrap_or("?")
                )));
            }
        }
        Ok(Self { range, start, end })
    }

    pub fn from_labels<S: AsRef<str>>(gen: &Generator, range: &[S], start: &str, end: &str) -> Result<Self> {
        let r = gen.indices_of(range)?;
        Self::new(gen, &r, gen.index_of(start)?, gen.index_of(end)?)
    }

    /// The whole state space as range.
    pub fn full(gen: &Generator, start: usize, end: usize) -> Result<Self> {
        Self::new(gen, &(0..gen.len()).collect::<Vec<_>>(), start, end)
    }

    /// Sorted state indices of R.
    pub fn range(&self) -> &[usize] {
        &self.range
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Position of `start` within `range()`.
    pub fn start_local(&self) -> usize {
        self.local(self.start).unwrap()
    }

    /// Position of `end` within `range()`.
    pub fn end_local(&self) -> usize {
        self.local(self.end).unwrap()
    }

    pub fn local(&self, state: usize) -> Option<usize> {
        self.range.binary_search(&state).ok()
    }
}

/// The conservative chain on R obtained by suppressing jumps out of R,
/// together with the killing potential that accounts for them.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedGenerator {
    range: Vec<usize>,
    inner: DMatrix<f64>,
    killing: Vec<f64>,
}

impl RestrictedGenerator {
    /// State indices (of the parent generator) making up R.
    pub fn range(&self) -> &[usize] {
        &self.range
    }

    /// Conservative generator on R, indexed by position in `range()`.
    pub fn inner(&self) -> &DMatrix<f64> {
        &self.inner
    }

    /// Killing rates: total rate of attempted jumps out of R.
    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    /// `inner - diag(killing)`, which is the parent generator on `R x R`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut m = self.inner.clone();
        for (i, k) in self.killing.iter().enumerate() {
            m[(i, i)] -= k;
        }
        m
    }

    /// Labels the inner chain like the parent's states on R.
    pub fn inner_generator(&self, parent: &Generator) -> Result<Generator> {
        let labels = self.range.iter().map(|&i| parent.label(i).to_string()).collect();
        Generator::new(labels, self.inner.clone())
    }

    /// Restricts further to `sub` (parent indices, a subset of this range).
    /// Killing rates accumulate.
    pub fn restrict_to(&self, sub: &[usize]) -> Result<RestrictedGenerator> {
        let local: Vec<usize> = sub
            .iter()
            .map(|s| {
                self.range
                    .binary_search(s)
                    .map_err(|_| Error::InvalidRange(format!("state {s} not in the current range")))
            })
            .collect::<Result<_>>()?;
        let mut local_sorted = local.clone();
        local_sorted.sort_unstable();
        local_sorted.dedup();
        if local_sorted.len() != local.len() || local.is_empty() {
            return Err(Error::InvalidRange("sub-range must be nonempty and distinct".into()));
        }
        let (inner, extra) = restrict_matrix(&self.inner, &local_sorted);
        let killing = local_sorted.iter().zip(extra).map(|(&i, e)| self.killing[i] + e).collect();
        Ok(RestrictedGenerator {
            range: local_sorted.iter().map(|&i| self.range[i]).collect(),
            inner,
            killing,
        })
    }
}

/// Returns the conservative restriction of `a` to `idx` and the rates leaving `idx`.
fn restrict_matrix(a: &DMatrix<f64>, idx: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    let m = idx.len();
    let n = a.nrows();
    let mut inside = vec![false; n];
    for &i in idx {
        inside[i] = true;
    }
    let mut inner = DMatrix::zeros(m, m);
    let mut killing = vec![0.0; m];
    for (i, &x) in idx.iter().enumerate() {
        let mut diag = 0.0;
        for (j, &y) in idx.iter().enumerate() {
            if i != j {
                inner[(i, j)] = a[(x, y)];
                diag += a[(x, y)];
            }
        }
        inner[(i, i)] = -diag;
        killing[i] = (0..n).filter(|&y| !inside[y]).map(|y| a[(x, y)]).sum();
    }
    (inner, killing)
}

/// Splits the generator on R into the conservative chain on R and the
/// killing potential for jumps out of R.
pub fn restrict(gen: &Generator, range: &[usize]) -> Result<RestrictedGenerator> {
    let range = gen.check_subset(range)?;
    let (inner, killing) = restrict_matrix(gen.rates(), &range);
    Ok(RestrictedGenerator { range, inner, killing })
}

/// The constant η_R: the largest absolute row or column sum of the
/// off-diagonal part on R, and at least 1.
pub fn eta(gen: &Generator, range: &[usize]) -> Result<f64> {
    let range = gen.check_subset(range)?;
    Ok(eta_of_matrix(&gen.submatrix(&range)))
}

/// η for a square matrix, ignoring its diagonal.
pub fn eta_of_matrix(a: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    let mut best: f64 = 1.0;
    for x in 0..m {
        let row: f64 = (0..m).filter(|&y| y != x).map(|y| a[(x, y)].abs()).sum();
        let col: f64 = (0..m).filter(|&y| y != x).map(|y| a[(y, x)].abs()).sum();
        best = best.max(row).max(col);
    }
    best
}
