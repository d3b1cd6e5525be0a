use crate::error::{Error, Result};

/// Largest number of flows [`enumerate_balanced_flows`] will return.
pub const MAX_FLOWS: usize = 2_000_000;

/// A nonnegative integer edge-count matrix with zero diagonal and zero net
/// flow at every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BalancedFlow {
    size: usize,
    counts: Vec<u32>,
}

impl BalancedFlow {
    /// Validates a row-major count matrix.
    pub fn new(size: usize, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != size * size {
            return Err(Error::InvalidArgument("flow matrix has the wrong shape".into()));
        }
        let f = Self { size, counts };
        if (0..size).any(|x| f.get(x, x) != 0) {
            return Err(Error::InvalidArgument("flow has a nonzero diagonal".into()));
        }
        if (0..size).any(|x| f.divergence(x) != 0) {
            return Err(Error::InvalidArgument("flow is not balanced".into()));
        }
        Ok(f)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[x * self.size + y]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Total number of edge traversals.
    pub fn degree(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Out-flow at `x`, equal to the in-flow.
    pub fn out_degree(&self, x: usize) -> u64 {
        (0..self.size).map(|y| self.get(x, y) as u64).sum()
    }

    fn divergence(&self, x: usize) -> i64 {
        (0..self.size).map(|y| self.get(x, y) as i64 - self.get(y, x) as i64).sum()
    }

    /// `prod (w[x][y] * sqrt(l_x l_y))^n / n!` for a row-major weight matrix.
    pub fn monomial(&self, w: &[f64], l: &[f64]) -> f64 {
        let mut t = 1.0;
        for x in 0..self.size {
            for y in 0..self.size {
                let n = self.get(x, y);
                let base = w[x * self.size + y] * (l[x] * l[y]).sqrt();
                for k in 1..=n {
                    t *= base / k as f64;
                }
            }
        }
        t
    }
}

/// All balanced flows on `range_size` sites with degree at most `max_degree`,
/// in lexicographic order of the off-diagonal entries (row-major).
pub fn enumerate_balanced_flows(range_size: usize, max_degree: usize) -> Result<Vec<BalancedFlow>> {
    if range_size == 0 {
        return Err(Error::InvalidArgument("range_size must be at least 1".into()));
    }
    let n = range_size;
    let slots: Vec<(usize, usize)> =
        (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).collect();
    // Sites whose every incident slot has been fixed once slot i is assigned.
    let mut done_after: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    for x in 0..n {
        if let Some(last) = slots.iter().rposition(|&(p, q)| p == x || q == x) {
            done_after[last].push(x);
        }
    }
    let mut out = Vec::new();
    let mut counts = vec![0u32; n * n];
    let mut div = vec![0i64; n];
    if slots.is_empty() {
        out.push(BalancedFlow { size: n, counts });
        return Ok(out);
    }
    fn rec(
        i: usize,
        budget: usize,
        slots: &[(usize, usize)],
        done_after: &[Vec<usize>],
        n: usize,
        counts: &mut Vec<u32>,
        div: &mut Vec<i64>,
        out: &mut Vec<BalancedFlow>,
    ) -> Result<()> {
        let (x, y) = slots[i];
        for c in 0..=budget {
            counts[x * n + y] = c as u32;
            div[x] += c as i64;
            div[y] -= c as i64;
            if done_after[i].iter().all(|&s| div[s] == 0) {
                if i + 1 == slots.len() {
                    if out.len() >= MAX_FLOWS {
                        return Err(Error::Capacity { what: "balanced flows", count: out.len() + 1, limit: MAX_FLOWS });
                    }
                    out.push(BalancedFlow { size: n, counts: counts.clone() });
                } else {
                    rec(i + 1, budget - c, slots, done_after, n, counts, div, out)?;
                }
            }
            div[x] -= c as i64;
            div[y] += c as i64;
        }
        counts[x * n + y] = 0;
        Ok(())
    }
    rec(0, max_degree, &slots, &done_after, n, &mut counts, &mut div, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_balanced_flows(2, 0).unwrap().len(), 1);
        let f = enumerate_balanced_flows(2, 4).unwrap();
        assert_eq!(f.len(), 3);
        assert!(f.iter().all(|fl| fl.get(0, 1) == fl.get(1, 0)));
        assert_eq!(enumerate_balanced_flows(3, 2).unwrap().len(), 4);
        // two orientations of the triangle appear at degree 3
        assert_eq!(enumerate_balanced_flows(3, 3).unwrap().len(), 6);
        assert_eq!(enumerate_balanced_flows(1, 5).unwrap().len(), 1);
        assert!(enumerate_balanced_flows(0, 1).is_err());
    }

    #[test]
    fn brute_force_agrees() {
        // every integer matrix with entries <= 2 on 3 sites
        let mut expected = 0;
        for code in 0..3usize.pow(6) {
            let mut c = code;
            let mut m = vec![0u32; 9];
            for x in 0..3 {
                for y in 0..3 {
                    if x != y {
                        m[x * 3 + y] = (c % 3) as u32;
                        c /= 3;
                    }
                }
            }
            if BalancedFlow::new(3, m.clone()).is_ok() && m.iter().sum::<u32>() <= 4 {
                expected += 1;
            }
        }
        let got = enumerate_balanced_flows(3, 4).unwrap();
        assert_eq!(got.len(), expected);
        let mut dedup = got.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), got.len());
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(BalancedFlow::new(2, vec![0, 1, 0, 0]).is_err());
        assert!(BalancedFlow::new(2, vec![1, 0, 0, 1]).is_err());
    }
}
