//! Small dense helpers shared by the evaluators and oracles.

use nalgebra::{ComplexField, DMatrix};

/// The (b, a) cofactor of `m` on the index set `idx`: the determinant of
/// `m[idx, idx]` with row `b` and column `a` cleared and a 1 placed at (b, a).
///
/// `a` and `b` are positions within `idx`. An index set of size one gives 1
/// when `a == b`.
pub fn cofactor_ab<T: ComplexField + Copy>(m: &DMatrix<T>, idx: &[usize], a: usize, b: usize) -> T {
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| {
        if i == b || j == a {
            if i == b && j == a {
                T::one()
            } else {
                T::zero()
            }
        } else {
            m[(idx[i], idx[j])]
        }
    });
    sub.determinant()
}

/// Cofactor on the whole matrix.
pub fn cofactor_full<T: ComplexField + Copy>(m: &DMatrix<T>, a: usize, b: usize) -> T {
    let idx: Vec<usize> = (0..m.nrows()).collect();
    cofactor_ab(m, &idx, a, b)
}

/// Pairwise (cascade) summation; deterministic for a given input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Subsets of `0..n` as bit masks, in increasing order.
pub fn subsets(n: usize) -> impl Iterator<Item = u64> {
    0..(1u64 << n)
}

/// Members of a bit mask over `items`.
pub fn mask_members(mask: u64, items: &[usize]) -> Vec<usize> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect()
}
