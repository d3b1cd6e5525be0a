//! Deterministic parallel reductions.
//!
//! Work is cut into fixed-size chunks whose boundaries do not depend on the
//! number of threads; chunk results are merged by a fixed binary tree. The
//! outcome is therefore bit-identical for any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Maps `0..n` in chunks of `chunk` items and merges chunk results pairwise.
pub fn chunked_reduce<T, M, R>(n: usize, chunk: usize, map: M, merge: R) -> Option<T>
where
    T: Send,
    M: Fn(std::ops::Range<usize>) -> T + Sync,
    R: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let parts: Vec<T> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| map(c * chunk..((c + 1) * chunk).min(n)))
        .collect();
    tree_merge(parts, &merge)
}

/// Merges items by a balanced binary tree in index order.
pub fn tree_merge<T, R: Fn(T, T) -> T>(mut parts: Vec<T>, merge: &R) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Running sums for a Monte Carlo mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, o: Moments) -> Moments {
        Moments { count: self.count + o.count, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    /// Sample mean over `n` draws (which may exceed `count` when some draws
    /// contributed zero without being pushed).
    pub fn mean_over(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.sum / n as f64
        }
    }

    /// Standard error of the mean over `n` draws.
    pub fn std_error_over(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let nf = n as f64;
        let mean = self.sum / nf;
        let var = ((self.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_independent_of_workers() {
        let f = || {
            chunked_reduce(100_003, 1000, |r| r.map(|i| (i as f64).sqrt().sin()).sum::<f64>(), |a, b| a + b)
                .unwrap()
        };
        let one = with_workers(Some(1), f).unwrap();
        let four = with_workers(Some(4), f).unwrap();
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn moments_standard_error() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean_over(4), 2.5);
        let var: f64 = 5.0 / 3.0;
        assert!((m.std_error_over(4) - (var / 4.0).sqrt()).abs() < 1e-14);
        assert!(with_workers(Some(0), || ()).is_err());
    }
}
