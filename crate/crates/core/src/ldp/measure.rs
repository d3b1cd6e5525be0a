use crate::density::LocalTimeVector;
use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOL: f64 = 1e-12;

/// Probability vector on a range of states (weights aligned with `range`).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOnRange {
    range: Vec<usize>,
    weights: Vec<f64>,
}

impl MeasureOnRange {
    pub fn new(range: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if range.is_empty() || range.len() != weights.len() {
            return Err(Error::InvalidArgument("measure needs one weight per state of a nonempty range".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        let mut sorted = range.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != range.len() {
            return Err(Error::InvalidArgument("duplicate state in measure range".into()));
        }
        Ok(MeasureOnRange { range, weights })
    }

    /// `l / T`.
    pub fn from_local_times(range: Vec<usize>, l: &LocalTimeVector) -> Result<Self> {
        let t = l.horizon();
        let mut w: Vec<f64> = l.times().iter().map(|x| x / t).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        Self::new(range, w)
    }

    pub fn range(&self) -> &[usize] {
        &self.range
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Positions (within the range) of strictly positive weights.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

/// Positive function on a range, normalized to 1 at the anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltFunction {
    values: Vec<f64>,
    anchor: usize,
}

impl TiltFunction {
    pub fn new(mut values: Vec<f64>, anchor: usize) -> Result<Self> {
        if anchor >= values.len() {
            return Err(Error::InvalidArgument("anchor out of range".into()));
        }
        if values.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidArgument("tilt function must be strictly positive".into()));
        }
        let c = values[anchor];
        values.iter_mut().for_each(|g| *g /= c);
        Ok(TiltFunction { values, anchor })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }
}
