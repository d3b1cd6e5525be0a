use crate::error::{Error, Result};

/// Tolerance for membership tests.
pub const REGION_TOL: f64 = 1e-12;

/// A closed convex subset of the probability simplex on `dim` states.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, mu: &[f64]) -> bool;
    /// Euclidean projection onto the region.
    fn project(&self, v: &[f64]) -> Vec<f64>;
    fn describe(&self) -> String;
}

fn in_simplex(mu: &[f64]) -> bool {
    mu.iter().all(|&x| x >= -REGION_TOL) && (mu.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// The whole simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WholeSimplex {
    pub dim: usize,
}

impl Region for WholeSimplex {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim && in_simplex(mu)
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        project_simplex(v)
    }

    fn describe(&self) -> String {
        format!("simplex(dim={})", self.dim)
    }
}

/// Intersection of the simplex with a Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexBall {
    center: Vec<f64>,
    radius: f64,
}

impl SimplexBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !in_simplex(&center) {
            return Err(Error::InvalidArgument("ball center must lie in the simplex".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument("ball radius must be positive".into()));
        }
        Ok(SimplexBall { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn project_ball(&self, v: &[f64]) -> Vec<f64> {
        let d: f64 = v.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        if d <= self.radius {
            return v.to_vec();
        }
        let s = self.radius / d;
        v.iter().zip(&self.center).map(|(a, c)| c + s * (a - c)).collect()
    }
}

impl Region for SimplexBall {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim()
            && in_simplex(mu)
            && mu.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt() <= self.radius + REGION_TOL
    }

    /// Dykstra's alternating projections.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut x = v.to_vec();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for _ in 0..10_000 {
            let y_in: Vec<f64> = (0..n).map(|i| x[i] + p[i]).collect();
            let y = project_simplex(&y_in);
            for i in 0..n {
                p[i] = y_in[i] - y[i];
            }
            let z_in: Vec<f64> = (0..n).map(|i| y[i] + q[i]).collect();
            let z = self.project_ball(&z_in);
            for i in 0..n {
                q[i] = z_in[i] - z[i];
            }
            let change: f64 = z.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = z;
            if change < 1e-15 {
                break;
            }
        }
        project_simplex(&x)
    }

    fn describe(&self) -> String {
        format!("ball(center={:?}, radius={})", self.center, self.radius)
    }
}
