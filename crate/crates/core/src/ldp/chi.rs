use super::functional::Functional;
use super::optim::{minimize_on_simplex, Energy, OptimOptions, SimplexOptimum};
use crate::error::{Error, Result};

/// Largest lattice accepted by the variational solvers.
pub const MAX_LATTICE_SITES: usize = 200_000;

/// Cubic block of `Z^d` with spacing `1/alpha`, inside the open box
/// `(-R, R)^d`, with Dirichlet links to the outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    d: usize,
    radius: f64,
    alpha: f64,
    nodes: usize,
    sites: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    outside: Vec<usize>,
}

impl Lattice {
    /// `nodes` points per axis with spacing `2R / (nodes + 1)`.
    pub fn from_grid(d: usize, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || nodes == 0 {
            return Err(Error::InvalidArgument("lattice needs a positive radius and at least one node".into()));
        }
        Self::build(d, radius, (nodes as f64 + 1.0) / (2.0 * radius), nodes)
    }

    /// Integer points `x` with `|x_i| < R alpha`, i.e. `2 ceil(R alpha) - 1`
    /// points per axis.
    pub fn from_scale(d: usize, radius: f64, alpha: f64) -> Result<Self> {
        if !(radius > 0.0 && alpha > 0.0 && (radius * alpha).is_finite()) {
            return Err(Error::InvalidArgument("lattice needs positive radius and scale".into()));
        }
        let k = (radius * alpha).ceil() as usize;
        Self::build(d, radius, alpha, 2 * k - 1)
    }

    fn build(d: usize, radius: f64, alpha: f64, nodes: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let total = (nodes as f64).powi(d as i32);
        if total > MAX_LATTICE_SITES as f64 {
            return Err(Error::Capacity { what: "lattice sites", count: total as usize, limit: MAX_LATTICE_SITES });
        }
        let n = total as usize;
        let mut sites = Vec::with_capacity(n);
        for idx in 0..n {
            let mut c = vec![0; d];
            let mut r = idx;
            for ci in c.iter_mut() {
                *ci = r % nodes;
                r /= nodes;
            }
            sites.push(c);
        }
        let stride: Vec<usize> = (0..d).map(|k| nodes.pow(k as u32)).collect();
        let mut neighbors = vec![Vec::new(); n];
        let mut outside = vec![0; n];
        for (i, c) in sites.iter().enumerate() {
            for k in 0..d {
                if c[k] > 0 {
                    neighbors[i].push(i - stride[k]);
                } else {
                    outside[i] += 1;
                }
                if c[k] + 1 < nodes {
                    neighbors[i].push(i + stride[k]);
                } else {
                    outside[i] += 1;
                }
            }
        }
        Ok(Lattice { d, radius, alpha, nodes, sites, neighbors, outside })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Continuum position of a site.
    pub fn position(&self, i: usize) -> Vec<f64> {
        let mid = (self.nodes as f64 - 1.0) / 2.0;
        self.sites[i].iter().map(|&c| (c as f64 - mid) / self.alpha).collect()
    }

    /// η of the walk with rate 1/2 per neighbor inside the block.
    pub fn eta(&self) -> f64 {
        self.neighbors.iter().map(|nb| 0.5 * nb.len() as f64).fold(1.0, f64::max)
    }

    /// `alpha^2 / 2 * sum over links (sqrt mu_x - sqrt mu_y)^2`, counting
    /// links to the outside with zero there.
    pub fn energy(&self) -> Energy {
        let a2 = self.alpha * self.alpha;
        Energy {
            scale: a2,
            diag: (0..self.len()).map(|x| 0.5 * (self.neighbors[x].len() + self.outside[x]) as f64).collect(),
            links: self.neighbors.iter().map(|nb| nb.iter().map(|&y| (y, 0.5)).collect()).collect(),
        }
    }
}

/// `inf over mu of energy(mu) - F(mu)`.
pub fn chi_discrete(lattice: &Lattice, f: &dyn Functional, opts: &OptimOptions) -> Result<SimplexOptimum> {
    minimize_on_simplex(&lattice.energy(), f, opts)
}

/// `d pi^2 / (8 R^2)`, the principal Dirichlet eigenvalue of `-Laplacian/2`
/// on `(-R, R)^d`.
pub fn chi_continuum_zero(d: usize, radius: f64) -> f64 {
    d as f64 * std::f64::consts::PI.powi(2) / (8.0 * radius * radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::functional::{FunctionalSpec, Zero};

    #[test]
    fn lattice_shapes() {
        let l = Lattice::from_grid(2, 1.0, 3).unwrap();
        assert_eq!(l.len(), 9);
        assert_eq!(l.alpha(), 2.0);
        assert_eq!(l.position(0), vec![-0.5, -0.5]);
        assert_eq!(l.eta(), 2.0);
        let s = Lattice::from_scale(1, 1.0, 10.0).unwrap();
        assert_eq!(s.len(), 19);
        let s = Lattice::from_scale(1, 1.0, 10.5).unwrap();
        assert_eq!(s.len(), 21);
    }

    #[test]
    fn interval_eigenvalue() {
        let l = Lattice::from_grid(1, 1.0, 200).unwrap();
        let r = chi_discrete(&l, &Zero, &OptimOptions { starts: 2, ..Default::default() }).unwrap();
        let exact = 0.5 * l.alpha().powi(2) * (2.0 - 2.0 * (std::f64::consts::PI / 201.0).cos());
        assert!((r.value - exact).abs() < 1e-6 * exact, "{} {}", r.value, exact);
        assert!((r.value - chi_continuum_zero(1, 1.0)).abs() < 0.01 * chi_continuum_zero(1, 1.0));
    }

    #[test]
    fn entropy_decreases_with_box() {
        let opts = OptimOptions { starts: 3, ..Default::default() };
        let mut prev = f64::INFINITY;
        for r in [1.0, 1.5, 2.0] {
            let l = Lattice::from_scale(1, r, 6.0).unwrap();
            let f = FunctionalSpec::Entropy.instantiate(l.alpha(), 1, l.len()).unwrap();
            let v = chi_discrete(&l, f.as_ref(), &opts).unwrap().value;
            assert!(v.is_finite() && v <= prev + 1e-9);
            prev = v;
        }
    }
}
