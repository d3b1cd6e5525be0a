use std::path::Path;

use crate::error::{Error, Result};

/// A functional of a probability vector, with `mu_x dF/dmu_x`.
pub trait Functional: Sync {
    fn value(&self, mu: &[f64]) -> f64;
    /// Writes `mu_x * dF/dmu_x` into `out`.
    fn scaled_gradient(&self, mu: &[f64], out: &mut [f64]);
    /// The potential if the functional is `<V, mu>`.
    fn linear_potential(&self) -> Option<&[f64]> {
        None
    }
}

/// Catalog entry: `zero`, `entropy`, `power:<gamma>`, `linear:<file>`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalSpec {
    Zero,
    Entropy,
    Power(f64),
    Linear(Vec<f64>),
}

impl FunctionalSpec {
    /// Parses a catalog name; `linear:` reads whitespace-separated values.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        match name.split_once(':') {
            None if name == "zero" => Ok(FunctionalSpec::Zero),
            None if name == "entropy" => Ok(FunctionalSpec::Entropy),
            Some(("power", g)) => {
                let g: f64 = g.parse().map_err(|_| Error::Config(format!("bad exponent in '{name}'")))?;
                if !(g > 0.0 && g < 1.0) {
                    return Err(Error::Config(format!("power exponent must lie in (0, 1), got {g}")));
                }
                Ok(FunctionalSpec::Power(g))
            }
            Some(("linear", path)) => Self::linear_from_file(Path::new(path)),
            _ => Err(Error::Config(format!("unknown functional '{name}' (zero, entropy, power:<g>, linear:<file>)"))),
        }
    }

    pub fn linear_from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let v = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Config(format!("{}: bad number '{t}'", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("{}: potential must be nonempty and finite", path.display())));
        }
        Ok(FunctionalSpec::Linear(v))
    }

    pub fn name(&self) -> String {
        match self {
            FunctionalSpec::Zero => "zero".into(),
            FunctionalSpec::Entropy => "entropy".into(),
            FunctionalSpec::Power(g) => format!("power:{g}"),
            FunctionalSpec::Linear(_) => "linear".into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FunctionalSpec::Zero)
    }

    /// Functional of a measure on `sites` lattice points of spacing
    /// `1/alpha` in dimension `d`, acting on the profile `alpha^d mu`.
    pub fn instantiate(&self, alpha: f64, d: usize, sites: usize) -> Result<Box<dyn Functional>> {
        let density = alpha.powi(d as i32);
        Ok(match self {
            FunctionalSpec::Zero => Box::new(Zero),
            FunctionalSpec::Entropy => Box::new(Entropy { density }),
            FunctionalSpec::Power(g) => Box::new(Power { gamma: *g, density }),
            FunctionalSpec::Linear(v) => {
                if v.len() != sites {
                    return Err(Error::Config(format!("potential has {} values for {sites} sites", v.len())));
                }
                Box::new(Linear { v: v.clone() })
            }
        })
    }
}

pub struct Zero;

impl Functional for Zero {
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn scaled_gradient(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `sum mu log(c mu)`.
pub struct Entropy {
    pub density: f64,
}

impl Functional for Entropy {
    fn value(&self, mu: &[f64]) -> f64 {
        mu.iter().filter(|&&m| m > 0.0).map(|&m| m * (self.density * m).ln()).sum()
    }

    fn scaled_gradient(&self, mu: &[f64], out: &mut [f64]) {
        for (o, &m) in out.iter_mut().zip(mu) {
            *o = if m > 0.0 { m * ((self.density * m).ln() + 1.0) } else { 0.0 };
        }
    }
}

/// `-sum c^-1 (c mu)^gamma`.
pub struct Power {
    pub gamma: f64,
    pub density: f64,
}

impl Functional for Power {
    fn value(&self, mu: &[f64]) -> f64 {
        -mu.iter().map(|&m| (self.density * m).powf(self.gamma)).sum::<f64>() / self.density
    }

    fn scaled_gradient(&self, mu: &[f64], out: &mut [f64]) {
        for (o, &m) in out.iter_mut().zip(mu) {
            *o = -self.gamma * (self.density * m).powf(self.gamma) / self.density;
        }
    }
}

/// `<V, mu>`.
pub struct Linear {
    pub v: Vec<f64>,
}

impl Functional for Linear {
    fn value(&self, mu: &[f64]) -> f64 {
        self.v.iter().zip(mu).map(|(v, m)| v * m).sum()
    }

    fn scaled_gradient(&self, mu: &[f64], out: &mut [f64]) {
        for ((o, v), m) in out.iter_mut().zip(&self.v).zip(mu) {
            *o = v * m;
        }
    }

    fn linear_potential(&self) -> Option<&[f64]> {
        Some(&self.v)
    }
}
