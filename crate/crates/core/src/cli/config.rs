use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};

/// Experiment description read from a TOML file; command-line flags
/// override individual fields.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: Option<GeneratorSource>,
    /// Range R as state labels.
    pub range: Option<Vec<String>>,
    pub start: Option<String>,
    pub end: Option<String>,
    pub horizon: Option<f64>,
    /// Local-time vectors over R (each sums to its own horizon).
    pub l_grid: Option<Vec<Vec<f64>>>,
    pub tol: Option<f64>,
    pub nodes: Option<usize>,
    pub step: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub samples: Option<usize>,
    pub functionals: Option<Vec<String>>,
    pub functional: Option<String>,
    pub mu: Option<Vec<f64>>,
    pub all_ranges: Option<bool>,
    pub ball_center: Option<Vec<f64>>,
    pub ball_radius: Option<f64>,
    pub d: Option<usize>,
    pub radius: Option<f64>,
    pub grid_nodes: Option<usize>,
    pub alpha: Option<f64>,
    pub exponent: Option<f64>,
    pub horizons: Option<Vec<f64>>,
    pub starts: Option<usize>,
    pub b: Option<i64>,
    pub h: Option<f64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Inline matrix, matrix file, or named family.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSource {
    pub rates: Option<Vec<Vec<f64>>>,
    pub rates_file: Option<PathBuf>,
    pub family: Option<String>,
    pub labels: Option<Vec<String>>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub d: Option<usize>,
    pub radius: Option<i64>,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
    pub rate: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1));
            match line {
                Some(l) => Error::Config(format!("line {l}: {}", e.message())),
                None => Error::Config(e.message().to_string()),
            }
        })
    }

    pub fn generator(&self) -> Result<Generator> {
        let src = self.generator.as_ref().ok_or_else(|| Error::Config("missing [generator] table".into()))?;
        let given = [src.rates.is_some(), src.rates_file.is_some(), src.family.is_some()].iter().filter(|x| **x).count();
        if given != 1 {
            return Err(Error::Config("[generator] needs exactly one of rates, rates_file, family".into()));
        }
        let gen = if let Some(rows) = &src.rates {
            Generator::from_rows(rows)?
        } else if let Some(file) = &src.rates_file {
            let path = self.base_dir.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            Generator::from_text(&text)?
        } else {
            let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::Config(format!("[generator] family needs `{k}`")));
            match src.family.as_deref().unwrap_or_default() {
                "two-state" => Generator::two_state(need(src.p, "p")?, need(src.q, "q")?)?,
                "box-srw" => Generator::box_srw(
                    src.d.unwrap_or(1),
                    src.radius.ok_or_else(|| Error::Config("[generator] box-srw needs `radius`".into()))?,
                    src.rate.unwrap_or(1.0),
                )?,
                "line-srw" => Generator::line_srw(
                    src.lo.ok_or_else(|| Error::Config("[generator] line-srw needs `lo`".into()))?,
                    src.hi.ok_or_else(|| Error::Config("[generator] line-srw needs `hi`".into()))?,
                    src.rate.unwrap_or(1.0),
                )?,
                other => return Err(Error::Config(format!("unknown generator family '{other}' (two-state, box-srw, line-srw)"))),
            }
        };
        match &src.labels {
            Some(labels) => Generator::new(labels.clone(), gen.rates().clone()),
            None => Ok(gen),
        }
    }

    /// Range spec from `range`, `start`, `end` (defaults: all states, first, start).
    pub fn range_spec(&self, gen: &Generator) -> Result<RangeSpec> {
        let labels: Vec<String> = match &self.range {
            Some(r) => r.clone(),
            None => gen.labels().to_vec(),
        };
        if labels.is_empty() {
            return Err(Error::Config("`range` is empty".into()));
        }
        let start = self.start.clone().unwrap_or_else(|| labels[0].clone());
        let end = self.end.clone().unwrap_or_else(|| start.clone());
        RangeSpec::from_labels(gen, &labels, &start, &end)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn horizon(&self) -> Result<f64> {
        let t = self.horizon.ok_or_else(|| Error::Config("`horizon` is required".into()))?;
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(Error::Config(format!("`horizon` must be positive, got {t}")))
        }
    }
}
