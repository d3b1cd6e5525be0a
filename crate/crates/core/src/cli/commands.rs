use crate::chain::{Generator, RangeSpec};
use crate::density::{
    density, density_finite_difference, density_integral, density_quadrature_adaptive, density_series,
    LocalTimeVector, QUADRATURE_MAX_NODES,
};
use crate::error::{Error, Result};
use crate::ldp::{
    chi_continuum_zero, chi_discrete, density_bound, density_bound_symmetric, rate_function_general,
    rate_function_symmetric, rescaled_bound_experiment, thm36_lhs, thm36_rhs, FunctionalSpec, Lattice,
    MeasureOnRange, OptimOptions, RateOptions, SimplexBall,
};
use crate::oracles::{range_exact_prob, SimplexResolution};
use crate::rayknight::{bessel_i_scaled, rk_statistical_test, RkOptions};
use crate::simulate::mc_event_functional;

use super::config::ExperimentConfig;
use super::output::{list, num, Table};

const NO_SEED: &str = "none";
const SYMMETRY_TOL: f64 = 1e-12;
const DEFAULT_TOL: f64 = 1e-10;
const DEFAULT_NODES: usize = 64;
const DEFAULT_MC_SAMPLES: usize = 200_000;
const DEFAULT_FD_RELATIVE_STEP: f64 = crate::density::DEFAULT_RELATIVE_STEP;

/// Table plus named acceptance checks.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Table,
    pub checks: Vec<(String, bool)>,
}

impl Outcome {
    fn new(header: &[&str]) -> Self {
        Outcome { table: Table::new(header), checks: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push((name.into(), pass));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, p)| *p)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn l_grid(cfg: &ExperimentConfig, spec: &RangeSpec) -> Result<Vec<LocalTimeVector>> {
    let grid = cfg.l_grid.as_ref().ok_or_else(|| Error::Config("`l_grid` is required".into()))?;
    if grid.is_empty() {
        return Err(Error::Config("`l_grid` is empty".into()));
    }
    grid.iter()
        .enumerate()
        .map(|(i, l)| {
            if l.len() != spec.len() {
                return Err(Error::Config(format!("l_grid[{i}] has {} entries, range has {}", l.len(), spec.len())));
            }
            LocalTimeVector::new(l.clone()).map_err(|e| Error::Config(format!("l_grid[{i}]: {e}")))
        })
        .collect()
}

fn labels_of(gen: &Generator, idx: &[usize]) -> String {
    list(&idx.iter().map(|&i| gen.label(i)).collect::<Vec<_>>())
}

/// Closed form on a two-state chain, with `p` the rate out of the start.
pub fn two_state_closed_form(gen: &Generator, spec: &RangeSpec, l: &LocalTimeVector) -> Option<f64> {
    if gen.len() != 2 || spec.len() != 2 {
        return None;
    }
    let a = spec.start();
    let o = 1 - a;
    let (p, q) = (gen.rate(a, o), gen.rate(o, a));
    let (la, lo) = (l.times()[spec.start_local()], l.times()[1 - spec.start_local()]);
    let z = 2.0 * (p * q * la * lo).sqrt();
    let base = -p * la - q * lo + z;
    if spec.end() == a {
        Some((base).exp() * (p * q * la / lo).sqrt() * bessel_i_scaled(1, z).ok()?)
    } else {
        Some(p * base.exp() * bessel_i_scaled(0, z).ok()?)
    }
}

pub fn density_eval(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gen = cfg.generator()?;
    let spec = cfg.range_spec(&gen)?;
    let grid = l_grid(cfg, &spec)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let mut out = Outcome::new(&["point", "l", "method", "value", "error_estimate", "resolution", "seed"]);
    let mut agree = true;
    let mut closed_ok = true;
    for (i, l) in grid.iter().enumerate() {
        let min_l = l.times().iter().cloned().fold(f64::INFINITY, f64::min);
        let step = cfg.step.unwrap_or(DEFAULT_FD_RELATIVE_STEP * min_l);
        let results = [
            density_series(&gen, &spec, l, tol)?,
            density_quadrature_adaptive(&gen, &spec, l, tol, QUADRATURE_MAX_NODES)?,
            density_finite_difference(&gen, &spec, l, step)?,
        ];
        let lstr = list(l.times());
        for r in &results {
            out.table.push(vec![
                i.to_string(),
                lstr.clone(),
                r.method.to_string(),
                num(r.value),
                num(r.error_estimate),
                r.resolution.to_string(),
                NO_SEED.into(),
            ]);
        }
        for x in 0..results.len() {
            for y in x + 1..results.len() {
                agree &= rel(results[x].value, results[y].value) <= 1e-6;
            }
        }
        if let Some(exact) = two_state_closed_form(&gen, &spec, l) {
            out.table.push(vec![
                i.to_string(),
                lstr,
                "closed-form".into(),
                num(exact),
                num(0.0),
                "exact".into(),
                NO_SEED.into(),
            ]);
            closed_ok &= results.iter().all(|r| rel(r.value, exact) <= 1e-8);
        }
    }
    out.table.note("range", labels_of(&gen, spec.range()));
    out.table.note("start", gen.label(spec.start()));
    out.table.note("end", gen.label(spec.end()));
    out.table.note("tol", num(tol));
    out.check("evaluators-agree", agree);
    if gen.len() == 2 && spec.len() == 2 {
        out.check("closed-form", closed_ok);
    }
    Ok(out)
}

/// Test functionals of the local times on the range.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctional {
    One,
    Local(usize),
    ExpLocal(usize),
    Product(usize, usize),
}

impl TestFunctional {
    /// `one`, `local:x`, `exp-local:x`, `product:x:y`; labels index the range.
    pub fn parse(text: &str, gen: &Generator, spec: &RangeSpec) -> Result<Self> {
        let pos = |label: &str| -> Result<usize> {
            let i = gen.index_of(label)?;
            spec.local(i).ok_or_else(|| Error::Config(format!("state `{label}` is not in the range")))
        };
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            ["one"] => Ok(Self::One),
            ["local", x] => Ok(Self::Local(pos(x)?)),
            ["exp-local", x] => Ok(Self::ExpLocal(pos(x)?)),
            ["product", x, y] => Ok(Self::Product(pos(x)?, pos(y)?)),
            _ => Err(Error::Config(format!(
                "unknown functional '{text}' (one, local:x, exp-local:x, product:x:y)"
            ))),
        }
    }

    pub fn eval(&self, l: &[f64]) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::Local(x) => l[x],
            Self::ExpLocal(x) => (-l[x]).exp(),
            Self::Product(x, y) => l[x] * l[y],
        }
    }
}

fn integration_resolution(cfg: &ExperimentConfig, size: usize, seed: Option<u64>) -> Result<SimplexResolution> {
    if size <= 3 {
        Ok(SimplexResolution::Grid { nodes: cfg.nodes.unwrap_or(DEFAULT_NODES) })
    } else {
        let seed = seed.ok_or_else(|| Error::Config("a seed is required for Monte Carlo simplex integration".into()))?;
        Ok(SimplexResolution::MonteCarlo { samples: cfg.samples.unwrap_or(DEFAULT_MC_SAMPLES), seed })
    }
}

fn resolution_parts(r: SimplexResolution) -> (&'static str, String) {
    match r {
        SimplexResolution::Grid { .. } => ("simplex-grid", NO_SEED.into()),
        SimplexResolution::MonteCarlo { seed, .. } => ("simplex-mc", seed.to_string()),
    }
}

pub fn mc_validate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gen = cfg.generator()?;
    let spec = cfg.range_spec(&gen)?;
    let t = cfg.horizon()?;
    let seed = cfg.seed()?;
    let paths = cfg.paths.ok_or_else(|| Error::Config("`paths` is required".into()))?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let names = cfg.functionals.clone().unwrap_or_else(|| vec!["one".into()]);
    if names.is_empty() {
        return Err(Error::Config("`functionals` is empty".into()));
    }
    let resolution = integration_resolution(cfg, spec.len(), Some(seed))?;
    let (int_method, int_seed) = resolution_parts(resolution);
    let mut out = Outcome::new(&["functional", "method", "value", "error_estimate", "seed"]);
    for name in &names {
        let f = TestFunctional::parse(name, &gen, &spec)?;
        let mc = mc_event_functional(&gen, &spec, t, |l| f.eval(l), paths, seed)?;
        let quad = density_integral(&gen, &spec, t, |l| f.eval(l), resolution, tol)?;
        out.table.push(vec![name.clone(), "monte-carlo".into(), num(mc.mean), num(mc.std_error), seed.to_string()]);
        out.table.push(vec![name.clone(), int_method.into(), num(quad.value), num(quad.error_estimate), int_seed.clone()]);
        let sigma = mc.std_error.hypot(quad.error_estimate);
        out.check(format!("{name}"), (mc.mean - quad.value).abs() <= 4.0 * sigma);
        out.table.note(&format!("accepted.{name}"), mc.accepted);
    }
    out.table.note("range", labels_of(&gen, spec.range()));
    out.table.note("horizon", num(t));
    out.table.note("paths", paths);
    Ok(out)
}

fn ranges_from(gen: &Generator, start: usize) -> Result<Vec<RangeSpec>> {
    let n = gen.len();
    if n > 12 {
        return Err(Error::Capacity { what: "states for all_ranges", count: n, limit: 12 });
    }
    let mut specs = Vec::new();
    for mask in 1u64..1 << n {
        if mask >> start & 1 == 0 {
            continue;
        }
        let range: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        for &b in &range {
            specs.push(RangeSpec::new(gen, &range, start, b)?);
        }
    }
    Ok(specs)
}

pub fn marginal_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gen = cfg.generator()?;
    let t = cfg.horizon()?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let base = cfg.range_spec(&gen)?;
    let specs = if cfg.all_ranges.unwrap_or(false) { ranges_from(&gen, base.start())? } else { vec![base] };
    let mut out = Outcome::new(&["range", "end", "method", "value", "error_estimate", "seed"]);
    let mut total_exact = 0.0;
    for spec in &specs {
        let resolution = integration_resolution(cfg, spec.len(), cfg.seed)?;
        let (method, seed) = resolution_parts(resolution);
        let integral = density_integral(&gen, spec, t, |_| 1.0, resolution, tol)?;
        let exact = range_exact_prob(&gen, spec, t)?;
        total_exact += exact;
        let r = labels_of(&gen, spec.range());
        let end = gen.label(spec.end()).to_string();
        out.table.push(vec![r.clone(), end.clone(), method.into(), num(integral.value), num(integral.error_estimate), seed]);
        out.table.push(vec![r.clone(), end.clone(), "inclusion-exclusion".into(), num(exact), num(0.0), NO_SEED.into()]);
        let pass = match resolution {
            SimplexResolution::Grid { .. } => rel(integral.value, exact) <= 1e-5 || (integral.value - exact).abs() <= 1e-12,
            SimplexResolution::MonteCarlo { .. } => (integral.value - exact).abs() <= 3.0 * integral.error_estimate,
        };
        out.check(format!("{r}->{end}"), pass);
    }
    if specs.len() > 1 {
        out.table.note("total_probability", num(total_exact));
        out.check("total-probability", (total_exact - 1.0).abs() <= 1e-9);
    }
    out.table.note("horizon", num(t));
    Ok(out)
}

pub fn bounds_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gen = cfg.generator()?;
    let spec = cfg.range_spec(&gen)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let symmetric = gen.submatrix(spec.range()).iter().zip(gen.submatrix(spec.range()).transpose().iter()).all(|(a, b)| (a - b).abs() <= SYMMETRY_TOL);
    let mut out = Outcome::new(&["point", "l", "method", "value", "error_estimate", "seed"]);
    let mut violations = 0usize;
    if cfg.l_grid.is_some() {
        for (i, l) in l_grid(cfg, &spec)?.iter().enumerate() {
            let lstr = list(l.times());
            let d = density(&gen, &spec, l, tol)?;
            let mut row = |method: &str, v: f64, e: f64| {
                out.table.push(vec![i.to_string(), lstr.clone(), method.into(), num(v), num(e), NO_SEED.into()])
            };
            row(d.method.name(), d.value, d.error_estimate);
            let bound = density_bound(&gen, &spec, l, None)?;
            row("pointwise-bound", bound, 0.0);
            violations += usize::from(bound < d.value - d.error_estimate);
            if symmetric {
                let sb = density_bound_symmetric(&gen, &spec, l)?;
                row("symmetric-bound", sb, 0.0);
                violations += usize::from(sb < d.value - d.error_estimate);
            }
        }
        out.check("pointwise-bound", violations == 0);
    }
    if let Some(radius) = cfg.ball_radius {
        let t = cfg.horizon()?;
        let seed = cfg.seed()?;
        let s = spec.range();
        let center = cfg.ball_center.clone().unwrap_or_else(|| vec![1.0 / s.len() as f64; s.len()]);
        let ball = SimplexBall::new(center, radius)?;
        let nodes = cfg.nodes.unwrap_or(DEFAULT_NODES);
        let (prob, err) = thm36_lhs(&gen, s, spec.start(), &ball, t, nodes)?;
        let opts = OptimOptions { seed, starts: cfg.starts.unwrap_or(OptimOptions::default().starts), ..OptimOptions::default() };
        let rhs = thm36_rhs(&gen, s, &ball, t, &opts)?;
        let lhs = prob.ln();
        out.table.push(vec!["region".into(), "".into(), "log-probability".into(), num(lhs), num(err / prob), NO_SEED.into()]);
        out.table.push(vec!["region".into(), "".into(), "region-bound".into(), num(rhs.rhs), num(0.0), seed.to_string()]);
        out.table.note("region_optimum", num(rhs.optimum));
        out.table.note("region_error_terms", num(rhs.error_terms));
        out.table.note("region_disagreement", rhs.disagreement);
        out.check("region-bound", prob <= 0.0 || (prob - err).max(f64::MIN_POSITIVE).ln() <= rhs.rhs);
    }
    if cfg.l_grid.is_none() && cfg.ball_radius.is_none() {
        return Err(Error::Config("bounds-check needs `l_grid` or `ball_radius`".into()));
    }
    out.table.note("range", labels_of(&gen, spec.range()));
    out.table.note("symmetric", symmetric);
    Ok(out)
}

pub fn rate_function(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gen = cfg.generator()?;
    let spec = cfg.range_spec(&gen)?;
    let seed = cfg.seed()?;
    let weights = cfg.mu.clone().ok_or_else(|| Error::Config("`mu` is required".into()))?;
    let mu = MeasureOnRange::new(spec.range().to_vec(), weights).map_err(|e| Error::Config(format!("mu: {e}")))?;
    let defaults = RateOptions::default();
    let opts = RateOptions {
        tol: cfg.tol.unwrap_or(defaults.tol),
        starts: cfg.starts.unwrap_or(defaults.starts),
        seed,
        ..defaults
    };
    let r = rate_function_general(&gen, &mu, &opts)?;
    let spread = r.restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - r.restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = Outcome::new(&["method", "value", "error_estimate", "seed"]);
    out.table.push(vec!["variational".into(), num(r.value), num(if spread.is_finite() { spread } else { 0.0 }), seed.to_string()]);
    if gen.is_symmetric(SYMMETRY_TOL) {
        let dir = rate_function_symmetric(&gen, &mu)?;
        out.table.push(vec!["dirichlet-form".into(), num(dir), num(0.0), NO_SEED.into()]);
        out.check("dirichlet-form", (r.value - dir).abs() <= 1e-8 * dir.abs().max(1.0));
    }
    out.table.note("range", labels_of(&gen, spec.range()));
    out.table.note("iterations", r.iterations);
    out.table.note("diverged", r.diverged);
    out.table.note("disagreement", r.disagreement);
    if let Some(tilt) = &r.tilt {
        out.table.note("tilt", list(tilt.values()));
        out.table.note("tilt_support", labels_of(&gen, &r.support.iter().map(|&k| spec.range()[k]).collect::<Vec<_>>()));
    }
    out.check("restarts-agree", !r.disagreement);
    Ok(out)
}

fn functional_spec(cfg: &ExperimentConfig) -> Result<FunctionalSpec> {
    let name = cfg.functional.clone().unwrap_or_else(|| "zero".into());
    match name.strip_prefix("linear:") {
        Some(file) => FunctionalSpec::linear_from_file(&cfg.base_dir.join(file)),
        None => FunctionalSpec::parse(&name),
    }
}

fn optim_options(cfg: &ExperimentConfig) -> Result<OptimOptions> {
    let d = OptimOptions::default();
    Ok(OptimOptions { seed: cfg.seed()?, starts: cfg.starts.unwrap_or(d.starts), tol: cfg.tol.unwrap_or(d.tol), ..d })
}

pub fn chi(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d = cfg.d.unwrap_or(1);
    let radius = cfg.radius.unwrap_or(1.0);
    let nodes = cfg.grid_nodes.ok_or_else(|| Error::Config("`grid_nodes` is required".into()))?;
    let fspec = functional_spec(cfg)?;
    let opts = optim_options(cfg)?;
    let lattice = Lattice::from_grid(d, radius, nodes)?;
    let f = fspec.instantiate(lattice.alpha(), d, lattice.len())?;
    let opt = chi_discrete(&lattice, f.as_ref(), &opts)?;
    let spread = opt.restart_values.iter().map(|v| (v - opt.value).abs()).fold(0.0, f64::max);
    let mut out = Outcome::new(&["method", "value", "error_estimate", "seed"]);
    out.table.push(vec!["discrete".into(), num(opt.value), num(spread), opts.seed.to_string()]);
    if fspec.is_zero() {
        let c = chi_continuum_zero(d, radius);
        out.table.push(vec!["continuum".into(), num(c), num(0.0), NO_SEED.into()]);
        out.check("continuum-1pct", rel(opt.value, c) <= 0.01);
    }
    out.table.note("functional", fspec.name());
    out.table.note("d", d);
    out.table.note("radius", num(radius));
    out.table.note("nodes_per_axis", lattice.nodes_per_axis());
    out.table.note("alpha", num(lattice.alpha()));
    out.table.note("disagreement", opt.disagreement);
    Ok(out)
}

pub fn rescaled(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d = cfg.d.unwrap_or(1);
    let radius = cfg.radius.unwrap_or(1.0);
    let exponent = cfg.exponent.unwrap_or(0.25);
    let horizons = cfg.horizons.clone().ok_or_else(|| Error::Config("`horizons` is required".into()))?;
    if horizons.is_empty() {
        return Err(Error::Config("`horizons` is empty".into()));
    }
    let fspec = functional_spec(cfg)?;
    let opts = optim_options(cfg)?;
    let rows = rescaled_bound_experiment(d, radius, exponent, &horizons, &fspec, &opts)?;
    let mut out = Outcome::new(&["horizon", "alpha", "sites", "method", "value", "error_estimate", "seed"]);
    for r in &rows {
        let mut push = |m: &str, v: f64, seed: String| {
            out.table.push(vec![num(r.t), num(r.alpha), r.sites.to_string(), m.into(), num(v), num(0.0), seed])
        };
        push("error-terms", r.error_terms, NO_SEED.into());
        push("scaled-error", r.scaled_error, NO_SEED.into());
        push("chi-discrete", r.chi_t, opts.seed.to_string());
        push("scaled-bound", r.scaled_rhs, opts.seed.to_string());
        if let Some(c) = r.chi_continuum {
            push("chi-continuum", c, NO_SEED.into());
        }
    }
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let ratio = first.scaled_error / last.scaled_error;
        out.table.note("scaled_error_ratio", num(ratio));
        if rows.len() > 1 {
            out.check("scaled-error-decay-10x", ratio >= 10.0);
        }
    }
    out.table.note("functional", fspec.name());
    out.table.note("exponent", num(exponent));
    Ok(out)
}

pub fn rayknight_test(cfg: &ExperimentConfig) -> Result<Outcome> {
    let b = cfg.b.ok_or_else(|| Error::Config("`b` is required".into()))?;
    let h = cfg.h.ok_or_else(|| Error::Config("`h` is required".into()))?;
    let paths = cfg.paths.ok_or_else(|| Error::Config("`paths` is required".into()))?;
    let seed = cfg.seed()?;
    let report = rk_statistical_test(b, h, paths as usize, seed, &RkOptions::default())?;
    let mut out = Outcome::new(&["group", "test", "method", "value", "error_estimate", "seed", "threshold", "samples", "pass"]);
    for l in &report.lines {
        out.table.push(vec![
            l.group.into(),
            l.name.clone(),
            "statistic".into(),
            num(l.statistic),
            num(0.0),
            seed.to_string(),
            num(l.threshold),
            l.samples.to_string(),
            l.pass.to_string(),
        ]);
    }
    for g in ["f-kernel", "pstar-kernel", "homogeneity", "independence"] {
        out.check(g, report.group_pass(g));
    }
    out.table.note("b", b);
    out.table.note("h", num(h));
    out.table.note("paths", paths);
    out.table.note("per_test_alpha", num(report.per_test_alpha));
    out.table.note("mean_inner_first", num(report.mean_inner_first));
    out.table.note("mean_right_first", num(report.mean_right_first));
    out.table.note("truncated_paths", report.truncated_paths);
    for (i, n) in report.notes.iter().enumerate() {
        out.table.note(&format!("note.{i}"), n);
    }
    Ok(out)
}
