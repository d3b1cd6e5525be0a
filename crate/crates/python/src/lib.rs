//! Python bindings for `ctmc-localtime`.
//!
//! States are addressed by index into the generator. Errors from the core
//! library surface as `ValueError`.

use ctmc_localtime::cli::TestFunctional;
use ctmc_localtime::density::{density_quadrature_adaptive, QUADRATURE_MAX_NODES};
use ctmc_localtime::ldp::{self, MeasureOnRange, OptimOptions, RateOptions};
use ctmc_localtime::oracles::{self, SimplexResolution};
use ctmc_localtime::rayknight::{self, RkOptions};
use ctmc_localtime::{
    density_finite_difference, density_series, simulate, DensityResult, LocalTimeVector, RangeSpec,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: ctmc_localtime::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Generator of a continuous-time Markov chain.
#[pyclass(name = "Generator", frozen, skip_from_py_object)]
pub struct PyGenerator {
    inner: ctmc_localtime::Generator,
}

#[pymethods]
impl PyGenerator {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: ctmc_localtime::Generator::from_rows(&rows).map_err(err)? })
    }

    #[staticmethod]
    fn two_state(p: f64, q: f64) -> PyResult<Self> {
        Ok(Self { inner: ctmc_localtime::Generator::two_state(p, q).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (lo, hi, rate=1.0))]
    fn line_srw(lo: i64, hi: i64, rate: f64) -> PyResult<Self> {
        Ok(Self { inner: ctmc_localtime::Generator::line_srw(lo, hi, rate).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (d, radius, rate=1.0))]
    fn box_srw(d: usize, radius: i64, rate: f64) -> PyResult<Self> {
        Ok(Self { inner: ctmc_localtime::Generator::box_srw(d, radius, rate).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn rates(&self) -> Vec<Vec<f64>> {
        let a = self.inner.rates();
        (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Generator(states={})", self.inner.len())
    }
}

fn spec(gen: &PyGenerator, range: Option<Vec<usize>>, start: usize, end: usize) -> PyResult<RangeSpec> {
    match range {
        Some(r) => RangeSpec::new(&gen.inner, &r, start, end),
        None => RangeSpec::full(&gen.inner, start, end),
    }
    .map_err(err)
}

fn result_dict<'py>(py: Python<'py>, r: &DensityResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("error_estimate", r.error_estimate)?;
    d.set_item("method", r.method.name())?;
    Ok(d)
}

/// Joint density of the local times `l` on `range` for paths from `start`
/// ending at `end`. `method` is `series`, `quadrature` or `finite-difference`.
#[pyfunction]
#[pyo3(signature = (gen, l, start, end, range=None, method="series", tol=1e-10, step=None))]
#[allow(clippy::too_many_arguments)]
fn density<'py>(
    py: Python<'py>,
    gen: &PyGenerator,
    l: Vec<f64>,
    start: usize,
    end: usize,
    range: Option<Vec<usize>>,
    method: &str,
    tol: f64,
    step: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec(gen, range, start, end)?;
    let l = LocalTimeVector::new(l).map_err(err)?;
    let r = match method {
        "series" => density_series(&gen.inner, &spec, &l, tol),
        "quadrature" => density_quadrature_adaptive(&gen.inner, &spec, &l, tol, QUADRATURE_MAX_NODES),
        "finite-difference" => {
            let min_l = l.times().iter().cloned().fold(f64::INFINITY, f64::min);
            let h = step.unwrap_or(ctmc_localtime::density::DEFAULT_RELATIVE_STEP * min_l);
            density_finite_difference(&gen.inner, &spec, &l, h)
        }
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    }
    .map_err(err)?;
    result_dict(py, &r)
}

/// Upper bound on the density from a tilt `g` (the optimal one when omitted).
#[pyfunction]
#[pyo3(signature = (gen, l, start, end, range=None, g=None))]
fn density_bound(
    gen: &PyGenerator,
    l: Vec<f64>,
    start: usize,
    end: usize,
    range: Option<Vec<usize>>,
    g: Option<Vec<f64>>,
) -> PyResult<f64> {
    let spec = spec(gen, range, start, end)?;
    let l = LocalTimeVector::new(l).map_err(err)?;
    ldp::density_bound(&gen.inner, &spec, &l, g.as_deref()).map_err(err)
}

/// `P_start(X_t = end, range of the path = range)` by inclusion-exclusion.
#[pyfunction]
#[pyo3(signature = (gen, t, start, end, range=None))]
fn range_exact_prob(gen: &PyGenerator, t: f64, start: usize, end: usize, range: Option<Vec<usize>>) -> PyResult<f64> {
    let spec = spec(gen, range, start, end)?;
    oracles::range_exact_prob(&gen.inner, &spec, t).map_err(err)
}

/// Simplex integral of `F * density` against a Monte Carlo estimate over
/// `paths` simulated paths. `functional` is `one`, `local:x`, `exp-local:x`
/// or `product:x:y` with state labels.
#[pyfunction]
#[pyo3(signature = (gen, t, start, end, functional="one", range=None, paths=100_000, seed=0, nodes=64))]
#[allow(clippy::too_many_arguments)]
fn functional_check<'py>(
    py: Python<'py>,
    gen: &PyGenerator,
    t: f64,
    start: usize,
    end: usize,
    functional: &str,
    range: Option<Vec<usize>>,
    paths: u64,
    seed: u64,
    nodes: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec(gen, range, start, end)?;
    let f = TestFunctional::parse(functional, &gen.inner, &spec).map_err(err)?;
    let (mc, quad) = py
        .detach(|| {
            let mc = simulate::mc_event_functional(&gen.inner, &spec, t, |l| f.eval(l), paths, seed)?;
            let quad = ctmc_localtime::density_integral(
                &gen.inner,
                &spec,
                t,
                |l| f.eval(l),
                SimplexResolution::Grid { nodes },
                1e-10,
            )?;
            Ok((mc, quad))
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mc_mean", mc.mean)?;
    d.set_item("mc_std_error", mc.std_error)?;
    d.set_item("integral", quad.value)?;
    d.set_item("integral_error", quad.error_estimate)?;
    Ok(d)
}

/// Rate function of the probability measure `weights` on `range`.
#[pyfunction]
#[pyo3(signature = (gen, weights, range=None, seed=0))]
fn rate_function(gen: &PyGenerator, weights: Vec<f64>, range: Option<Vec<usize>>, seed: u64) -> PyResult<f64> {
    let range = range.unwrap_or_else(|| (0..gen.inner.len()).collect());
    let mu = MeasureOnRange::new(range, weights).map_err(err)?;
    ldp::rate_function(&gen.inner, &mu, &RateOptions { seed, ..RateOptions::default() }).map_err(err)
}

/// `eta` of the generator restricted to `range`.
#[pyfunction]
#[pyo3(signature = (gen, range=None))]
fn eta(gen: &PyGenerator, range: Option<Vec<usize>>) -> PyResult<f64> {
    let range = range.unwrap_or_else(|| (0..gen.inner.len()).collect());
    ctmc_localtime::eta(&gen.inner, &range).map_err(err)
}

/// Discrete variational value with `F = 0` on a `d`-dimensional box of the
/// given radius with `nodes` sites per axis.
#[pyfunction]
#[pyo3(signature = (d, radius, nodes))]
fn chi_discrete(d: usize, radius: f64, nodes: usize) -> PyResult<f64> {
    let lattice = ldp::Lattice::from_grid(d, radius, nodes).map_err(err)?;
    Ok(ldp::chi_discrete(&lattice, &ldp::Zero, &OptimOptions::default()).map_err(err)?.value)
}

/// Transition density of the f-kernel from `h1` to `h2`.
#[pyfunction]
fn f_kernel(h1: f64, h2: f64) -> PyResult<f64> {
    rayknight::f_kernel(h1, h2).map_err(err)
}

/// Mass of the P*-kernel at zero from `h1`.
#[pyfunction]
fn pstar_atom(h1: f64) -> PyResult<f64> {
    Ok(rayknight::pstar_kernel(h1).map_err(err)?.atom)
}

/// Walk local-time profiles against the Ray-Knight kernels. Returns a dict
/// of the overall verdict and one `(group, name, statistic, threshold, pass)`
/// tuple per test.
#[pyfunction]
#[pyo3(signature = (b, h, paths, seed))]
fn rayknight_test<'py>(py: Python<'py>, b: i64, h: f64, paths: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let report = py.detach(|| rayknight::rk_statistical_test(b, h, paths, seed, &RkOptions::default())).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", report.all_pass())?;
    let lines: Vec<(&str, String, f64, f64, bool)> =
        report.lines.iter().map(|l| (l.group, l.name.clone(), l.statistic, l.threshold, l.pass)).collect();
    d.set_item("tests", lines)?;
    Ok(d)
}

#[pymodule]
fn ctmc_localtime_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(density_bound, m)?)?;
    m.add_function(wrap_pyfunction!(range_exact_prob, m)?)?;
    m.add_function(wrap_pyfunction!(functional_check, m)?)?;
    m.add_function(wrap_pyfunction!(rate_function, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(chi_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(f_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(pstar_atom, m)?)?;
    m.add_function(wrap_pyfunction!(rayknight_test, m)?)?;
    Ok(())
}
