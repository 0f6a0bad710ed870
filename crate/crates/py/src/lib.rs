//! Python bindings. Laws, weights, grids and samples are small wrapper
//! classes; structured results come back as plain dicts and lists.

use ::mellin_qfe as core;
use core::adaptive::sigma_hat_sq_diagnostics;
use core::simkit::{self, ExperimentSpec};
use core::{DensitySpec, KGrid, PenaltyMode, PenaltyTable, QuadratureRule, WeightSpec};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyComplex;
use serde::Serialize;

fn to_py_err(e: core::Error) -> PyErr {
    if e.is_numeric() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Serialises through JSON into Python builtins.
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Catalog law: `beta21`, `pareto1`, `uniform01`, `no_error` or
/// `log_normal` (with `mu`, `sigma`).
#[pyclass(name = "Density", module = "mellin_qfe", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyDensity(DensitySpec);

#[pymethods]
impl PyDensity {
    #[new]
    #[pyo3(signature = (law, mu = 0.0, sigma = 1.0))]
    fn new(law: &str, mu: f64, sigma: f64) -> PyResult<Self> {
        let spec = match law {
            "beta21" => DensitySpec::Beta21,
            "pareto1" => DensitySpec::Pareto1,
            "uniform01" => DensitySpec::Uniform01,
            "no_error" => DensitySpec::NoError,
            "log_normal" => DensitySpec::LogNormal { mu, sigma },
            other => return Err(PyValueError::new_err(format!("unknown law `{other}`"))),
        };
        spec.validate().map_err(to_py_err)?;
        Ok(Self(spec))
    }

    /// `M_c[h](t)` in closed form.
    fn mellin<'py>(&self, py: Python<'py>, c: f64, t: f64) -> PyResult<Bound<'py, PyComplex>> {
        let z = self.0.mellin(c, t).map_err(to_py_err)?;
        Ok(PyComplex::from_doubles(py, z.re, z.im))
    }

    fn pdf(&self, x: f64) -> Option<f64> {
        self.0.pdf(x)
    }

    /// `E[X^p]`.
    fn moment(&self, p: f64) -> PyResult<f64> {
        self.0.moment(p).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Density({})", self.0)
    }
}

/// `unit`, `survival` or `derivative` (with `beta`).
#[pyclass(name = "Weight", module = "mellin_qfe", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyWeight(WeightSpec);

#[pymethods]
impl PyWeight {
    #[new]
    #[pyo3(signature = (kind = "unit", beta = 1))]
    fn new(kind: &str, beta: u32) -> PyResult<Self> {
        let spec = match kind {
            "unit" => WeightSpec::Unit,
            "survival" => WeightSpec::Survival,
            "derivative" => WeightSpec::Derivative { beta },
            other => return Err(PyValueError::new_err(format!("unknown weight `{other}`"))),
        };
        spec.validate().map_err(to_py_err)?;
        Ok(Self(spec))
    }

    fn __repr__(&self) -> String {
        format!("Weight({})", self.0)
    }
}

/// Strictly increasing positive cut-offs.
#[pyclass(name = "Grid", module = "mellin_qfe", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(KGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(points: Vec<f64>) -> PyResult<Self> {
        KGrid::new(points).map(Self).map_err(to_py_err)
    }

    /// `start, start + step, ...` up to `end` inclusive.
    #[staticmethod]
    fn arithmetic(start: f64, step: f64, end: f64) -> PyResult<Self> {
        KGrid::arithmetic(start, step, end).map(Self).map_err(to_py_err)
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.0.points().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Strictly positive observations `Y_1, ..., Y_n`.
#[pyclass(name = "Sample", module = "mellin_qfe", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySample(core::Sample);

#[pymethods]
impl PySample {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        core::Sample::new(values).map(Self).map_err(to_py_err)
    }

    /// Reproducible draw of `Y = X·U` for `(seed, n, replicate)`.
    #[staticmethod]
    #[pyo3(signature = (signal, error, seed, n, replicate = 0))]
    fn draw(signal: &PyDensity, error: &PyDensity, seed: u64, n: usize, replicate: u64) -> PyResult<Self> {
        simkit::draw_replicate(&signal.0, &error.0, seed, n, replicate)
            .map(Self)
            .map_err(to_py_err)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn weight_or_unit(weight: Option<&PyWeight>) -> WeightSpec {
    weight.map(|w| w.0).unwrap_or_default()
}

/// `θ̂_k` (unclipped).
#[pyfunction]
#[pyo3(signature = (sample, error, k, c = core::DEFAULT_C, weight = None))]
fn estimate_theta(sample: &PySample, error: &PyDensity, k: f64, c: f64, weight: Option<&PyWeight>) -> PyResult<f64> {
    core::estimate_theta(
        &sample.0,
        c,
        &weight_or_unit(weight),
        &error.0,
        k,
        &QuadratureRule::default(),
    )
    .map_err(to_py_err)
}

/// `θ̂_k` over a grid as a report dict.
#[pyfunction]
#[pyo3(signature = (sample, error, grid, c = core::DEFAULT_C, weight = None))]
fn estimate_curve<'py>(
    py: Python<'py>,
    sample: &PySample,
    error: &PyDensity,
    grid: &PyGrid,
    c: f64,
    weight: Option<&PyWeight>,
) -> PyResult<Bound<'py, PyAny>> {
    let report = core::estimate_curve(
        &sample.0,
        c,
        &weight_or_unit(weight),
        &error.0,
        &grid.0,
        &QuadratureRule::default(),
    )
    .map_err(to_py_err)?;
    to_python(py, &report)
}

/// Penalty table for sample size `n`. Supply `sigma_fg` for the partial
/// penalty or `sigma_hat_sq` for the full one.
#[pyfunction]
#[pyo3(signature = (error, grid, n, kappa = core::DEFAULT_KAPPA, c = core::DEFAULT_C, weight = None, sigma_fg = None, sigma_hat_sq = None))]
#[allow(clippy::too_many_arguments)]
fn penalty_table<'py>(
    py: Python<'py>,
    error: &PyDensity,
    grid: &PyGrid,
    n: usize,
    kappa: f64,
    c: f64,
    weight: Option<&PyWeight>,
    sigma_fg: Option<f64>,
    sigma_hat_sq: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match (sigma_fg, sigma_hat_sq) {
        (Some(s), None) => PenaltyMode::Partial { sigma_fg: s },
        (None, Some(s)) => PenaltyMode::Full { sigma_hat_sq: s },
        _ => return Err(PyValueError::new_err("give exactly one of sigma_fg and sigma_hat_sq")),
    };
    let table = PenaltyTable::build(
        c,
        &weight_or_unit(weight),
        &error.0,
        &grid.0,
        n,
        kappa,
        mode,
        &QuadratureRule::default(),
    )
    .map_err(to_py_err)?;
    let upper = table.m_upper();
    let out = to_python(py, &table)?;
    out.set_item("m_upper", upper)?;
    Ok(out)
}

/// Full data-driven cut-off choice with the stopping rule; plug-in `σ̂²`
/// penalty.
#[pyfunction]
#[pyo3(signature = (sample, error, grid, kappa = core::DEFAULT_KAPPA, c = core::DEFAULT_C, weight = None))]
fn select_cutoff<'py>(
    py: Python<'py>,
    sample: &PySample,
    error: &PyDensity,
    grid: &PyGrid,
    kappa: f64,
    c: f64,
    weight: Option<&PyWeight>,
) -> PyResult<Bound<'py, PyAny>> {
    let weight = weight_or_unit(weight);
    let rule = QuadratureRule::default();
    let report = core::estimate_curve(&sample.0, c, &weight, &error.0, &grid.0, &rule).map_err(to_py_err)?;
    let sigma = sigma_hat_sq_diagnostics(&sample.0, c).map_err(to_py_err)?;
    let mode = PenaltyMode::Full {
        sigma_hat_sq: sigma.value,
    };
    let table =
        PenaltyTable::build(c, &weight, &error.0, &grid.0, sample.0.len(), kappa, mode, &rule).map_err(to_py_err)?;
    let sel = core::select_with_stopping(&report, &table).map_err(to_py_err)?;
    let out = to_python(py, &sel)?;
    out.set_item("sigma_hat_sq", sigma.value)?;
    out.set_item("sigma_unstable", sigma.unstable)?;
    Ok(out)
}

/// `θ = ∫ |M_c[f]|² ω²` from the true law.
#[pyfunction]
#[pyo3(signature = (signal, c = core::DEFAULT_C, weight = None, tolerance = 1e-10))]
fn true_theta(signal: &PyDensity, c: f64, weight: Option<&PyWeight>, tolerance: f64) -> PyResult<f64> {
    simkit::true_theta(&signal.0, c, &weight_or_unit(weight), tolerance).map_err(to_py_err)
}

/// `θ_k = ∫_{-k}^{k} |M_c[f]|² ω²` from the true law.
#[pyfunction]
#[pyo3(signature = (signal, k, c = core::DEFAULT_C, weight = None))]
fn theta_k(signal: &PyDensity, k: f64, c: f64, weight: Option<&PyWeight>) -> PyResult<f64> {
    simkit::theta_k(&signal.0, c, &weight_or_unit(weight), k, &QuadratureRule::default()).map_err(to_py_err)
}

/// Monte Carlo run from an experiment spec given as JSON text; returns one
/// dict per replicate ordered by `(n, replicate)`.
#[pyfunction]
#[pyo3(signature = (spec_json, jobs = 0))]
fn run_experiment<'py>(py: Python<'py>, spec_json: &str, jobs: usize) -> PyResult<Bound<'py, PyAny>> {
    let spec: ExperimentSpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(format!("spec: {e}")))?;
    let records = py.detach(|| simkit::run_experiment(&spec, jobs)).map_err(to_py_err)?;
    to_python(py, &records)
}

#[pymodule]
#[pyo3(name = "mellin_qfe")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyWeight>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(estimate_theta, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_curve, m)?)?;
    m.add_function(wrap_pyfunction!(penalty_table, m)?)?;
    m.add_function(wrap_pyfunction!(select_cutoff, m)?)?;
    m.add_function(wrap_pyfunction!(true_theta, m)?)?;
    m.add_function(wrap_pyfunction!(theta_k, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
