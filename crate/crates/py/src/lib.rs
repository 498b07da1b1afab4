//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers; reports come back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use steerfilter::filter as filt;
use steerfilter::hidden::{hidden_search, SearchConfig};
use steerfilter::quantum::{self, ComplexMatrix, DensityMatrix, StateParams};
use steerfilter::scenarios::{run, Scenario, ScenarioInput, StateSource};
use steerfilter::steering::{self, Direction, SolverConfig};
use steerfilter::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::BracketFailure { .. } | Error::NonConvergence { .. } | Error::PoorFit(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn density(rows: Vec<Vec<Complex64>>) -> PyResult<DensityMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    let m = ComplexMatrix::from_row_slice(n, n, &flat).map_err(py_err)?;
    DensityMatrix::new(m).map_err(py_err)
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    let (r, c) = m.dims();
    (0..r).map(|i| (0..c).map(|j| m.get(i, j)).collect()).collect()
}

fn direction(s: &str) -> PyResult<Direction> {
    match s {
        "A->B" | "AB" | "ab" => Ok(Direction::AtoB),
        "B->A" | "BA" | "ba" => Ok(Direction::BtoA),
        _ => Err(PyValueError::new_err(format!("unknown direction {s:?}; use \"A->B\" or \"B->A\""))),
    }
}

fn solver(err: Option<f64>) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(e) = err {
        cfg.err = e;
    }
    cfg
}

/// Family state η|Φ(θ)⟩⟨Φ(θ)| + (1 − η) I/2 ⊗ ρ_B^θ as a 4x4 nested list.
#[pyfunction]
fn family_state(theta: f64, eta: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let p = StateParams::new(theta, eta).map_err(py_err)?;
    Ok(rows(quantum::family_state(p).matrix()))
}

#[pyfunction]
fn werner_state(eta: f64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows(quantum::werner_state(eta).map_err(py_err)?.matrix()))
}

#[pyfunction]
fn concurrence(rho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    quantum::concurrence(&density(rho)?).map_err(py_err)
}

/// Squared Uhlmann fidelity.
#[pyfunction]
fn fidelity(rho: Vec<Vec<Complex64>>, sigma: Vec<Vec<Complex64>>) -> PyResult<f64> {
    quantum::fidelity(&density(rho)?, &density(sigma)?).map_err(py_err)
}

#[pyfunction]
fn analytic_predicates<'py>(py: Python<'py>, theta: f64, eta: f64) -> PyResult<Bound<'py, PyAny>> {
    let p = StateParams::new(theta, eta).map_err(py_err)?;
    to_py(py, &steering::analytic_predicates(p))
}

/// Diagonal local filter ensemble.
#[pyclass(name = "FilterEnsemble", frozen)]
struct PyFilterEnsemble(filt::FilterEnsemble);

#[pymethods]
impl PyFilterEnsemble {
    #[new]
    fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> PyResult<Self> {
        filt::FilterEnsemble::from_diagonals(a1, a2, b1, b2).map(Self).map_err(py_err)
    }

    /// Ensemble from half-waveplate angles in degrees.
    #[staticmethod]
    fn from_waveplates(h1: f64, h2: f64, h3: f64, h4: f64) -> PyResult<Self> {
        let w = filt::WaveplateAngles::from_degrees([h1, h2, h3, h4]).map_err(py_err)?;
        filt::FilterEnsemble::from_waveplates(w).map(Self).map_err(py_err)
    }

    #[getter]
    fn params(&self) -> [f64; 4] {
        self.0.params()
    }

    fn completeness_residual(&self) -> f64 {
        self.0.completeness_residual()
    }

    /// Branches (1,1), (1,2), (2,1), (2,2) as dicts with `branch`,
    /// `probability` and `state` (None when degenerate).
    fn apply<'py>(&self, py: Python<'py>, rho: Vec<Vec<Complex64>>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let outs = filt::apply_all(&density(rho)?, &self.0).map_err(py_err)?;
        outs.iter()
            .map(|o| {
                let d = pyo3::types::PyDict::new(py);
                d.set_item("branch", o.branch)?;
                d.set_item("probability", o.probability)?;
                d.set_item("state", o.state.as_ref().map(|s| rows(s.matrix())))?;
                Ok(d.into_any())
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        let [a1, a2, b1, b2] = self.0.params();
        format!("FilterEnsemble(a1={a1}, a2={a2}, b1={b1}, b2={b2})")
    }
}

/// Direction-optimized steering radius, `direction` is "A->B" or "B->A".
#[pyfunction]
#[pyo3(signature = (rho, direction, err=None))]
fn steering_radius<'py>(py: Python<'py>, rho: Vec<Vec<Complex64>>, direction: &str, err: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let r = steering::steering_radius(&density(rho)?, self::direction(direction)?, &solver(err)).map_err(py_err)?;
    to_py(py, &r)
}

/// Both radii and the configuration label.
#[pyfunction]
#[pyo3(signature = (rho, err=None))]
fn classify<'py>(py: Python<'py>, rho: Vec<Vec<Complex64>>, err: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &steering::classify(&density(rho)?, &solver(err)).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (rho, n_samples=1000, seed=42))]
#[pyo3(name = "hidden_search")]
fn hidden_search_py<'py>(py: Python<'py>, rho: Vec<Vec<Complex64>>, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SearchConfig { n_samples, rng_seed: seed, ..Default::default() };
    let rho = density(rho)?;
    let report = py.detach(|| hidden_search(&rho, &cfg)).map_err(py_err)?;
    to_py(py, &report)
}

/// Runs a named CLI scenario and returns its JSON summary as a dict.
#[pyfunction]
#[pyo3(signature = (name, theta=None, eta=None, filters=None, samples=None, seed=42, err=None))]
#[allow(clippy::too_many_arguments)]
fn run_scenario<'py>(
    py: Python<'py>,
    name: &str,
    theta: Option<f64>,
    eta: Option<f64>,
    filters: Option<[f64; 4]>,
    samples: Option<usize>,
    seed: u64,
    err: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario: Scenario = name.parse().map_err(py_err)?;
    let state = match (theta, eta) {
        (Some(t), Some(e)) => Some(StateSource::Params(StateParams::new(t, e).map_err(py_err)?)),
        (None, None) => None,
        _ => return Err(PyValueError::new_err("theta and eta must be given together")),
    };
    let filters = filters
        .map(|[a1, a2, b1, b2]| filt::FilterEnsemble::from_diagonals(a1, a2, b1, b2))
        .transpose()
        .map_err(py_err)?;
    let input = ScenarioInput { state, filters, samples, seed, err, full: false };
    let out = py.detach(|| run(scenario, &input)).map_err(py_err)?;
    to_py(py, &out.json)
}

#[pymodule]
#[pyo3(name = "steerfilter")]
fn steerfilter_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFilterEnsemble>()?;
    m.add_function(wrap_pyfunction!(family_state, m)?)?;
    m.add_function(wrap_pyfunction!(werner_state, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_predicates, m)?)?;
    m.add_function(wrap_pyfunction!(steering_radius, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(hidden_search_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
