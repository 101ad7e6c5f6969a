//! Python bindings. Every entry point takes the JSON run configuration as a string.

use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quasimode::config::{parse_method, RunConfig};
use quasimode::dynamics::compare_traces;
use quasimode::model::build_atomic_system;

fn err(e: quasimode::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(config: &str) -> PyResult<RunConfig> {
    RunConfig::from_json_str(config).map_err(err)
}

/// `η_k` of an atom given level energies and `(upper, lower)` transitions.
#[pyfunction]
#[pyo3(signature = (levels, transitions, zero_eta = None))]
fn eta_coefficients(levels: Vec<f64>, transitions: Vec<(usize, usize)>, zero_eta: Option<Vec<usize>>) -> PyResult<Vec<f64>> {
    let atom = build_atomic_system(&levels, &transitions, zero_eta.as_deref()).map_err(err)?;
    Ok(atom.etas().to_vec())
}

/// `{"omega", "D", "g"}` on the configured frequency grid.
#[pyfunction]
fn structure<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyDict>> {
    let s = load(config)?.sampled_structure().map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("omega", s.omega)?;
    d.set_item("D", s.d)?;
    d.set_item("g", s.g)?;
    Ok(d)
}

/// `{"strength", "poles", "residues", "couplings", "cancelled"}`.
#[pyfunction]
fn pseudomodes<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyDict>> {
    let set = load(config)?.pseudomodes().map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("strength", set.strength)?;
    d.set_item("poles", set.poles())?;
    d.set_item("residues", set.residues())?;
    d.set_item("couplings", set.couplings())?;
    d.set_item("cancelled", set.cancelled.clone())?;
    d.set_item("residue_sum_residual", set.residue_sum_residual())?;
    Ok(d)
}

/// `{"t", "P1", "c1", "norm"}`; `c1` is `None` for density-matrix runs.
#[pyfunction]
#[pyo3(signature = (config, method = "pseudomode"))]
fn dynamics<'py>(py: Python<'py>, config: &str, method: &str) -> PyResult<Bound<'py, PyDict>> {
    let method = parse_method(method).map_err(err)?;
    let trace = load(config)?.solve(method).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t", trace.times)?;
    d.set_item("P1", trace.p1)?;
    d.set_item("c1", trace.c1)?;
    d.set_item("norm", trace.norm)?;
    if let Some(rho) = trace.density {
        d.set_item("trace_rho", rho.trace)?;
        d.set_item("min_eig", rho.min_eig)?;
    }
    Ok(d)
}

/// Deviation statistics between two methods on the same grid.
#[pyfunction]
fn compare<'py>(py: Python<'py>, config: &str, method_a: &str, method_b: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = load(config)?;
    let a = config.solve(parse_method(method_a).map_err(err)?).map_err(err)?;
    let b = config.solve(parse_method(method_b).map_err(err)?).map_err(err)?;
    let r = compare_traces(&a, &b).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("max_dP1", r.max_dp1)?;
    d.set_item("rms_dP1", r.rms_dp1)?;
    d.set_item("max_dc1", r.max_dc1)?;
    d.set_item("rms_dc1", r.rms_dc1)?;
    Ok(d)
}

/// Memory kernel `G(τ)` of the configured reservoir.
#[pyfunction]
fn kernel(config: &str, tau: f64) -> PyResult<C64> {
    let set = load(config)?.pseudomodes().map_err(err)?;
    quasimode::pseudo::kernel(&set, tau).map_err(err)
}

#[pymodule]
#[pyo3(name = "quasimode")]
pub fn quasimode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eta_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(structure, m)?)?;
    m.add_function(wrap_pyfunction!(pseudomodes, m)?)?;
    m.add_function(wrap_pyfunction!(dynamics, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
