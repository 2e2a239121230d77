//! Python bindings for the core evaluators: moments, power-kernel values,
//! strip generating functions, the width series, and the phase-diagram
//! classifier. Library errors surface as `ValueError`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use freeaw::asympt::{self, Density, Region};
use freeaw::functional::{self, Method};
use freeaw::gibbs;
use freeaw::moment::{self, AwParams};
use freeaw::LppConfig;

fn err(e: freeaw::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_params(vals: &[Complex64]) -> PyResult<AwParams> {
    AwParams::new(vals).map_err(err)
}

fn config(a: f64, c1: f64, c2: f64) -> PyResult<LppConfig> {
    LppConfig::new(a, c1, c2).map_err(err)
}

/// Library version string.
#[pyfunction]
fn version() -> &'static str {
    freeaw::VERSION
}

/// Moment of the n-th Chebyshev polynomial under the functional with the
/// given parameter tuple (up to four entries, conjugation-closed).
#[pyfunction]
fn moment_u(params: Vec<Complex64>, n: usize) -> PyResult<Complex64> {
    Ok(moment::moment_u(&parse_params(&params)?, n))
}

/// Value of the functional on the power kernel `h_v^{-n}`, with the
/// evaluation method and an error estimate.
#[pyfunction]
fn power_kernel_eval(
    py: Python<'_>,
    params: Vec<Complex64>,
    v: Complex64,
    n: u32,
) -> PyResult<Py<PyDict>> {
    let out = functional::power_kernel_eval(&parse_params(&params)?, v, n).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("value", out.value)?;
    d.set_item("est_error", out.est_error)?;
    d.set_item(
        "method",
        match out.method {
            Method::Contour => "contour",
            Method::Representation => "representation",
        },
    )?;
    Ok(d.unbind())
}

/// Limiting mean density of the strip as the width grows: the region name,
/// the predicted density (two entries on the coexistence diagonal, one
/// otherwise), and whether the point sits within tolerance of a boundary.
#[pyfunction]
fn phase_limit(py: Python<'_>, a: f64, c1: f64, c2: f64) -> PyResult<Py<PyDict>> {
    let r = asympt::phase_limit(a, c1, c2).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item(
        "region",
        match r.region {
            Region::MaxCurrent => "max-current",
            Region::LowDensity => "low-density",
            Region::HighDensity => "high-density",
            Region::Coexistence => "coexistence",
        },
    )?;
    let density = match r.density {
        Density::Point(x) => vec![x],
        Density::Mixture { low, high } => vec![low, high],
    };
    d.set_item("density", density)?;
    d.set_item("boundary", r.boundary)?;
    Ok(d.unbind())
}

/// Closed form of the generating series of strip generating functions in
/// the width variable `z`.
#[pyfunction]
fn series_in_z(a: f64, c1: f64, c2: f64, t: f64, z: f64) -> PyResult<f64> {
    asympt::series_in_z(&config(a, c1, c2)?, t, z).map_err(err)
}

/// Dynamic-program value of the ensemble generating function at the given
/// per-row times, truncated at `cap`, with a certified tail bound.
#[pyfunction]
fn gen_fn_truncated(
    py: Python<'_>,
    a: f64,
    c1: f64,
    c2: f64,
    ts: Vec<f64>,
    cap: u64,
) -> PyResult<Py<PyDict>> {
    let out = gibbs::gen_fn_truncated(&config(a, c1, c2)?, &ts, cap).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("value", out.value)?;
    d.set_item("tail_bound", out.tail_bound)?;
    Ok(d.unbind())
}

#[pymodule]
fn freeaw_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(moment_u, m)?)?;
    m.add_function(wrap_pyfunction!(power_kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(phase_limit, m)?)?;
    m.add_function(wrap_pyfunction!(series_in_z, m)?)?;
    m.add_function(wrap_pyfunction!(gen_fn_truncated, m)?)?;
    Ok(())
}
