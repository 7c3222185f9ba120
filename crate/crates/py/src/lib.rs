//! Thin Python wrappers over the `bbl` routines.

use bbl::base::{CylPoint, TimeWindow, Tolerances};
use bbl::kernels::{BoundFamily, FamilyId};
use bbl::BblError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::{BTreeMap, HashMap};

fn py_err(e: BblError) -> PyErr {
    match e {
        BblError::InvalidArgument(_) | BblError::Config(_) | BblError::PastBlowup { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Runs a verification suite; rows are `(check, residual, tolerance, passed)`.
#[pyfunction]
#[pyo3(signature = (suite, seed = 7, tol_scale = 1.0))]
fn verify(py: Python<'_>, suite: &str, seed: u64, tol_scale: f64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let tol = Tolerances::default().scaled(tol_scale);
    let rows = py.detach(|| bbl::cli::verify::run_suite(suite, seed, &tol)).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| { let p = r.passed(); (r.check, r.residual, r.tolerance, p) }).collect())
}

/// Negative eigenvalue, spectral gap and fitted decay rate.
#[pyfunction]
#[pyo3(signature = (n = 5, radius = 40.0, grid = 0.4))]
fn lambda0(py: Python<'_>, n: usize, radius: f64, grid: f64) -> PyResult<HashMap<String, f64>> {
    let res = py
        .detach(|| -> bbl::Result<_> {
            let g = bbl::eigensolver::EigenGrid::graded(radius, 0.1 * grid, 1.1, grid)?;
            bbl::eigensolver::solve_lambda0(n, &g, &Tolerances::default())
        })
        .map_err(py_err)?;
    Ok(HashMap::from([("lambda0".into(), res.lambda0), ("gap".into(), res.gap), ("decay_rate".into(), res.decay_rate)]))
}

/// The scale constant `A_R`.
#[pyfunction]
#[pyo3(signature = (r_cut, n = 5))]
fn compute_ar(r_cut: f64, n: usize) -> PyResult<f64> {
    bbl::modulation::compute_ar(r_cut, n, &Tolerances::default()).map_err(py_err)
}

/// Leading scale `mu_0(t)` for a bubble of order `l` blowing up at `T`.
#[pyfunction]
#[pyo3(signature = (l, big_t, t, r_cut = None, n = 5))]
fn mu0(l: u32, big_t: f64, t: f64, r_cut: Option<f64>, n: usize) -> PyResult<f64> {
    let p = bbl::modulation::ModulationParams::new(l, big_t, r_cut, n, &Tolerances::default()).map_err(py_err)?;
    bbl::modulation::mu0(&p, t).map_err(py_err)
}

/// Caloric polynomial `Theta_l` at `(r, xn)` and time `t` before `T`.
#[pyfunction]
#[pyo3(signature = (l, r, xn, big_t, t, n = 5))]
fn theta(l: u32, r: f64, xn: f64, big_t: f64, t: f64, n: usize) -> PyResult<f64> {
    let x = CylPoint::new(r, xn, n).map_err(py_err)?;
    let w = TimeWindow::new(big_t, t).map_err(py_err)?;
    bbl::spectral::theta(l, x, w).map_err(py_err)
}

/// Self-similar constant of the type-I profile.
#[pyfunction]
fn c_alpha_p(alpha: f64, p: f64) -> PyResult<f64> {
    bbl::simulator::c_alpha_p(alpha, p, &Tolerances::default()).map_err(py_err)
}

/// Blow-up rate fit `sup u ~ A (T - t)^exponent`.
#[pyfunction]
#[pyo3(signature = (t, sup, window_fraction = 0.05))]
fn fit_rate(t: Vec<f64>, sup: Vec<f64>, window_fraction: f64) -> PyResult<HashMap<String, f64>> {
    let f = bbl::simulator::fit_rate(&t, &sup, window_fraction).map_err(py_err)?;
    Ok(HashMap::from([("T_est".into(), f.t_est), ("exponent".into(), f.exponent), ("prefactor".into(), f.prefactor), ("r2".into(), f.r2)]))
}

/// Sup ratio of a bound family over seeded samples.
#[pyfunction]
#[pyo3(signature = (family, params = None, samples = 50, seed = 7, n = 5))]
fn bound_ratio(family: &str, params: Option<BTreeMap<String, f64>>, samples: usize, seed: u64, n: usize) -> PyResult<f64> {
    let id = match family {
        "beyond_neumann" => FamilyId::BeyondNeumann,
        "neumann_selfsim" => FamilyId::NeumannSelfsim,
        "neumann_outside" => FamilyId::NeumannOutside,
        "rhs_selfsim" => FamilyId::RhsSelfsim,
        _ => return Err(PyValueError::new_err(format!("unknown family '{family}'"))),
    };
    let fam = BoundFamily { family_id: id, params: params.unwrap_or_default() };
    Ok(bbl::kernels::bound_ratio(&fam, n, samples, seed).map_err(py_err)?.sup_ratio)
}

#[pymodule]
fn bbl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(lambda0, m)?)?;
    m.add_function(wrap_pyfunction!(compute_ar, m)?)?;
    m.add_function(wrap_pyfunction!(mu0, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(c_alpha_p, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(bound_ratio, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
