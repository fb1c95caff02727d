//! Python bindings. Matrix-valued functions travel as nested lists
//! `samples[node][row][col]` of complex numbers on the uniform grid of `[0, T]`.

use accelerant::direct::DirectSolver;
use accelerant::error::Error;
use accelerant::inverse::reconstruct;
use accelerant::pseudo_exp::{pe_accelerant, pe_potential, random_triple, validate_triple, AdmissibleTriple};
use accelerant::verify::{verify_accelerant, verify_potential, verify_triple, Report};
use accelerant::{Accelerant, CMat, Grid, Potential};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Matrix = Vec<Vec<Complex64>>;
type Samples = Vec<Matrix>;

pyo3::create_exception!(accelerant_py, NotAccelerantError, PyValueError);
pyo3::create_exception!(accelerant_py, ValidationError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::NotPositive { .. } => NotAccelerantError::new_err(msg),
        Error::Validation { .. } | Error::NoConvergence { .. } => ValidationError::new_err(msg),
        Error::ExpOverflow { .. } | Error::Singular(_) | Error::SingularLead { .. } => PyArithmeticError::new_err(msg),
        Error::Io(_) => PyOSError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn matrix(rows: &[Vec<Complex64>]) -> PyResult<CMat> {
    let p = rows.len();
    let q = rows.first().map_or(0, Vec::len);
    if p == 0 || rows.iter().any(|row| row.len() != q) {
        return Err(PyValueError::new_err("matrix rows must be non-empty and of equal length"));
    }
    Ok(CMat::from_fn(p, q, |i, j| rows[i][j]))
}

fn rows(m: &CMat) -> Matrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn grid_for(samples: &Samples, t_end: f64) -> PyResult<(Grid, Vec<CMat>)> {
    if samples.len() < 2 {
        return Err(PyValueError::new_err("need at least two samples"));
    }
    let grid = Grid::new(t_end, samples.len() - 1).map_err(to_py)?;
    let mats = samples.iter().map(|s| matrix(s)).collect::<PyResult<_>>()?;
    Ok((grid, mats))
}

fn accelerant(samples: Samples, t_end: f64) -> PyResult<Accelerant> {
    let (grid, mats) = grid_for(&samples, t_end)?;
    Accelerant::new(grid, mats).map_err(to_py)
}

fn potential(samples: Samples, t_end: f64) -> PyResult<Potential> {
    let (grid, mats) = grid_for(&samples, t_end)?;
    Potential::new(grid, mats).map_err(to_py)
}

fn list(mats: &[CMat]) -> Samples {
    mats.iter().map(rows).collect()
}

/// Potential `v` on the grid of `k`. `k[0]` is the limit `k(0+)`.
#[pyfunction]
#[pyo3(signature = (k, t_end))]
fn potential_from_accelerant(k: Samples, t_end: f64) -> PyResult<Samples> {
    let k = accelerant(k, t_end)?;
    let v = accelerant::accelerant::potential_from_accelerant(&k).map_err(to_py)?;
    Ok(list(v.samples()))
}

/// Fundamental solution `u(x, z)` at every node, as `2r x 2r` matrices.
#[pyfunction]
#[pyo3(signature = (k, t_end, z))]
fn fundamental_solution(k: Samples, t_end: f64, z: Complex64) -> PyResult<Samples> {
    let k = accelerant(k, t_end)?;
    let u = DirectSolver::new(&k).and_then(|s| s.fundamental_solution(z)).map_err(to_py)?;
    Ok(list(u.samples()))
}

/// Accelerant recovered from `v`, with the diagnostics of the run.
#[pyfunction]
#[pyo3(signature = (v, t_end, tol = 1e-10, cross_check = false))]
fn accelerant_from_potential<'py>(
    py: Python<'py>,
    v: Samples,
    t_end: f64,
    tol: f64,
    cross_check: bool,
) -> PyResult<(Samples, Bound<'py, PyDict>)> {
    let v = potential(v, t_end)?;
    let rec = py.detach(|| reconstruct(&v, tol, cross_check)).map_err(to_py)?;
    let d = PyDict::new(py);
    let g = &rec.diagnostics;
    d.set_item("lambda_normalization", g.lambda_normalization)?;
    d.set_item("similarity", g.ea_le)?;
    d.set_item("st_displacement", g.st_displacement)?;
    d.set_item("roundtrip", g.roundtrip)?;
    d.set_item("positivity_margin", g.positivity_margin)?;
    d.set_item("neumann_terms", g.neumann_terms)?;
    d.set_item("term_norms", g.term_norms.clone())?;
    d.set_item("cross_check", g.cross_check)?;
    d.set_item("jump_at_zero", rec.k.jump().norm())?;
    Ok((list(rec.k.samples()), d))
}

fn triple(b: Matrix, phi1: Matrix, phi2: Matrix) -> PyResult<AdmissibleTriple> {
    validate_triple(matrix(&b)?, matrix(&phi1)?, matrix(&phi2)?).map_err(to_py)
}

/// Random admissible triple `(B, Phi1, Phi2)` of size `nn` and block size `r`.
#[pyfunction]
#[pyo3(signature = (nn, r, seed))]
fn random_admissible_triple(nn: usize, r: usize, seed: u64) -> PyResult<(Matrix, Matrix, Matrix)> {
    let t = random_triple(nn, r, seed).map_err(to_py)?;
    Ok((rows(t.b()), rows(t.phi1()), rows(t.phi2())))
}

/// Closed-form accelerant and potential of an admissible triple on `n + 1` nodes.
#[pyfunction]
#[pyo3(signature = (b, phi1, phi2, t_end, n))]
fn pseudo_exponential(
    b: Matrix,
    phi1: Matrix,
    phi2: Matrix,
    t_end: f64,
    n: usize,
) -> PyResult<(Samples, Samples)> {
    let t = triple(b, phi1, phi2)?;
    let grid = Grid::new(t_end, n).map_err(to_py)?;
    let k = pe_accelerant(&t, &grid).map_err(to_py)?;
    let v = pe_potential(&t, &grid).map_err(to_py)?;
    Ok((list(k.samples()), list(v.samples())))
}

fn checks(report: Report) -> Vec<(String, f64, f64, bool)> {
    report.checks.into_iter().map(|c| (c.name, c.residual, c.tolerance, c.passed)).collect()
}

/// Identity checks for an accelerant, as `(name, residual, tolerance, passed)`.
#[pyfunction]
#[pyo3(signature = (k, t_end, tol = 1e-10))]
fn verify_accelerant_samples(py: Python<'_>, k: Samples, t_end: f64, tol: f64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let k = accelerant(k, t_end)?;
    py.detach(|| verify_accelerant(&k, tol)).map(checks).map_err(to_py)
}

/// Identity checks for a potential.
#[pyfunction]
#[pyo3(signature = (v, t_end, tol = 1e-10))]
fn verify_potential_samples(py: Python<'_>, v: Samples, t_end: f64, tol: f64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let v = potential(v, t_end)?;
    py.detach(|| verify_potential(&v, tol)).map(checks).map_err(to_py)
}

/// Full check suite on the closed-form solution of a triple.
#[pyfunction]
#[pyo3(signature = (b, phi1, phi2, t_end, n, tol = 1e-10))]
fn verify_admissible_triple(
    py: Python<'_>,
    b: Matrix,
    phi1: Matrix,
    phi2: Matrix,
    t_end: f64,
    n: usize,
    tol: f64,
) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let t = triple(b, phi1, phi2)?;
    let grid = Grid::new(t_end, n).map_err(to_py)?;
    py.detach(|| verify_triple(&t, &grid, tol)).map(checks).map_err(to_py)
}

#[pymodule]
fn accelerant_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NotAccelerantError", m.py().get_type::<NotAccelerantError>())?;
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add_function(wrap_pyfunction!(potential_from_accelerant, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_solution, m)?)?;
    m.add_function(wrap_pyfunction!(accelerant_from_potential, m)?)?;
    m.add_function(wrap_pyfunction!(random_admissible_triple, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(verify_accelerant_samples, m)?)?;
    m.add_function(wrap_pyfunction!(verify_potential_samples, m)?)?;
    m.add_function(wrap_pyfunction!(verify_admissible_triple, m)?)?;
    Ok(())
}
