//! Python bindings: states, QFI evaluation, see-saw optimizers, the moment relaxation and
//! the CCNR search. Matrices cross the boundary as nested lists of Python complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qfiopt::linalg::{realign, trace_norm};
use qfiopt::optimizers::{ccnr_max_ppt, gain_global, seesaw_qfi_local, seesaw_wy_local, GainConfig, SeesawConfig};
use qfiopt::sdp::{shor_level1, ConstraintMode, RelaxationConfig, TracePinning};
use qfiopt::states::{self, Membership};
use qfiopt::{BipartiteDims, CMatrix, Error, LocalHamiltonian};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Solver(_) | Error::EigenNonConvergence | Error::SvdNonConvergence => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A validated bipartite density matrix.
#[pyclass(name = "DensityMatrix", frozen)]
struct PyDensityMatrix {
    inner: qfiopt::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>, dims: (usize, usize)) -> PyResult<Self> {
        let dims = BipartiteDims::new(dims.0, dims.1).map_err(py_err)?;
        let inner = qfiopt::DensityMatrix::bipartite(from_rows(matrix)?, dims).map_err(py_err)?;
        Ok(PyDensityMatrix { inner })
    }

    /// Built-in state from a `name:param:...` descriptor, e.g. `isotropic:0.1:2`.
    #[staticmethod]
    fn builtin(spec: &str) -> PyResult<Self> {
        Ok(PyDensityMatrix { inner: states::builtin(spec).map_err(py_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyDensityMatrix { inner: states::load_state(path).map_err(py_err)? })
    }

    #[pyo3(signature = (path, label=None))]
    fn save(&self, path: &str, label: Option<&str>) -> PyResult<()> {
        states::save_state(&self.inner, label, path).map_err(py_err)
    }

    #[getter]
    fn dims(&self) -> Option<(usize, usize)> {
        self.inner.dims().map(|d| (d.d1, d.d2))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Eigenvalues in decreasing order.
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.matrix())
    }

    fn ppt_min_eigenvalue(&self) -> PyResult<f64> {
        states::ppt_min_eigenvalue(&self.inner).map_err(py_err)
    }

    fn realigned_trace_norm(&self) -> PyResult<f64> {
        let dims = self.inner.require_dims().map_err(py_err)?;
        trace_norm(&realign(self.inner.matrix(), dims).map_err(py_err)?).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        match self.inner.dims() {
            Some(d) => format!("DensityMatrix(dims=({}, {}))", d.d1, d.d2),
            None => format!("DensityMatrix(dim={})", self.inner.dim()),
        }
    }
}

/// Quantum Fisher information of `rho` for the Hamiltonian `h` on the full space.
#[pyfunction]
fn qfi(rho: &PyDensityMatrix, h: Vec<Vec<Complex64>>) -> PyResult<f64> {
    qfiopt::metrology::qfi(&rho.inner, &from_rows(h)?).map_err(py_err)
}

/// Wigner-Yanase skew information.
#[pyfunction]
fn wy_skew(rho: &PyDensityMatrix, h: Vec<Vec<Complex64>>) -> PyResult<f64> {
    qfiopt::metrology::wy_skew(&rho.inner, &from_rows(h)?).map_err(py_err)
}

fn seesaw_config(restarts: usize, max_iters: usize, tol: f64, seed: u64, caps: (f64, f64)) -> PyResult<SeesawConfig> {
    let config = SeesawConfig { restarts, max_iters, tol, seed, caps };
    config.validate().map_err(py_err)?;
    Ok(config)
}

fn hamiltonian_dict<'py>(py: Python<'py>, h: &LocalHamiltonian) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("h1", to_rows(h.h1.matrix()))?;
    d.set_item("h2", to_rows(h.h2.matrix()))?;
    d.set_item("caps", h.caps)?;
    Ok(d)
}

/// Maximal QFI over local Hamiltonians with caps `(c1, c2)`, and the gain it attains.
#[pyfunction]
#[pyo3(signature = (rho, c1=1.0, c2=1.0, restarts=50, max_iters=500, tol=1e-9, seed=0))]
#[allow(clippy::too_many_arguments)]
fn max_qfi<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
    c1: f64,
    c2: f64,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = seesaw_config(restarts, max_iters, tol, seed, (c1, c2))?;
    let run = py.detach(|| seesaw_qfi_local(&rho.inner, &config)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("qfi", run.best_value)?;
    d.set_item("gain", qfiopt::metrology::gain_for(&rho.inner, &run.best_argument).map_err(py_err)?)?;
    d.set_item("hamiltonian", hamiltonian_dict(py, &run.best_argument)?)?;
    d.set_item("restart_values", run.restart_values)?;
    d.set_item("converged", run.converged)?;
    Ok(d)
}

/// Maximal `4 I_wy` over local Hamiltonians with caps `(c1, c2)`.
#[pyfunction]
#[pyo3(signature = (rho, c1=1.0, c2=1.0, restarts=50, max_iters=500, tol=1e-9, seed=0))]
#[allow(clippy::too_many_arguments)]
fn max_wy<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
    c1: f64,
    c2: f64,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = seesaw_config(restarts, max_iters, tol, seed, (c1, c2))?;
    let run = py.detach(|| seesaw_wy_local(&rho.inner, &config)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("four_wy", run.best_value)?;
    d.set_item("hamiltonian", hamiltonian_dict(py, &run.best_argument)?)?;
    d.set_item("converged", run.converged)?;
    Ok(d)
}

/// Metrological gain maximized over Hamiltonians and the cap ratio.
#[pyfunction]
#[pyo3(signature = (rho, restarts=50, max_iters=500, tol=1e-9, seed=0, grid=33, refine_width=1e-4))]
#[allow(clippy::too_many_arguments)]
fn max_gain<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
    grid: usize,
    refine_width: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = seesaw_config(restarts, max_iters, tol, seed, (1.0, 1.0))?;
    let gc = GainConfig { grid, refine_width };
    let r = py.detach(|| gain_global(&rho.inner, &config, &gc)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("gain", r.value)?;
    d.set_item("qfi", r.qfi)?;
    d.set_item("sep_bound", r.sep_bound)?;
    d.set_item("theta", r.theta)?;
    d.set_item("hamiltonian", hamiltonian_dict(py, &r.optimal_hamiltonian)?)?;
    Ok(d)
}

/// Level-1 moment relaxation bound. `pinning` is `None`, `"scan"` or a pair `(m1, m2)`.
#[pyfunction]
#[pyo3(signature = (rho, caps=(1.0, 1.0), mode="eig", pinning=None))]
fn relax<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
    caps: (f64, f64),
    mode: &str,
    pinning: Option<Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match mode {
        "eig" => ConstraintMode::Eig,
        "sum" => ConstraintMode::Sum,
        "trace" => ConstraintMode::Trace,
        other => return Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    };
    let pinning = match pinning {
        None => TracePinning::Off,
        Some(p) if p.extract::<String>().is_ok_and(|s| s == "scan") => TracePinning::Scan,
        Some(p) => {
            let (m1, m2): (i32, i32) = p.extract()?;
            TracePinning::Fixed(m1, m2)
        }
    };
    let config = RelaxationConfig { caps, mode, pinning, ..RelaxationConfig::default() };
    let r = py.detach(|| shor_level1(&rho.inner, &config)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("upper_bound", r.upper_bound)?;
    d.set_item("status", r.status.to_string())?;
    d.set_item("tight", r.tight)?;
    d.set_item("rank_one", r.rank_one)?;
    match &r.extracted {
        Some(e) => {
            d.set_item("extracted_value", e.value)?;
            d.set_item("extracted_hamiltonian", hamiltonian_dict(py, &e.hamiltonian)?)?;
        }
        None => {
            d.set_item("extracted_value", py.None())?;
            d.set_item("extracted_hamiltonian", py.None())?;
        }
    }
    Ok(d)
}

/// Maximal realigned trace norm over PPT states of a `d1 x d2` system.
#[pyfunction]
#[pyo3(signature = (d1, d2, restarts=50, max_iters=500, tol=1e-9, seed=0))]
fn ccnr_max<'py>(
    py: Python<'py>,
    d1: usize,
    d2: usize,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let dims = BipartiteDims::new(d1, d2).map_err(py_err)?;
    let config = seesaw_config(restarts, max_iters, tol, seed, (1.0, 1.0))?;
    let run = py.detach(|| ccnr_max_ppt(dims, &config)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("trace_norm", run.best_value)?;
    d.set_item("state", PyDensityMatrix { inner: run.best_argument })?;
    d.set_item("converged", run.converged)?;
    Ok(d)
}

/// Test for `p rho1 (x) 1/d2 + (1 - p) 1/d1 (x) rho2`; returns the admissible p interval too.
#[pyfunction]
fn special_separable<'py>(py: Python<'py>, rho: &PyDensityMatrix) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match states::special_separable_membership(&rho.inner).map_err(py_err)? {
        Membership::Member(dec) => {
            d.set_item("member", true)?;
            d.set_item("p", dec.p)?;
            d.set_item("p_interval", dec.p_bounds)?;
        }
        Membership::NotMember { p_bounds, .. } => {
            d.set_item("member", false)?;
            d.set_item("p", py.None())?;
            d.set_item("p_interval", p_bounds)?;
        }
    }
    Ok(d)
}

#[pymodule(name = "qfiopt")]
fn qfiopt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_function(wrap_pyfunction!(qfi, m)?)?;
    m.add_function(wrap_pyfunction!(wy_skew, m)?)?;
    m.add_function(wrap_pyfunction!(max_qfi, m)?)?;
    m.add_function(wrap_pyfunction!(max_wy, m)?)?;
    m.add_function(wrap_pyfunction!(max_gain, m)?)?;
    m.add_function(wrap_pyfunction!(relax, m)?)?;
    m.add_function(wrap_pyfunction!(ccnr_max, m)?)?;
    m.add_function(wrap_pyfunction!(special_separable, m)?)?;
    Ok(())
}
