//! Python bindings. Reports come back as plain dicts and lists.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use cc_index::census::{census, CensusOptions};
use cc_index::cli::{analyze_configuration, topology_report};
use cc_index::geometry::{self, Configuration, MassSystem};
use cc_index::index::{self, morse_data, verify_theorem};
use cc_index::io::CensusRecord;
use cc_index::potential::{mass_gradient, potential};
use cc_index::solver::{cc_residual, classify, newton_solve, Group, NewtonOptions};
use cc_index::topology::{self, DegreeCase};
use cc_index::CcError;

fn err(e: CcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_group(group: &str) -> PyResult<Group> {
    group.parse().map_err(|_| PyValueError::new_err(format!("group must be 'SO' or 'O', got {group:?}")))
}

/// Masses (normalized to sum 1), ambient dimension `d` and exponent `alpha`.
#[pyclass(name = "MassSystem", frozen, module = "ccindex")]
struct PyMassSystem {
    inner: Arc<MassSystem>,
}

#[pymethods]
impl PyMassSystem {
    #[new]
    #[pyo3(signature = (masses, d, alpha = 1.0))]
    fn new(masses: Vec<f64>, d: usize, alpha: f64) -> PyResult<Self> {
        let inner = MassSystem::normalized(masses, d, alpha).map_err(err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("MassSystem(masses={:?}, d={}, alpha={})", self.inner.masses(), self.inner.d(), self.inner.alpha())
    }
}

/// `n` points in `R^d` for a given mass system.
#[pyclass(name = "Configuration", frozen, module = "ccindex")]
struct PyConfiguration {
    inner: Configuration,
}

impl PyConfiguration {
    fn wrap(inner: Configuration) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyConfiguration {
    #[new]
    fn new(system: PyRef<'_, PyMassSystem>, points: Vec<Vec<f64>>) -> PyResult<Self> {
        Configuration::from_points(system.inner.clone(), &points).map(Self::wrap).map_err(err)
    }

    #[getter]
    fn system(&self) -> PyMassSystem {
        PyMassSystem { inner: self.inner.system_arc().clone() }
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points()
    }

    fn min_distance(&self) -> f64 {
        self.inner.min_distance()
    }

    fn mass_norm(&self) -> f64 {
        self.inner.mass_norm()
    }

    /// Centered copy on the unit inertia ellipsoid.
    fn center_and_normalize(&self) -> PyResult<Self> {
        geometry::center_and_normalize(&self.inner).map(Self::wrap).map_err(err)
    }

    fn potential(&self) -> PyResult<f64> {
        potential(&self.inner).map_err(err)
    }

    fn mass_gradient(&self) -> PyResult<Vec<f64>> {
        mass_gradient(&self.inner).map(|g| g.as_slice().to_vec()).map_err(err)
    }

    /// `(residual vector, mass norm)` of `dU# - lambda q` with `lambda = -alpha U`.
    fn cc_residual(&self) -> PyResult<(Vec<f64>, f64)> {
        cc_residual(&self.inner).map(|(r, norm)| (r.as_slice().to_vec(), norm)).map_err(err)
    }

    /// Requires a centered, normalized start (see `center_and_normalize`).
    #[pyo3(signature = (tol = 1e-12, max_iter = 200))]
    fn newton_solve<'py>(&self, py: Python<'py>, tol: f64, max_iter: usize) -> PyResult<Bound<'py, PyDict>> {
        let opts = NewtonOptions { tol_residual: tol, max_iter, ..NewtonOptions::default() };
        let c = newton_solve(&self.inner, &opts).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("configuration", Py::new(py, Self::wrap(c.q))?)?;
        out.set_item("lambda", c.lambda)?;
        out.set_item("residual_norm", c.residual_norm)?;
        out.set_item("converged", c.converged)?;
        out.set_item("iterations", c.iterations)?;
        Ok(out)
    }

    fn morse_data<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &morse_data(&self.inner).map_err(err)?)
    }

    fn fixed_point_index<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &index::fixed_point_index(&self.inner).map_err(err)?)
    }

    fn verify_theorem<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_theorem(&self.inner).map_err(err)?)
    }

    #[pyo3(signature = (group = "SO"))]
    fn classify<'py>(&self, py: Python<'py>, group: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &classify(&self.inner, parse_group(group)?))
    }
}

/// Multistart census; one dict per isometry class.
#[pyfunction(name = "census")]
#[pyo3(signature = (system, n_starts = 1000, seed = 42, group = "SO"))]
fn py_census<'py>(
    py: Python<'py>,
    system: PyRef<'_, PyMassSystem>,
    n_starts: usize,
    seed: u64,
    group: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = CensusOptions::new(parse_group(group)?, n_starts, seed);
    let sys = system.inner.clone();
    let entries = py.detach(|| census(&sys, &opts)).map_err(err)?;
    let records: Vec<CensusRecord> = entries.iter().map(CensusRecord::from).collect();
    to_py(py, &records)
}

/// Full report at the given points (centered and normalized first).
#[pyfunction]
fn analyze<'py>(py: Python<'py>, system: PyRef<'_, PyMassSystem>, points: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &analyze_configuration(&system.inner, &points).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, d, max_degree = 8))]
fn topology_table<'py>(py: Python<'py>, n: usize, d: usize, max_degree: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &topology_report(n, d, max_degree))
}

#[pyfunction]
fn poincare_configuration(n: usize, d: usize) -> PyResult<Vec<i64>> {
    topology::poincare_configuration(n, d).map(|p| p.coefficients().to_vec()).map_err(err)
}

#[pyfunction]
fn poincare_planar_quotient(n: usize) -> PyResult<Vec<i64>> {
    topology::poincare_planar_quotient(n).map(|p| p.coefficients().to_vec()).map_err(err)
}

#[pyfunction]
fn mccord_m_dimensions(n: usize) -> PyResult<Vec<i64>> {
    topology::mccord_m_dimensions(n).map_err(err)
}

#[pyfunction]
fn pacella_series(n: usize, max_degree: usize) -> PyResult<Vec<i64>> {
    topology::pacella_series(n, max_degree).map(|p| p.truncated(max_degree)).map_err(err)
}

#[pyfunction]
fn dim_maximal_orbit_manifold(n: usize, d: usize) -> i64 {
    topology::dim_maximal_orbit_manifold(n, d)
}

/// `case` is `"circle"`, `"complex_projective_line"` or `"none"`.
#[pyfunction]
#[pyo3(signature = (indices, case = "none"))]
fn lefschetz_and_degree(indices: Vec<i32>, case: &str) -> PyResult<(i64, Option<i64>)> {
    let case = match case {
        "circle" => DegreeCase::Circle,
        "complex_projective_line" => DegreeCase::ComplexProjectiveLine,
        "none" => DegreeCase::None,
        other => return Err(PyValueError::new_err(format!("unknown case {other:?}"))),
    };
    Ok(topology::lefschetz_and_degree(&indices, case))
}

#[pymodule]
fn ccindex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMassSystem>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_function(wrap_pyfunction!(py_census, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(topology_table, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_configuration, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_planar_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(mccord_m_dimensions, m)?)?;
    m.add_function(wrap_pyfunction!(pacella_series, m)?)?;
    m.add_function(wrap_pyfunction!(dim_maximal_orbit_manifold, m)?)?;
    m.add_function(wrap_pyfunction!(lefschetz_and_degree, m)?)?;
    Ok(())
}
