//! Python bindings for `mccm`.

use mccm::cascade::{self, CascadeField};
use mccm::regimes;
use mccm::spectrum as fourier;
use mccm::weights;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Law of the cascade weight.
#[pyclass(name = "WeightModel", module = "pymccm", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyWeightModel {
    inner: weights::WeightModel,
}

#[pymethods]
impl PyWeightModel {
    #[staticmethod]
    fn lognormal(sigma: f64) -> PyResult<Self> {
        Ok(Self { inner: weights::WeightModel::lognormal(sigma).map_err(value_err)? })
    }

    #[staticmethod]
    fn two_point(x: f64) -> PyResult<Self> {
        Ok(Self { inner: weights::WeightModel::two_point(x).map_err(value_err)? })
    }

    /// `atoms` is a list of `(value, probability)` pairs.
    #[staticmethod]
    fn discrete(atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: weights::WeightModel::discrete(atoms).map_err(value_err)? })
    }

    /// `E[W^t]`.
    fn moment(&self, t: f64) -> f64 {
        self.inner.moment(t)
    }

    fn __repr__(&self) -> String {
        format!("WeightModel({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

/// A weight law together with the branching base `b`.
#[pyclass(name = "ModelSpec", module = "pymccm", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModelSpec {
    inner: weights::ModelSpec,
}

#[pymethods]
impl PyModelSpec {
    #[new]
    fn new(weight: &PyWeightModel, b: u32) -> PyResult<Self> {
        Ok(Self { inner: weights::ModelSpec::new(weight.inner.clone(), b).map_err(value_err)? })
    }

    #[getter]
    fn b(&self) -> u32 {
        self.inner.b
    }

    #[getter]
    fn weight(&self) -> PyWeightModel {
        PyWeightModel { inner: self.inner.weight.clone() }
    }

    fn hausdorff_dimension(&self) -> PyResult<f64> {
        regimes::hausdorff_dimension(&self.inner).map_err(runtime_err)
    }

    fn fourier_dimension(&self) -> PyResult<f64> {
        regimes::fourier_dimension(&self.inner).map_err(runtime_err)
    }

    /// The closed-form report as a dict. Missing values are `None`.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = regimes::report_record(&self.inner).map_err(runtime_err)?;
        let regime = serde_json::to_value(r.regime).map_err(runtime_err)?;
        let d = PyDict::new(py);
        d.set_item("d_h", r.d_h)?;
        d.set_item("d_f", r.d_f)?;
        d.set_item("regime", regime.as_str().unwrap_or_default())?;
        d.set_item("salem", r.salem)?;
        d.set_item("beta", r.beta)?;
        d.set_item("psi_beta", r.psi_beta)?;
        d.set_item("varrho", r.varrho)?;
        d.set_item("varpi", r.varpi)?;
        d.set_item("nondegenerate", r.nondegenerate)?;
        d.set_item("lattice", r.lattice)?;
        Ok(d)
    }

    /// `E|mu_hat(s)|^2`, summed to `depth` or to convergence when `depth` is `None`.
    #[pyo3(signature = (s, depth=None))]
    fn second_moment(&self, s: u64, depth: Option<u32>) -> PyResult<f64> {
        regimes::second_moment_series(&self.inner, s, depth, 1e-14).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!("ModelSpec({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

/// One realization of the cascade at finite depth.
#[pyclass(name = "CascadeField", module = "pymccm", frozen, skip_from_py_object)]
pub struct PyCascadeField {
    inner: CascadeField,
}

#[pymethods]
impl PyCascadeField {
    #[getter]
    fn depth(&self) -> u32 {
        self.inner.depth
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses.clone()
    }

    fn total_mass(&self) -> f64 {
        cascade::total_mass(&self.inner)
    }

    /// The same realization `extra` levels deeper.
    fn refine(&self, py: Python<'_>, extra: u32) -> PyResult<Self> {
        let f = py.detach(|| cascade::refine(&self.inner, extra)).map_err(value_err)?;
        Ok(Self { inner: f })
    }

    /// `mu_hat(s)` for `s = 0..=kmax`.
    fn spectrum(&self, py: Python<'_>, kmax: u64) -> Vec<Complex64> {
        py.detach(|| fourier::fourier_all(&self.inner, kmax).coeffs)
    }

    fn __len__(&self) -> usize {
        self.inner.masses.len()
    }
}

/// Samples the depth-`depth` field of the realization keyed by `seed`.
#[pyfunction]
#[pyo3(signature = (spec, depth, seed=0))]
fn sample_field(py: Python<'_>, spec: &PyModelSpec, depth: u32, seed: u64) -> PyResult<PyCascadeField> {
    let f = py
        .detach(|| cascade::sample_field(&spec.inner, depth, seed, None))
        .map_err(value_err)?;
    Ok(PyCascadeField { inner: f })
}

/// Shortcut for `sample_field(spec, depth, seed).spectrum(kmax)`.
#[pyfunction]
#[pyo3(signature = (spec, depth, kmax, seed=0))]
fn spectrum(py: Python<'_>, spec: &PyModelSpec, depth: u32, kmax: u64, seed: u64) -> PyResult<Vec<Complex64>> {
    py.detach(|| {
        let f = cascade::sample_field(&spec.inner, depth, seed, None)?;
        Ok::<_, cascade::CascadeError>(fourier::fourier_all(&f, kmax).coeffs)
    })
    .map_err(value_err)
}

#[pymodule]
fn pymccm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeightModel>()?;
    m.add_class::<PyModelSpec>()?;
    m.add_class::<PyCascadeField>()?;
    m.add_function(wrap_pyfunction!(sample_field, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
