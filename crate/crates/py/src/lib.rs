//! Python bindings for `sbnet`.
//!
//! Kernels and networks are wrapped as classes; reports and plans come back
//! as plain dicts.

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use sbnet::bitspace::{self, BitVec};
use sbnet::construct::{self, Schedule, Variant};
use sbnet::netcore;
use sbnet::verify::{self, Mode};

fn err(e: sbnet::Error) -> PyErr {
    match e {
        sbnet::Error::OutOfRange(_) | sbnet::Error::Capacity(_) => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn bits(v: Vec<u8>) -> PyResult<BitVec> {
    BitVec::new(v).map_err(err)
}

// Vec<u8> would come back as `bytes`
fn to_list(v: &BitVec) -> Vec<u32> {
    v.bits().iter().map(|&b| b as u32).collect()
}

/// Row-stochastic matrix, rows indexed by input, columns by output.
#[pyclass(module = "sbnet_py", name = "Kernel", frozen)]
struct PyKernel(netcore::Kernel);

#[pymethods]
impl PyKernel {
    #[new]
    fn new(d: usize, s: usize, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        netcore::Kernel::new(d, s, rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn uniform(d: usize, s: usize) -> Self {
        Self(netcore::Kernel::uniform(d, s))
    }

    /// Dirichlet(1) rows from a seed.
    #[staticmethod]
    fn random(d: usize, s: usize, seed: u64) -> Self {
        Self(verify::random_kernel(d, s, seed))
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        netcore::Kernel::from_json(s).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn s(&self) -> usize {
        self.0.s()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.0.rows().len() || y >= self.0.row(0).len() {
            return Err(PyIndexError::new_err("kernel index out of range"));
        }
        Ok(self.0.get(x, y))
    }

    fn compose(&self, next: &PyKernel) -> PyResult<Self> {
        self.0.compose(&next.0).map(Self).map_err(err)
    }

    fn clamp(&self, eps: f64) -> PyResult<Self> {
        verify::clamp_to_eps(&self.0, eps).map(Self).map_err(err)
    }

    fn max_abs_error(&self, other: &PyKernel) -> PyResult<f64> {
        verify::max_abs_error(&self.0, &other.0).map_err(err)
    }

    /// Mutual information in bits under the given input distribution.
    fn mutual_information(&self, input: Vec<f64>) -> PyResult<f64> {
        let joint = self.0.joint(&input).map_err(err)?;
        netcore::mutual_information(&joint).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Kernel(d={}, s={})", self.0.d(), self.0.s())
    }
}

/// Layered sigmoid belief network.
#[pyclass(module = "sbnet_py", name = "Network", frozen)]
struct PyNetwork(netcore::Network);

#[pymethods]
impl PyNetwork {
    /// `layers` is a list of `(weights, biases)` pairs, weights as rows per unit.
    #[new]
    fn new(d: usize, layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>) -> PyResult<Self> {
        let layers = layers
            .into_iter()
            .map(|(w, b)| netcore::Layer::new(w, b))
            .collect::<sbnet::Result<Vec<_>>>()
            .map_err(err)?;
        netcore::Network::new(d, layers).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        netcore::Network::from_json(s).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn s(&self) -> usize {
        self.0.s()
    }

    #[getter]
    fn hidden_widths(&self) -> Vec<usize> {
        self.0.hidden_widths()
    }

    #[getter]
    fn unit_count(&self) -> usize {
        self.0.unit_count()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.0.param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.0.params()
    }

    /// Exact kernel by layer-wise propagation.
    fn kernel(&self, py: Python<'_>) -> PyResult<PyKernel> {
        let net = self.0.clone();
        py.detach(move || netcore::network_kernel(&net)).map(PyKernel).map_err(err)
    }

    fn kernel_bruteforce(&self) -> PyResult<PyKernel> {
        netcore::network_kernel_bruteforce(&self.0).map(PyKernel).map_err(err)
    }

    /// Output counts indexed by output state, for input bits `x` (first bit first).
    #[pyo3(signature = (x, n, seed=0))]
    fn sample(&self, py: Python<'_>, x: Vec<u8>, n: u64, seed: u64) -> PyResult<Vec<u64>> {
        let x = bits(x)?;
        let net = self.0.clone();
        py.detach(move || netcore::sample(&net, &x, n, seed)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Network(d={}, hidden={:?}, s={})", self.0.d(), self.0.hidden_widths(), self.0.s())
    }
}

fn parse<T: std::str::FromStr<Err = sbnet::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (target, j, eps, schedule="simplified"))]
fn build_deep(target: &PyKernel, j: usize, eps: f64, schedule: &str) -> PyResult<PyNetwork> {
    let schedule: Schedule = parse(schedule)?;
    construct::build_deep(&target.0, j, eps, schedule).map(PyNetwork).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (target, eps, scale=construct::DEFAULT_SCALE))]
fn build_shallow_fixed(target: &PyKernel, eps: f64, scale: f64) -> PyResult<PyNetwork> {
    construct::build_shallow_fixed(&target.0, eps, scale).map(PyNetwork).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (target, eps, scale=construct::DEFAULT_SCALE, variant=None))]
fn build_shallow_trainable(target: &PyKernel, eps: f64, scale: f64, variant: Option<&str>) -> PyResult<PyNetwork> {
    let variant = match variant {
        Some(v) => parse(v)?,
        None => Variant::default_for(target.0.d()),
    };
    construct::build_shallow_trainable(&target.0, eps, scale, variant).map(PyNetwork).map_err(err)
}

#[pyfunction]
fn plan(py: Python<'_>, d: usize, s: usize, j: usize) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &construct::plan(d, s, j).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (d, s, hidden_widths, param_count=None))]
fn validate_arch(py: Python<'_>, d: usize, s: usize, hidden_widths: Vec<usize>, param_count: Option<usize>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &construct::validate_arch(d, s, &hidden_widths, param_count))
}

#[pyfunction]
fn error_bound(eps: f64, n: usize) -> PyResult<f64> {
    construct::error_bound(eps, n).map_err(err)
}

#[pyfunction]
fn alpha_for_eps(eps: f64, m: usize) -> PyResult<f64> {
    construct::alpha_for_eps(eps, m).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (trials=500, eps=None, seed=0, mode="exact", samples=25_000))]
fn table8<'py>(py: Python<'py>, trials: usize, eps: Option<Vec<f64>>, seed: u64, mode: &str, samples: u64) -> PyResult<Bound<'py, PyAny>> {
    let mode: Mode = parse(mode)?;
    let eps = eps.unwrap_or_else(|| verify::TABLE8_EPS.to_vec());
    let rows = py.detach(move || verify::table8(trials, &eps, seed, mode, samples)).map_err(err)?;
    to_py(py, &rows)
}

#[pyfunction]
fn dec(bits_: Vec<u8>) -> PyResult<u64> {
    Ok(bitspace::dec(&bits(bits_)?))
}

#[pyfunction]
fn bin(k: u64, n: usize) -> PyResult<Vec<u32>> {
    bitspace::bin(k, n).map(|v| to_list(&v)).map_err(err)
}

#[pyfunction]
fn sharing_code(s: usize) -> PyResult<Vec<Vec<u32>>> {
    let code = bitspace::sharing_code(s).map_err(err)?;
    Ok(code.entries.iter().map(to_list).collect())
}

#[pyfunction]
fn partial_codes(m: usize, b: usize) -> PyResult<Vec<Vec<Vec<u32>>>> {
    let set = bitspace::partial_codes(m, b).map_err(err)?;
    Ok(set.codes.iter().map(|c| c.iter().map(to_list).collect()).collect())
}

#[pymodule]
fn sbnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(build_deep, m)?)?;
    m.add_function(wrap_pyfunction!(build_shallow_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(build_shallow_trainable, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(validate_arch, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_for_eps, m)?)?;
    m.add_function(wrap_pyfunction!(table8, m)?)?;
    m.add_function(wrap_pyfunction!(dec, m)?)?;
    m.add_function(wrap_pyfunction!(bin, m)?)?;
    m.add_function(wrap_pyfunction!(sharing_code, m)?)?;
    m.add_function(wrap_pyfunction!(partial_codes, m)?)?;
    Ok(())
}
