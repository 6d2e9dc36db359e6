//! Python bindings for the statevector lab.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use uvqnhe_core::ansatz::{ansatz_state, AnsatzSpec};
use uvqnhe_core::diagnostics::{self, RenyiOrder};
use uvqnhe_core::estimators;
use uvqnhe_core::experiments::{self, ExperimentRecipe, RecipeName};
use uvqnhe_core::groundtruth;
use uvqnhe_core::neural::{Activation, OutputMode};
use uvqnhe_core::pauli::{build_tfim, exact_expectation, Boundary, PauliString};
use uvqnhe_core::rng::stream_rng;
use uvqnhe_core::simulator::{self, CircuitTag};
use uvqnhe_core::training::{self, PostProcessing};
use uvqnhe_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NoConvergence { .. } | Error::DegenerateDenominator => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serializable value into plain Python objects.
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_python(py, &text)
}

fn json_to_python<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn boundary(periodic: bool) -> Boundary {
    if periodic {
        Boundary::Periodic
    } else {
        Boundary::Open
    }
}

#[pyclass(name = "Hamiltonian", module = "uvqnhe", skip_from_py_object)]
#[derive(Clone)]
pub struct PyHamiltonian {
    pub inner: uvqnhe_core::pauli::Hamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    /// `-sum Z Z - h sum X` on a chain.
    #[staticmethod]
    #[pyo3(signature = (n, h = 1.0, periodic = false))]
    fn tfim(n: usize, h: f64, periodic: bool) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: build_tfim(n, h, boundary(periodic)).map_err(py_err)? })
    }

    /// Terms as `(coefficient, "XZIY")` pairs, qubit 0 first.
    #[staticmethod]
    fn from_terms(n: usize, terms: Vec<(f64, String)>) -> PyResult<Self> {
        let terms = terms
            .into_iter()
            .map(|(c, s)| s.parse::<PauliString>().map(|p| (c, p)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        Ok(PyHamiltonian { inner: uvqnhe_core::pauli::Hamiltonian::new(n, terms).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: uvqnhe_core::pauli::Hamiltonian::from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn terms(&self) -> Vec<(f64, String)> {
        self.inner.terms().iter().map(|(c, p)| (*c, p.to_string())).collect()
    }

    fn expectation(&self, state: &PyStateVector) -> PyResult<f64> {
        exact_expectation(&self.inner, &state.inner).map_err(py_err)
    }

    /// Ground energy, gap and solver as a dict.
    fn ground_state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let truth = groundtruth::ground_state(&self.inner).map_err(py_err)?;
        json_to_python(py, &truth.to_json())
    }

    fn __repr__(&self) -> String {
        format!("Hamiltonian(n={}, terms={})", self.inner.n(), self.inner.terms().len())
    }
}

#[pyclass(name = "StateVector", module = "uvqnhe", skip_from_py_object)]
#[derive(Clone)]
pub struct PyStateVector {
    pub inner: simulator::StateVector,
}

#[pymethods]
impl PyStateVector {
    /// Normalizes the given amplitudes.
    #[staticmethod]
    #[pyo3(signature = (real, imag = None))]
    fn from_amplitudes(real: Vec<f64>, imag: Option<Vec<f64>>) -> PyResult<Self> {
        let imag = imag.unwrap_or_else(|| vec![0.0; real.len()]);
        if imag.len() != real.len() || !real.len().is_power_of_two() {
            return Err(PyValueError::new_err("need 2^n real and imaginary parts"));
        }
        let n = real.len().trailing_zeros() as usize;
        let amps = real.into_iter().zip(imag).map(|(a, b)| Complex64::new(a, b)).collect();
        Ok(PyStateVector { inner: simulator::StateVector::normalized(n, amps).map_err(py_err)? })
    }

    /// Hardware-efficient ansatz state for `params`.
    #[staticmethod]
    #[pyo3(signature = (n, layers, params, periodic = false))]
    fn ansatz(n: usize, layers: usize, params: Vec<f64>, periodic: bool) -> PyResult<Self> {
        let spec = AnsatzSpec::new(n, layers, boundary(periodic)).map_err(py_err)?;
        Ok(PyStateVector { inner: ansatz_state(&spec, &params).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, layers, periodic = false))]
    fn ansatz_param_count(n: usize, layers: usize, periodic: bool) -> PyResult<usize> {
        Ok(AnsatzSpec::new(n, layers, boundary(periodic)).map_err(py_err)?.param_count())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn amplitudes(&self) -> Vec<(f64, f64)> {
        self.inner.amps().iter().map(|a| (a.re, a.im)).collect()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    /// Computational-basis histogram `{index: count}`.
    #[pyo3(signature = (shots, seed = 0))]
    fn sample(&self, shots: u64, seed: u64) -> PyResult<std::collections::BTreeMap<usize, u64>> {
        let mut rng = stream_rng(seed, "python-sample");
        let set = simulator::sample(&self.inner, shots, CircuitTag::Ansatz, &mut rng).map_err(py_err)?;
        Ok(set.counts().clone())
    }
}

#[pyclass(name = "NeuralNet", module = "uvqnhe", skip_from_py_object)]
#[derive(Clone)]
pub struct PyNeuralNet {
    pub inner: uvqnhe_core::neural::NeuralNet,
}

fn output_mode(mode: &str, r: Option<f64>) -> PyResult<OutputMode> {
    match (mode, r) {
        ("amp_bounded", Some(r)) => Ok(OutputMode::AmpBounded { r }),
        ("amp_bounded", None) => Err(PyValueError::new_err("amp_bounded needs r")),
        ("amp_positive", _) => Ok(OutputMode::AmpPositive),
        ("phase", _) => Ok(OutputMode::Phase),
        _ => Err(PyValueError::new_err(format!("unknown mode {mode:?}"))),
    }
}

#[pymethods]
impl PyNeuralNet {
    /// Single-hidden-layer network on the spin encoding of `n` bits.
    #[new]
    #[pyo3(signature = (n, hidden = 64, mode = "amp_bounded", r = Some(3.0), activation = "tanh", seed = 0))]
    fn new(n: usize, hidden: usize, mode: &str, r: Option<f64>, activation: &str, seed: u64) -> PyResult<Self> {
        let mode = output_mode(mode, r)?;
        let activation: Activation = activation.parse().map_err(py_err)?;
        let mut rng = stream_rng(seed, "python-net");
        Ok(PyNeuralNet {
            inner: uvqnhe_core::neural::NeuralNet::xavier(n, hidden, mode, activation, &mut rng).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_checkpoint_json(text: &str) -> PyResult<Self> {
        Ok(PyNeuralNet { inner: uvqnhe_core::neural::NeuralNet::from_checkpoint_json(text).map_err(py_err)? })
    }

    fn to_checkpoint_json(&self) -> String {
        self.inner.to_checkpoint_json()
    }

    fn forward(&self, s: usize) -> PyResult<f64> {
        if s >> self.inner.n_in() != 0 {
            return Err(PyValueError::new_err(format!("bit string {s} out of range")));
        }
        Ok(self.inner.forward(s))
    }

    /// Outputs for every bit string in index order.
    fn outputs(&self) -> Vec<f64> {
        (0..1usize << self.inner.n_in()).map(|s| self.inner.forward(s)).collect()
    }

    fn params(&self) -> Vec<f64> {
        self.inner.params().to_vec()
    }

    fn set_params(&mut self, params: Vec<f64>) -> PyResult<()> {
        self.inner.set_params(&params).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n_in()
    }
}

#[pyclass(name = "TrainingConfig", module = "uvqnhe", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTrainingConfig {
    pub inner: training::TrainingConfig,
}

#[pymethods]
impl PyTrainingConfig {
    /// Transverse-field Ising chain with default settings.
    #[new]
    #[pyo3(signature = (n, h = 1.0))]
    fn new(n: usize, h: f64) -> Self {
        PyTrainingConfig { inner: training::TrainingConfig::tfim(n, h) }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyTrainingConfig { inner: training::TrainingConfig::from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }
    #[getter]
    fn layers(&self) -> usize {
        self.inner.ansatz.layers
    }
    #[setter]
    fn set_layers(&mut self, v: usize) {
        self.inner.ansatz.layers = v;
    }
    #[getter]
    fn epochs(&self) -> usize {
        self.inner.nn.epochs
    }
    #[setter]
    fn set_epochs(&mut self, v: usize) {
        self.inner.nn.epochs = v;
    }
    #[getter]
    fn learning_rate(&self) -> f64 {
        self.inner.nn.learning_rate
    }
    #[setter]
    fn set_learning_rate(&mut self, v: f64) {
        self.inner.nn.learning_rate = v;
    }
    #[getter]
    fn hidden(&self) -> usize {
        self.inner.nn.hidden
    }
    #[setter]
    fn set_hidden(&mut self, v: usize) {
        self.inner.nn.hidden = v;
    }
    /// Output range parameter; `None` trains an unconstrained amplitude net.
    #[getter]
    fn r(&self) -> Option<f64> {
        self.inner.nn.r
    }
    #[setter]
    fn set_r(&mut self, v: Option<f64>) {
        self.inner.nn.r = v;
    }
    #[getter]
    fn shots_ansatz(&self) -> u64 {
        self.inner.shots.ansatz
    }
    #[setter]
    fn set_shots_ansatz(&mut self, v: u64) {
        self.inner.shots.ansatz = v;
    }
    #[getter]
    fn shots_term(&self) -> u64 {
        self.inner.shots.term
    }
    #[setter]
    fn set_shots_term(&mut self, v: u64) {
        self.inner.shots.term = v;
    }
    #[getter]
    fn exact(&self) -> bool {
        self.inner.shots.exact
    }
    #[setter]
    fn set_exact(&mut self, v: bool) {
        self.inner.shots.exact = v;
        self.inner.vqe.exact = v;
    }
    #[getter]
    fn refresh(&self) -> bool {
        self.inner.shots.refresh
    }
    #[setter]
    fn set_refresh(&mut self, v: bool) {
        self.inner.shots.refresh = v;
    }

    fn __repr__(&self) -> String {
        format!("TrainingConfig({})", serde_json::to_string(&self.inner).expect("config serializes"))
    }
}

fn post_processing(kind: Option<&str>) -> PyResult<Option<PostProcessing>> {
    match kind {
        None | Some("vqe") => Ok(None),
        Some("vqnhe") => Ok(Some(PostProcessing::Vqnhe)),
        Some("uvqnhe") => Ok(Some(PostProcessing::Uvqnhe)),
        Some(other) => Err(PyValueError::new_err(format!("unknown post-processing {other:?}"))),
    }
}

/// Optimizes the circuit; returns parameters, energies and the best-so-far trace.
#[pyfunction]
fn run_vqe<'py>(py: Python<'py>, config: &PyTrainingConfig) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let result = py.detach(move || training::run_vqe(&cfg)).map_err(py_err)?;
    to_python(py, &result)
}

/// VQE followed by `kind` ("vqnhe", "uvqnhe" or None) post-processing.
#[pyfunction]
#[pyo3(signature = (config, kind = None))]
fn run_pipeline<'py>(py: Python<'py>, config: &PyTrainingConfig, kind: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let kind = post_processing(kind)?;
    let cfg = config.inner.clone();
    let result = py.detach(move || training::run_pipeline(&cfg, kind)).map_err(py_err)?;
    let network = result.trace.as_ref().and_then(|t| t.network.clone());
    let out = to_python(py, &result)?;
    if let Some(net) = network {
        out.set_item("network", Py::new(py, PyNeuralNet { inner: net })?)?;
    }
    Ok(out)
}

/// Exact energy of the state reweighted by `f` (one value per bit string).
#[pyfunction]
fn dnp_exact_energy(state: &PyStateVector, f: Vec<f64>, hamiltonian: &PyHamiltonian) -> PyResult<f64> {
    estimators::dnp_exact_energy(&state.inner, &f, &hamiltonian.inner).map_err(py_err)
}

/// Exact energy of the state with phases `g` (one value per bit string).
#[pyfunction]
fn uvqnhe_exact_energy(state: &PyStateVector, g: Vec<f64>, hamiltonian: &PyHamiltonian) -> PyResult<f64> {
    estimators::uvqnhe_exact_energy(&state.inner, &g, &hamiltonian.inner).map_err(py_err)
}

#[pyfunction]
fn bhattacharyya(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    diagnostics::bhattacharyya(&p, &q).map_err(py_err)
}

/// Renyi divergence of order "half" or "inf".
#[pyfunction]
#[pyo3(signature = (p, q, order = "half"))]
fn renyi(p: Vec<f64>, q: Vec<f64>, order: &str) -> PyResult<f64> {
    let order = match order {
        "half" => RenyiOrder::Half,
        "inf" | "infinity" => RenyiOrder::Infinity,
        _ => return Err(PyValueError::new_err(format!("unknown order {order:?}"))),
    };
    diagnostics::renyi(&p, &q, order).map_err(py_err)
}

#[pyfunction]
fn shot_lower_bound(r: f64, epsilon: f64) -> PyResult<u64> {
    diagnostics::shot_lower_bound(r, epsilon).map_err(py_err)
}

#[pyfunction]
fn coupon_expected_shots(n: usize, n_m: u64) -> PyResult<f64> {
    diagnostics::coupon_expected_shots(n, n_m).map_err(py_err)
}

#[pyfunction]
fn coupon_highprob_shots(n: usize, n_m: u64, delta: f64) -> PyResult<u64> {
    diagnostics::coupon_highprob_shots(n, n_m, delta).map_err(py_err)
}

/// Runs a named recipe; `overrides` is a JSON object of recipe fields.
#[pyfunction]
#[pyo3(signature = (name, seed, out = None, overrides = None))]
fn run_recipe<'py>(
    py: Python<'py>,
    name: &str,
    seed: u64,
    out: Option<PathBuf>,
    overrides: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let name: RecipeName = name.parse().map_err(py_err)?;
    let recipe = match overrides {
        Some(text) => ExperimentRecipe::with_overrides(name, text).map_err(py_err)?,
        None => ExperimentRecipe::preset(name),
    };
    let report = py.detach(move || experiments::run_recipe(&recipe, seed, out.as_deref())).map_err(py_err)?;
    to_python(py, &report)
}

/// Support, coupon and (with a checkpoint) dynamic-range report for sample files.
#[pyfunction]
#[pyo3(signature = (files, checkpoint = None, delta = 0.05))]
fn diagnose<'py>(
    py: Python<'py>,
    files: Vec<PathBuf>,
    checkpoint: Option<PathBuf>,
    delta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = experiments::diagnose(&files, checkpoint.as_deref(), None, delta).map_err(py_err)?;
    to_python(py, &report)
}

#[pymodule]
fn uvqnhe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function of the extension to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", experiments::VERSION)?;
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyNeuralNet>()?;
    m.add_class::<PyTrainingConfig>()?;
    m.add_function(wrap_pyfunction!(run_vqe, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(dnp_exact_energy, m)?)?;
    m.add_function(wrap_pyfunction!(uvqnhe_exact_energy, m)?)?;
    m.add_function(wrap_pyfunction!(bhattacharyya, m)?)?;
    m.add_function(wrap_pyfunction!(renyi, m)?)?;
    m.add_function(wrap_pyfunction!(shot_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(coupon_expected_shots, m)?)?;
    m.add_function(wrap_pyfunction!(coupon_highprob_shots, m)?)?;
    m.add_function(wrap_pyfunction!(run_recipe, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    Ok(())
}
