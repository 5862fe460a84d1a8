//! Python bindings for the `propinfer` crate.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::time::Duration;

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use propinfer::attack::QueryInterface;
use propinfer::data::{synth_generate, Scenario, SyntheticConfig};
use propinfer::harness::{self, ExperimentConfig, ExperimentResult, HarnessError};
use propinfer::models::{read_model, write_model, Queries, TrainedModel};
use propinfer::server::{self, RemoteModel, ServerHandle};
use propinfer::stats::{self, Thresholds};

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Config(_) | HarnessError::UnknownAxis(_) => PyValueError::new_err(e.to_string()),
        HarnessError::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A validated experiment configuration.
#[pyclass(name = "Config", module = "propinfer", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses `key = value` text.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        ExperimentConfig::parse(text).map(|inner| PyConfig { inner }).map_err(harness_err)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        ExperimentConfig::from_file(path).map(|inner| PyConfig { inner }).map_err(harness_err)
    }

    /// A copy with one key replaced.
    fn with_override(&self, key: &str, value: &str) -> PyResult<Self> {
        self.inner.with_override(key, value).map(|inner| PyConfig { inner }).map_err(harness_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn queries(&self) -> usize {
        self.inner.queries
    }

    /// Every resolved setting, defaults included.
    fn to_dict(&self) -> BTreeMap<String, String> {
        self.inner.to_kv()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        format!("Config(name={:?}, family={:?}, digest={:?})", self.inner.name, self.inner.family.name(), self.inner.digest())
    }
}

/// Outcome of one experiment.
#[pyclass(name = "Result", module = "propinfer", frozen)]
struct PyResult_ {
    inner: ExperimentResult,
}

#[pymethods]
impl PyResult_ {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn accuracy(&self) -> f64 {
        self.inner.accuracy
    }

    #[getter]
    fn ci_half_width(&self) -> f64 {
        self.inner.ci_half_width
    }

    #[getter]
    fn correct(&self) -> usize {
        self.inner.correct
    }

    #[getter]
    fn incorrect(&self) -> usize {
        self.inner.incorrect
    }

    #[getter]
    fn failed(&self) -> usize {
        self.inner.failed
    }

    #[getter]
    fn queries(&self) -> usize {
        self.inner.queries
    }

    #[getter]
    fn wall_time(&self) -> f64 {
        self.inner.wall_time.as_secs_f64()
    }

    /// `(group, accuracy, evaluations)` per property group.
    fn group_accuracy(&self) -> Vec<(String, f64, usize)> {
        self.inner.group_accuracy()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    fn report(&self) -> String {
        harness::render_text(std::slice::from_ref(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!("Result(name={:?}, k={}, accuracy={:.3})", self.inner.name, self.inner.queries, self.inner.accuracy)
    }
}

fn rows_to_array(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Array2::from_shape_vec((rows.len(), width), rows.concat()).map_err(value_err)
}

fn array_to_rows(a: Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// A trained target model.
#[pyclass(name = "Model", module = "propinfer", frozen)]
struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        read_model(BufReader::new(file)).map(|inner| PyModel { inner }).map_err(value_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let mut w = BufWriter::new(file);
        write_model(&self.inner, &mut w).and_then(|_| w.flush()).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn arch(&self) -> String {
        self.inner.arch().to_string()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn flatten_params(&self) -> Vec<f64> {
        self.inner.flatten_params()
    }

    /// Posteriors for encoded feature rows.
    fn predict_proba(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = rows_to_array(rows)?;
        self.inner.query(&Queries::Features(x)).map(array_to_rows).map_err(value_err)
    }

    /// Posteriors for graph nodes.
    fn predict_nodes(&self, nodes: Vec<usize>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.query(&Queries::Nodes(nodes)).map(array_to_rows).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Model(arch={:?}, params={})", self.inner.arch().to_string(), self.inner.n_params())
    }
}

/// A running query server.
#[pyclass(name = "Server", module = "propinfer")]
struct PyServer {
    handle: Option<ServerHandle>,
    addr: String,
}

#[pymethods]
impl PyServer {
    #[getter]
    fn address(&self) -> String {
        self.addr.clone()
    }

    fn shutdown(&mut self) {
        if let Some(h) = self.handle.take() {
            h.shutdown();
        }
    }

    fn __enter__(slf: Py<Self>) -> Py<Self> {
        slf
    }

    fn __exit__(&mut self, _ty: Py<PyAny>, _value: Py<PyAny>, _tb: Py<PyAny>) {
        self.shutdown();
    }
}

/// Runs the experiment a config describes.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &PyConfig) -> PyResult<PyResult_> {
    let cfg = config.inner.clone();
    py.detach(move || harness::run_experiment(&cfg)).map(|inner| PyResult_ { inner }).map_err(harness_err)
}

/// Runs the experiment once per value of `axis` (queries, split, classes, with_a or a config key).
#[pyfunction]
fn run_sweep(py: Python<'_>, config: &PyConfig, axis: &str, values: Vec<String>) -> PyResult<Vec<PyResult_>> {
    let cfg = config.inner.clone();
    let axis = axis.to_string();
    let out = py.detach(move || harness::run_sweep(&cfg, &axis, &values)).map_err(harness_err)?;
    Ok(out.into_iter().map(|inner| PyResult_ { inner }).collect())
}

/// Trains a target model for `ratio` as evaluation repetition `rep` would.
#[pyfunction]
#[pyo3(signature = (config, ratio, rep = 0))]
fn train_target(py: Python<'_>, config: &PyConfig, ratio: f64, rep: u64) -> PyResult<PyModel> {
    let cfg = config.inner.clone();
    py.detach(move || harness::train_target(&cfg, ratio, rep)).map(|inner| PyModel { inner }).map_err(harness_err)
}

/// Attacks a local model; returns `(property, confidence)`.
#[pyfunction]
fn attack_model(py: Python<'_>, config: &PyConfig, model: &PyModel) -> PyResult<(String, f64)> {
    let cfg = config.inner.clone();
    let target = model.inner.clone();
    let v = py.detach(move || harness::attack_model(&cfg, &target)).map_err(harness_err)?;
    Ok((v.property, v.prediction.confidence))
}

/// Attacks a model behind a query server; returns `(property, confidence)`.
#[pyfunction]
#[pyo3(signature = (config, endpoint, timeout_ms = 10_000))]
fn attack_remote(py: Python<'_>, config: &PyConfig, endpoint: &str, timeout_ms: u64) -> PyResult<(String, f64)> {
    let cfg = config.inner.clone();
    let target = RemoteModel::new(endpoint, Duration::from_millis(timeout_ms));
    let v = py.detach(move || harness::attack_model(&cfg, &target)).map_err(harness_err)?;
    Ok((v.property, v.prediction.confidence))
}

/// Serves `model` on `endpoint`; port 0 picks a free port.
#[pyfunction]
#[pyo3(signature = (model, endpoint = "127.0.0.1:0", idle_timeout_ms = None))]
fn serve(model: &PyModel, endpoint: &str, idle_timeout_ms: Option<u64>) -> PyResult<PyServer> {
    let handle = server::serve(model.inner.clone(), endpoint, idle_timeout_ms.map(Duration::from_millis)).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let addr = handle.local_addr().to_string();
    Ok(PyServer { handle: Some(handle), addr })
}

/// Synthetic records as a column name to values mapping.
#[pyfunction]
#[pyo3(signature = (scenario, n_records = 10_000, seed = 1, strength = 1.0))]
fn synthetic(scenario: &str, n_records: usize, seed: u64, strength: f64) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let scenario: Scenario = scenario.parse().map_err(value_err)?;
    let cfg = SyntheticConfig { n_records, correlation_strength: strength, ..SyntheticConfig::new(scenario) };
    let ds = synth_generate(&cfg, seed).map_err(value_err)?;
    ds.schema().columns().iter().map(|c| ds.column_values(&c.name).map(|v| (c.name.clone(), v)).map_err(value_err)).collect()
}

/// Classifies generated data into one of the four correlation scenarios.
#[pyfunction]
#[pyo3(signature = (scenario, n_records = 10_000, seed = 1))]
fn classify_synthetic(scenario: &str, n_records: usize, seed: u64) -> PyResult<String> {
    let scenario: Scenario = scenario.parse().map_err(value_err)?;
    let ds = synth_generate(&SyntheticConfig { n_records, ..SyntheticConfig::new(scenario) }, seed).map_err(value_err)?;
    let report = stats::classify_scenario(&ds, Thresholds::default()).map_err(value_err)?;
    Ok(report.scenario.to_string())
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::pearson(&x, &y).map_err(value_err)
}

#[pyfunction]
fn cramers_v(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    stats::cramers_v(&a, &b).map_err(value_err)
}

/// One-way ANOVA; returns `(F, p)`.
#[pyfunction]
fn anova(groups: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    stats::anova(&groups).map(|a| (a.f, a.p_value)).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "propinfer")]
fn propinfer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyResult_>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyServer>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(train_target, m)?)?;
    m.add_function(wrap_pyfunction!(attack_model, m)?)?;
    m.add_function(wrap_pyfunction!(attack_remote, m)?)?;
    m.add_function(wrap_pyfunction!(serve, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(classify_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(cramers_v, m)?)?;
    m.add_function(wrap_pyfunction!(anova, m)?)?;
    Ok(())
}
