//! Python bindings for the benchmark engine.
//!
//! Builds as an extension module named `openalx` exposing dataset loading,
//! experiment configuration, and the runner. Records and summaries cross
//! the boundary as plain dicts/lists so no Python-side schema is needed.
//!
//! Build: `cargo build -p openalx-py --release --features extension-module`,
//! then import the produced `libopenalx.so` as `openalx.so` (see
//! `python/smoke_test.py`, which automates the copy).

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};

use openalx_core::data::Dataset as CoreDataset;
use openalx_core::metrics::METRIC_NAMES;
use openalx_core::models::ModelSpec;
use openalx_core::registry::Registry;
use openalx_core::runner::{final_summary, run as run_experiment, ExperimentConfig, ResultSet};
use openalx_core::samplers::{SamplerKind, SAMPLER_KINDS};
use openalx_core::ENGINE_VERSION;

fn to_py_err(e: openalx_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Recursively convert a JSON value into native Python objects.
fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any().unbind()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any().unbind()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .into_any()
                    .unbind()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyValueError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &json)
}

/// A loaded dataset: label vocabulary plus encoded feature columns.
#[pyclass(frozen, module = "openalx")]
pub struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// Load a dataset by id — either a builtin synthetic generator or a
    /// CSV + JSON schema pair discovered under `data_dir`.
    #[staticmethod]
    #[pyo3(signature = (id, data_dir=None))]
    fn load(id: &str, data_dir: Option<PathBuf>) -> PyResult<Self> {
        let registry = Registry::discover(data_dir.as_deref()).map_err(to_py_err)?;
        let inner = registry.load(id).map_err(to_py_err)?;
        Ok(Dataset { inner })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.schema.dataset_id.clone()
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn class_count(&self) -> usize {
        self.inner.class_count()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    #[getter]
    fn feature_count(&self) -> usize {
        self.inner.schema.features.len()
    }

    /// Fraction of rows per class, indexed like `class_names`.
    fn class_balance(&self) -> Vec<f64> {
        self.inner.class_balance()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(id='{}', rows={}, classes={}, features={})",
            self.inner.schema.dataset_id,
            self.inner.n(),
            self.inner.class_count(),
            self.inner.schema.features.len()
        )
    }
}

/// Experiment configuration. Unset keyword arguments keep the engine
/// defaults (10 folds, test_frac 0.2, init/batch frac 0.001, 9 iterations).
#[pyclass(frozen, module = "openalx")]
pub struct Config {
    inner: ExperimentConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (dataset_id, model="logistic", seed=0, folds=None, test_frac=None,
                        init_frac=None, batch_frac=None, iterations=None, beta=None, alpha=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dataset_id: &str,
        model: &str,
        seed: u64,
        folds: Option<usize>,
        test_frac: Option<f64>,
        init_frac: Option<f64>,
        batch_frac: Option<f64>,
        iterations: Option<usize>,
        beta: Option<f64>,
        alpha: Option<f64>,
    ) -> PyResult<Self> {
        let spec = match model {
            "logistic" => ModelSpec::logistic_default(),
            "forest" => ModelSpec::forest_default(seed),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown model '{other}'; valid: logistic, forest"
                )))
            }
        };
        let mut inner = ExperimentConfig::new(dataset_id, spec, seed);
        if let Some(v) = folds {
            inner.folds = v;
        }
        if let Some(v) = test_frac {
            inner.test_frac = v;
        }
        if let Some(v) = init_frac {
            inner.init_frac = v;
        }
        if let Some(v) = batch_frac {
            inner.batch_frac = v;
        }
        if let Some(v) = iterations {
            inner.iterations = v;
        }
        if let Some(v) = beta {
            inner.beta = v;
        }
        if let Some(v) = alpha {
            inner.alpha = v;
        }
        inner.validate().map_err(to_py_err)?;
        Ok(Config { inner })
    }

    #[getter]
    fn dataset_id(&self) -> String {
        self.inner.dataset_id.clone()
    }

    #[getter]
    fn model(&self) -> String {
        match self.inner.model {
            ModelSpec::Logistic { .. } => "logistic".to_string(),
            ModelSpec::Forest { .. } => "forest".to_string(),
        }
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn folds(&self) -> usize {
        self.inner.folds
    }

    #[getter]
    fn test_frac(&self) -> f64 {
        self.inner.test_frac
    }

    #[getter]
    fn init_frac(&self) -> f64 {
        self.inner.init_frac
    }

    #[getter]
    fn batch_frac(&self) -> f64 {
        self.inner.batch_frac
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    /// The 16-hex-character content hash identifying this configuration's
    /// cache directory (sampler-independent).
    fn hash(&self) -> PyResult<String> {
        self.inner.hash().map_err(to_py_err)
    }

    /// Queries added per iteration for an `n`-row dataset.
    fn batch_size(&self, n: usize) -> usize {
        self.inner.batch_size(n)
    }

    /// Seed-pool size for an `n`-row dataset with `class_count` classes.
    fn init_size(&self, n: usize, class_count: usize) -> usize {
        self.inner.init_size(n, class_count)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(dataset_id='{}', model='{}', seed={}, folds={}, iterations={})",
            self.inner.dataset_id,
            self.model(),
            self.inner.seed,
            self.inner.folds,
            self.inner.iterations
        )
    }
}

/// The outcome of a run: per-iteration records, per-cell statuses, and
/// aggregate summaries.
#[pyclass(frozen, module = "openalx")]
pub struct RunResult {
    rs: ResultSet,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn config_hash(&self) -> String {
        self.rs.config_hash.clone()
    }

    #[getter]
    fn engine_version(&self) -> String {
        self.rs.engine_version.clone()
    }

    #[getter]
    fn complete(&self) -> bool {
        self.rs.is_complete()
    }

    #[getter]
    fn samplers(&self) -> Vec<String> {
        self.rs.samplers.iter().map(|k| k.to_string()).collect()
    }

    /// One dict per (sampler, fold, iteration) measurement; metric values
    /// live under their canonical names (`"Accuracy"`, `"F-Score"`, ...).
    #[getter]
    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &self.rs.records)
    }

    /// One dict per (sampler, fold) cell with its `status`.
    #[getter]
    fn cells(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &self.rs.cells)
    }

    /// Final-iteration cross-fold summary for `metric`: one dict per
    /// sampler with `mean`, `half_spread`, and a `best` flag.
    #[pyo3(signature = (metric="Accuracy"))]
    fn summary(&self, py: Python<'_>, metric: &str) -> PyResult<Py<PyAny>> {
        let cells = final_summary(&self.rs, metric).map_err(to_py_err)?;
        serialize_to_py(py, &cells)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(config_hash='{}', records={}, complete={})",
            self.rs.config_hash,
            self.rs.records.len(),
            self.rs.is_complete()
        )
    }
}

/// Run `config` against `dataset` for the given samplers (all eight when
/// omitted). `root` is the cache directory; omitted, a throwaway temporary
/// directory is used and no cache survives the call.
#[pyfunction]
#[pyo3(signature = (dataset, config, samplers=None, root=None))]
fn run(
    dataset: &Dataset,
    config: &Config,
    samplers: Option<Vec<String>>,
    root: Option<PathBuf>,
) -> PyResult<RunResult> {
    let kinds: Vec<SamplerKind> = match samplers {
        Some(names) => names
            .iter()
            .map(|s| s.parse())
            .collect::<openalx_core::Result<_>>()
            .map_err(to_py_err)?,
        None => SamplerKind::all(),
    };
    let rs = match root {
        Some(dir) => run_experiment(&dataset.inner, &config.inner, &kinds, &dir),
        None => {
            let tmp = tempfile::TempDir::new()
                .map_err(|e| PyValueError::new_err(format!("tempdir: {e}")))?;
            run_experiment(&dataset.inner, &config.inner, &kinds, tmp.path())
        }
    }
    .map_err(to_py_err)?;
    Ok(RunResult { rs })
}

/// Engine version string.
#[pyfunction]
fn version() -> &'static str {
    ENGINE_VERSION
}

/// Canonical sampler names, in report order.
#[pyfunction]
fn sampler_kinds() -> Vec<&'static str> {
    SAMPLER_KINDS.to_vec()
}

/// Canonical metric names.
#[pyfunction]
fn metric_names() -> Vec<&'static str> {
    METRIC_NAMES.to_vec()
}

/// Dataset ids available from the registry (builtins plus any CSV + JSON
/// schema pairs under `data_dir`).
#[pyfunction]
#[pyo3(signature = (data_dir=None))]
fn dataset_ids(data_dir: Option<PathBuf>) -> PyResult<Vec<String>> {
    let registry = Registry::discover(data_dir.as_deref()).map_err(to_py_err)?;
    Ok(registry.ids())
}

#[pymodule]
fn openalx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", ENGINE_VERSION)?;
    m.add_class::<Dataset>()?;
    m.add_class::<Config>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(sampler_kinds, m)?)?;
    m.add_function(wrap_pyfunction!(metric_names, m)?)?;
    m.add_function(wrap_pyfunction!(dataset_ids, m)?)?;
    Ok(())
}
