//! Python bindings: datasets, training, trained-model operations and the
//! analysis helpers, as a thin layer over the core crate.

use std::collections::BTreeMap;
use std::str::FromStr;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lbarn::{
    BaselineOptions, BinaryDataset, BoostConfig, EntropyDirection, Error, OrderingChoice,
    ProbeConfig, SelectionMethod, TrainOptions, TrainReport,
};

fn to_py_err(err: Error) -> PyErr {
    match &err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// An immutable N x D matrix of bits.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: BinaryDataset,
}

#[pymethods]
impl PyDataset {
    /// Load a dense text file (tokens 0/1, one sample per line).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: BinaryDataset::load(path).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn from_rows(rows: Vec<Vec<u8>>) -> PyResult<Self> {
        Ok(Self {
            inner: BinaryDataset::from_rows(&rows).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py_err)
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn n_dims(&self) -> usize {
        self.inner.n_dims()
    }

    /// Rows as lists of 0/1 ints.
    fn to_rows(&self) -> Vec<Vec<u32>> {
        self.inner
            .rows()
            .map(|r| r.into_iter().map(u32::from).collect())
            .collect()
    }

    fn row(&self, index: usize) -> PyResult<Vec<u32>> {
        if index >= self.inner.n_samples() {
            return Err(PyValueError::new_err(format!(
                "row {index} out of range (N={})",
                self.inner.n_samples()
            )));
        }
        Ok(self.inner.row(index).into_iter().map(u32::from).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.n_samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_samples={}, n_dims={})",
            self.inner.n_samples(),
            self.inner.n_dims()
        )
    }
}

/// A trained autoregressive network over binary vectors.
#[pyclass(name = "Model")]
struct PyModel {
    inner: lbarn::ArnModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: lbarn::load_model(path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        lbarn::save_model(&self.inner, path).map_err(to_py_err)
    }

    #[getter]
    fn n_dims(&self) -> usize {
        self.inner.n_dims()
    }

    /// Variable ordering as 0-based original column indices.
    #[getter]
    fn ordering(&self) -> Vec<usize> {
        self.inner.ordering().to_vec()
    }

    #[getter]
    fn truncations(&self) -> Vec<usize> {
        self.inner.truncations()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.meta().kind {
            lbarn::ModelKind::Boosted => "boosted",
            lbarn::ModelKind::SingleTreeBaseline => "single-tree-baseline",
        }
    }

    /// Exact log-likelihood (nats) of one row.
    fn log_likelihood(&self, row: Vec<u8>) -> PyResult<f64> {
        if row.len() != self.inner.n_dims() {
            return Err(PyValueError::new_err(format!(
                "row has {} entries, model has {} dimensions",
                row.len(),
                self.inner.n_dims()
            )));
        }
        Ok(self.inner.joint_log_likelihood(&row))
    }

    /// Mean log-likelihood and its standard error over a dataset.
    fn evaluate(&self, ds: &PyDataset) -> PyResult<(f64, f64)> {
        if ds.inner.n_dims() != self.inner.n_dims() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        let summary = self.inner.evaluate(&ds.inner);
        Ok((summary.mean, summary.std_error))
    }

    /// Ancestral samples, deterministic per seed.
    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<PyDataset> {
        if n == 0 {
            return Err(PyValueError::new_err("n must be at least 1"));
        }
        Ok(PyDataset {
            inner: self.inner.sample(seed, n),
        })
    }

    /// Complete a partial row (None marks missing entries, which must occupy
    /// a suffix of the model ordering).
    #[pyo3(signature = (partial, n_samples = 1, seed = 0))]
    fn impute(
        &self,
        partial: Vec<Option<u8>>,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<Vec<Vec<u32>>> {
        let rows = self
            .inner
            .impute(&partial, seed, n_samples)
            .map_err(to_py_err)?;
        Ok(rows
            .into_iter()
            .map(|r| r.into_iter().map(u32::from).collect())
            .collect())
    }

    /// Average cumulative log-likelihood per ordering position.
    fn cumulative_log_likelihood(&self, ds: &PyDataset) -> PyResult<Vec<f64>> {
        if ds.inner.n_dims() != self.inner.n_dims() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        Ok(self.inner.cumulative_log_likelihood(&ds.inner))
    }

    /// Split-gain importance for the conditional that models `dim`
    /// (0-based original column index). Returns
    /// `{"gains": {...}, "normalized": {...}, "total_gain": float}`.
    fn importance<'py>(&self, py: Python<'py>, dim: usize) -> PyResult<Bound<'py, PyDict>> {
        if dim >= self.inner.n_dims() {
            return Err(PyValueError::new_err(format!(
                "dim {dim} out of range (D={})",
                self.inner.n_dims()
            )));
        }
        let report = lbarn::variable_importance(&self.inner, dim);
        let out = PyDict::new(py);
        out.set_item("target_dim", report.target_dim)?;
        out.set_item("gains", map_to_dict(py, &report.gains)?)?;
        out.set_item("normalized", map_to_dict(py, &report.normalized)?)?;
        out.set_item("total_gain", report.total_gain)?;
        out.set_item("no_active_gain", report.no_active_gain)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={:?}, n_dims={}, selection={:?})",
            self.kind(),
            self.inner.n_dims(),
            self.inner.meta().selection
        )
    }
}

fn map_to_dict<'py>(py: Python<'py>, map: &BTreeMap<usize, f64>) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    for (&k, &v) in map {
        dict.set_item(k, v)?;
    }
    Ok(dict)
}

fn report_to_dict<'py>(py: Python<'py>, report: &TrainReport) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("n_dims", report.n_dims)?;
    dict.set_item("n_train", report.n_train)?;
    dict.set_item("n_valid", report.n_valid)?;
    dict.set_item("ordering", report.ordering.clone())?;
    dict.set_item("truncations", report.truncations.clone())?;
    dict.set_item("train_ll_mean", report.train_ll_mean)?;
    dict.set_item("valid_ll_mean", report.valid_ll_mean)?;
    dict.set_item("selection", report.selection.clone())?;
    dict.set_item("refit", report.refit)?;
    dict.set_item("wall_time_secs", report.wall_time_secs)?;
    Ok(dict)
}

fn ordering_choice(ordering: Option<Vec<usize>>, mode: &str) -> PyResult<OrderingChoice> {
    if let Some(perm) = ordering {
        return Ok(OrderingChoice::Explicit(perm));
    }
    match mode {
        "natural" => Ok(OrderingChoice::Natural),
        "entropy-increasing" => Ok(OrderingChoice::EntropyIncreasing),
        "entropy-decreasing" => Ok(OrderingChoice::EntropyDecreasing),
        other => Err(PyValueError::new_err(format!(
            "unknown ordering mode {other:?}"
        ))),
    }
}

/// Train a boosted autoregressive network. Returns `(Model, report_dict)`.
#[pyfunction]
#[pyo3(signature = (train, valid, *, leaves = 8, shrinkage = 0.02, rounds = 1000,
                    selection = "individual", ordering = None, ordering_mode = "natural",
                    refit = false, early_exit = true, workers = None))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    train: &PyDataset,
    valid: &PyDataset,
    leaves: usize,
    shrinkage: f64,
    rounds: usize,
    selection: &str,
    ordering: Option<Vec<usize>>,
    ordering_mode: &str,
    refit: bool,
    early_exit: bool,
    workers: Option<usize>,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let opts = TrainOptions {
        boost: BoostConfig {
            rounds,
            leaves,
            shrinkage,
            early_exit,
            ..BoostConfig::default()
        },
        selection: SelectionMethod::from_str(selection).map_err(to_py_err)?,
        ordering: ordering_choice(ordering, ordering_mode)?,
        refit,
        workers,
        ..TrainOptions::default()
    };
    let outcome =
        py.detach(|| lbarn::train_arn(&train.inner, &valid.inner, &opts)).map_err(to_py_err)?;
    let report = report_to_dict(py, &outcome.report)?;
    Ok((PyModel { inner: outcome.model }, report))
}

/// Train the single probability-estimation-tree baseline network.
/// Returns `(Model, report_dict)`; the report carries the chosen pseudocount.
#[pyfunction]
#[pyo3(signature = (train, valid, *, max_leaves = 512, pseudocounts = None, workers = None))]
fn train_baseline<'py>(
    py: Python<'py>,
    train: &PyDataset,
    valid: &PyDataset,
    max_leaves: usize,
    pseudocounts: Option<Vec<f64>>,
    workers: Option<usize>,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let opts = BaselineOptions {
        max_leaves,
        pseudocounts: pseudocounts
            .unwrap_or_else(|| lbarn::train::BASELINE_PSEUDOCOUNT_GRID.to_vec()),
        workers,
        ..BaselineOptions::default()
    };
    let outcome = py
        .detach(|| lbarn::train_baseline(&train.inner, &valid.inner, &opts))
        .map_err(to_py_err)?;
    let report = report_to_dict(py, &outcome.report)?;
    report.set_item("pseudocount", outcome.pseudocount)?;
    report.set_item("per_dim_leaves", outcome.per_dim_leaves.clone())?;
    Ok((PyModel { inner: outcome.model }, report))
}

/// Greedy conditional-entropy ordering. Returns `(permutation, entropies)`
/// with 0-based column indices.
#[pyfunction]
#[pyo3(signature = (ds, *, direction = "increasing", probe_leaves = 4, probe_rounds = 50,
                    probe_shrinkage = 0.1, candidate_cap = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn entropy_ordering(
    py: Python<'_>,
    ds: &PyDataset,
    direction: &str,
    probe_leaves: usize,
    probe_rounds: usize,
    probe_shrinkage: f64,
    candidate_cap: Option<usize>,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let direction = match direction {
        "increasing" => EntropyDirection::Increasing,
        "decreasing" => EntropyDirection::Decreasing,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown direction {other:?}"
            )))
        }
    };
    let probe = ProbeConfig {
        boost: BoostConfig {
            rounds: probe_rounds,
            leaves: probe_leaves,
            shrinkage: probe_shrinkage,
            ..BoostConfig::default()
        },
        candidate_cap,
        seed,
    };
    probe.boost.validate().map_err(to_py_err)?;
    let result = py.detach(|| lbarn::entropy_ordering(&ds.inner, direction, &probe));
    Ok((result.permutation, result.per_step_entropy))
}

/// Stack independent row-shuffled copies of a dataset side by side.
#[pyfunction]
#[pyo3(signature = (ds, copies, seed = 0))]
fn stacked_copies(ds: &PyDataset, copies: usize, seed: u64) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: lbarn::stacked_copies(&ds.inner, copies, seed).map_err(to_py_err)?,
    })
}

#[pymodule]
fn lbarn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(train_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_ordering, m)?)?;
    m.add_function(wrap_pyfunction!(stacked_copies, m)?)?;
    Ok(())
}
