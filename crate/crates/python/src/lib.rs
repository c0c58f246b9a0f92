//! Python bindings for `metric_svm`.

use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use metric_svm::eval::{self, Method, MethodConfig, Preprocessor, TrainSummary};
use metric_svm::{Dataset, Error, MetricMatrix};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Array2::from_shape_vec((r, c), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows_of(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn parse_method(method: &str) -> PyResult<Method> {
    method
        .parse()
        .map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

fn method_config(
    method: &str,
    m1: usize,
    m2: usize,
    c: f64,
    k: usize,
    standardize: bool,
) -> PyResult<MethodConfig> {
    let cfg = MethodConfig {
        method: parse_method(method)?,
        m1,
        m2,
        c,
        k,
        standardize,
        ..Default::default()
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

#[pyclass(name = "Dataset", module = "metricsvm", frozen)]
pub struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, labels, name = "data"))]
    fn new(features: Vec<Vec<f64>>, labels: Vec<i64>, name: &str) -> PyResult<Self> {
        let inner = Dataset::new(name, matrix_from_rows(features)?, labels).map_err(py_err)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, label_column = None))]
    fn load_csv(path: &str, label_column: Option<usize>) -> PyResult<Self> {
        Ok(PyDataset {
            inner: metric_svm::load_csv(path, label_column).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load_libsvm(path: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: metric_svm::load_libsvm(path).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.features)
    }

    #[getter]
    fn labels(&self) -> Vec<i64> {
        self.inner.labels.clone()
    }

    fn classes(&self) -> Vec<i64> {
        self.inner.classes()
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.inner.len()) {
            return Err(PyValueError::new_err(format!("index {bad} out of range")));
        }
        Ok(PyDataset {
            inner: self.inner.subset(&indices),
        })
    }

    fn stratified_subsample(&self, size: usize, seed: u64) -> Self {
        PyDataset {
            inner: self.inner.stratified_subsample(size, seed),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, samples={}, dim={}, classes={})",
            self.inner.name,
            self.inner.len(),
            self.inner.dim(),
            self.inner.classes().len()
        )
    }
}

#[pyclass(name = "Metric", module = "metricsvm", frozen)]
pub struct PyMetric {
    inner: MetricMatrix,
}

#[pymethods]
impl PyMetric {
    #[new]
    fn new(matrix: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyMetric {
            inner: MetricMatrix::new(matrix_from_rows(matrix)?).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn identity(dim: usize) -> Self {
        PyMetric {
            inner: MetricMatrix::identity(dim),
        }
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyMetric {
            inner: MetricMatrix::from_text(text).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyMetric {
            inner: MetricMatrix::load(path).map_err(py_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.m)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn psd_projected(&self) -> bool {
        self.inner.psd_projected
    }

    /// Squared Mahalanobis distance `(x − y)ᵀ M (x − y)`.
    fn distance(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        metric_svm::mahalanobis(&self.inner, Array1::from(x).view(), Array1::from(y).view())
            .map_err(py_err)
    }

    fn psd_project(&self) -> PyResult<Self> {
        Ok(PyMetric {
            inner: metric_svm::psd_project(&self.inner).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Metric(dim={}, psd_projected={})",
            self.inner.dim(),
            self.inner.psd_projected
        )
    }
}

/// A trained metric together with the preprocessing fitted on its
/// training data.
#[pyclass(name = "Model", module = "metricsvm", frozen)]
pub struct PyModel {
    pre: Preprocessor,
    train: Dataset,
    projected: MetricMatrix,
    raw: MetricMatrix,
    summary: TrainSummary,
    k: usize,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn metric(&self) -> PyMetric {
        PyMetric {
            inner: self.projected.clone(),
        }
    }

    #[getter]
    fn raw_metric(&self) -> PyMetric {
        PyMetric {
            inner: self.raw.clone(),
        }
    }

    #[getter]
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let s = &self.summary;
        d.set_item("constraint_count", s.constraint_count)?;
        d.set_item("objective", s.objective)?;
        d.set_item("kkt_violation", s.kkt_violation)?;
        d.set_item("support_count", s.support_count)?;
        d.set_item("iterations", s.iterations)?;
        d.set_item("converged", s.converged)?;
        d.set_item("dropped_eigenvalue_mass", s.dropped_eigenvalue_mass)?;
        Ok(d)
    }

    /// Applies the training-set standardization to `data`.
    fn transform(&self, data: &PyDataset) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: self.pre.apply(&data.inner).map_err(py_err)?,
        })
    }

    /// k-NN labels for `queries` against the training set.
    #[pyo3(signature = (queries, k = None))]
    fn predict(&self, queries: &PyDataset, k: Option<usize>) -> PyResult<Vec<i64>> {
        let q = self.pre.apply(&queries.inner).map_err(py_err)?;
        eval::knn_predict(&self.projected, &self.train, &q, k.unwrap_or(self.k)).map_err(py_err)
    }
}

/// Doublets as `(first, second, h)` with h = −1 for same-class pairs.
#[pyfunction]
#[pyo3(signature = (data, m1 = 2, m2 = 2))]
fn build_doublets(data: &PyDataset, m1: usize, m2: usize) -> PyResult<Vec<(usize, usize, i8)>> {
    let set = metric_svm::build_doublets(&data.inner, m1, m2).map_err(py_err)?;
    Ok(set
        .constraints
        .iter()
        .map(|d| (d.first, d.second, d.label_h))
        .collect())
}

/// Triplets as `(anchor, similar, dissimilar)`.
#[pyfunction]
#[pyo3(signature = (data, m1 = 2, m2 = 2))]
fn build_triplets(data: &PyDataset, m1: usize, m2: usize) -> PyResult<Vec<(usize, usize, usize)>> {
    let set = metric_svm::build_triplets(&data.inner, m1, m2).map_err(py_err)?;
    Ok(set
        .constraints
        .iter()
        .map(|t| (t.anchor, t.similar, t.dissimilar))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (data, method = "doublet-svm", m1 = 2, m2 = 2, c = 1.0, k = 1, standardize = true))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    data: &PyDataset,
    method: &str,
    m1: usize,
    m2: usize,
    c: f64,
    k: usize,
    standardize: bool,
) -> PyResult<PyModel> {
    let cfg = method_config(method, m1, m2, c, k, standardize)?;
    let data = data.inner.clone();
    py.detach(move || {
        let pre = Preprocessor::fit(&data, &cfg)?;
        let train = pre.apply(&data)?;
        let t = eval::train_metric(&train, &cfg)?;
        Ok(PyModel {
            pre,
            train,
            projected: t.projected,
            raw: t.raw,
            summary: t.summary,
            k,
        })
    })
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (metric, train, queries, k = 1))]
fn knn_predict(
    metric: &PyMetric,
    train: &PyDataset,
    queries: &PyDataset,
    k: usize,
) -> PyResult<Vec<i64>> {
    eval::knn_predict(&metric.inner, &train.inner, &queries.inner, k).map_err(py_err)
}

#[pyfunction]
fn psd_project(matrix: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let m = MetricMatrix::new(matrix_from_rows(matrix)?).map_err(py_err)?;
    Ok(rows_of(&metric_svm::psd_project(&m).map_err(py_err)?.m))
}

/// k-fold cross-validation; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (data, method = "doublet-svm", m1 = 2, m2 = 2, c = 1.0, k = 1, folds = 10, seed = 0, standardize = true))]
#[allow(clippy::too_many_arguments)]
fn run_cv(
    py: Python<'_>,
    data: &PyDataset,
    method: &str,
    m1: usize,
    m2: usize,
    c: f64,
    k: usize,
    folds: usize,
    seed: u64,
    standardize: bool,
) -> PyResult<String> {
    let cfg = method_config(method, m1, m2, c, k, standardize)?;
    let data = data.inner.clone();
    py.detach(move || eval::run_cv_seeded(&data, &cfg, folds, seed)?.to_json())
        .map_err(py_err)
}

#[pymodule]
fn metricsvm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyMetric>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(build_doublets, m)?)?;
    m.add_function(wrap_pyfunction!(build_triplets, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(knn_predict, m)?)?;
    m.add_function(wrap_pyfunction!(psd_project, m)?)?;
    m.add_function(wrap_pyfunction!(run_cv, m)?)?;
    m.add(
        "METHODS",
        Method::ALL
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>(),
    )?;
    Ok(())
}
