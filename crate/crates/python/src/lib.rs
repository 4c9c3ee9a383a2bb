//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dykaf::experiments::{self, ExperimentConfig};
use dykaf::kron_approx::{self, KroneckerFactorPair};
use dykaf::linalg::{self, DenseMatrix};
use dykaf::optim::{Hyperparams, OptimizerKind, ParamOptimizer};
use dykaf::Error;

type Rows = Vec<Vec<f64>>;
type Record = (String, u64, String, String, u64, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::DatasetUnavailable(_) | Error::EmptyFile(_) => {
            PyIOError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &Rows) -> PyResult<DenseMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err(
            "expected a non-empty rectangular list of rows",
        ));
    }
    DenseMatrix::new(rows.len(), cols, rows.concat()).map_err(to_py)
}

fn rows(m: &DenseMatrix) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn hyperparams(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Hyperparams> {
    let mut map = serde_json::Map::new();
    if let Some(kwargs) = kwargs {
        for (k, v) in kwargs.iter() {
            let key: String = k.extract()?;
            let value = if let Ok(b) = v.extract::<bool>() {
                serde_json::Value::Bool(b)
            } else if let Ok(i) = v.extract::<u64>() {
                serde_json::Value::from(i)
            } else if let Ok(x) = v.extract::<f64>() {
                serde_json::Value::from(x)
            } else if v.is_none() {
                serde_json::Value::Null
            } else {
                return Err(PyValueError::new_err(format!(
                    "unsupported value for '{key}'"
                )));
            };
            map.insert(key, value);
        }
    }
    let hp: Hyperparams = serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    hp.validate().map_err(to_py)?;
    Ok(hp)
}

/// Optimizer for one matrix parameter: `Optimizer("dykaf", learning_rate=1e-2)`.
#[pyclass(name = "Optimizer")]
struct PyOptimizer {
    inner: ParamOptimizer,
}

#[pymethods]
impl PyOptimizer {
    #[new]
    #[pyo3(signature = (kind = "dykaf", **kwargs))]
    fn new(kind: &str, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let kind: OptimizerKind = kind.parse().map_err(to_py)?;
        let inner = ParamOptimizer::new(kind, hyperparams(kwargs)?).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Returns the updated weight.
    fn step(&mut self, w: Rows, g: Rows) -> PyResult<Rows> {
        let mut w = matrix(&w)?;
        self.inner.step(&mut w, &matrix(&g)?).map_err(to_py)?;
        Ok(rows(&w))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn learning_rate(&self) -> f64 {
        self.inner.hp.learning_rate
    }
}

#[pyfunction]
fn kron(a: Rows, b: Rows) -> PyResult<Rows> {
    Ok(rows(
        &linalg::kron(&matrix(&a)?, &matrix(&b)?).map_err(to_py)?,
    ))
}

#[pyfunction]
fn rearrange(a: Rows, m1: usize, n1: usize, m2: usize, n2: usize) -> PyResult<Rows> {
    Ok(rows(
        &linalg::rearrange(&matrix(&a)?, m1, n1, m2, n2).map_err(to_py)?,
    ))
}

/// `(eigenvalues, eigenvectors)` of a symmetric matrix.
#[pyfunction]
fn sym_eig(a: Rows) -> PyResult<(Vec<f64>, Rows)> {
    let e = linalg::sym_eig(&matrix(&a)?).map_err(to_py)?;
    Ok((e.eigenvalues, rows(&e.eigenvectors)))
}

#[pyfunction]
fn qr(a: Rows) -> PyResult<(Rows, Rows)> {
    let (q, r) = linalg::qr(&matrix(&a)?).map_err(to_py)?;
    Ok((rows(&q), rows(&r)))
}

/// One Kronecker projector-splitting step; returns the new `(L, R)`.
#[pyfunction]
fn kron_proj_split(l: Rows, r: Rows, g: Rows) -> PyResult<(Rows, Rows)> {
    let pair = KroneckerFactorPair::new(matrix(&l)?, matrix(&r)?).map_err(to_py)?;
    let next = kron_approx::kron_proj_split(&pair, &matrix(&g)?).map_err(to_py)?;
    Ok((rows(&next.l), rows(&next.r)))
}

#[pyfunction]
fn init_from_gradient(g: Rows) -> PyResult<(Rows, Rows)> {
    let p = kron_approx::init_from_gradient(&matrix(&g)?).map_err(to_py)?;
    Ok((rows(&p.l), rows(&p.r)))
}

/// `(L, R, residual)` of the nearest Kronecker product of an `mn x mn` matrix.
#[pyfunction]
fn nkp_best(f: Rows, m: usize, n: usize) -> PyResult<(Rows, Rows, f64)> {
    let best = kron_approx::nkp_best(&matrix(&f)?, m, n).map_err(to_py)?;
    Ok((rows(&best.pair.l), rows(&best.pair.r), best.residual))
}

#[pyfunction]
fn fisher_reconstruct(q_l: Rows, q_r: Rows, v: Rows) -> PyResult<Rows> {
    let f = dykaf::model::fisher_reconstruct(&matrix(&q_l)?, &matrix(&q_r)?, &matrix(&v)?)
        .map_err(to_py)?;
    Ok(rows(&f))
}

/// `(features, labels, classes)` from a libsvm file.
#[pyfunction]
fn read_libsvm(path: &str) -> PyResult<(Rows, Vec<usize>, usize)> {
    let ds = dykaf::model::read_libsvm(path).map_err(to_py)?;
    Ok((rows(&ds.x), ds.y.clone(), ds.classes()))
}

#[pyfunction]
fn synth_blobs(
    classes: usize,
    dim: usize,
    count: usize,
    seed: u64,
) -> PyResult<(Rows, Vec<usize>)> {
    let ds = dykaf::model::synth_blobs(classes, dim, count, seed).map_err(to_py)?;
    Ok((rows(&ds.x), ds.y))
}

/// `[(name, error, tol, passed), ...]`.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn selftest(seed: u64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let checks = experiments::run_selftest(seed).map_err(to_py)?;
    Ok(checks
        .iter()
        .map(|c| (c.name.to_string(), c.error, c.tol, c.passed()))
        .collect())
}

/// Runs `fisher-sim`, `hessian-gap`, `props` or `train` with `key=value`
/// overrides and returns records as `(experiment, seed, method, metric, x, value)`.
#[pyfunction]
#[pyo3(signature = (name, overrides = Vec::new()))]
fn run_experiment(name: &str, overrides: Vec<String>) -> PyResult<Vec<Record>> {
    let cfg = ExperimentConfig::load(None, &overrides).map_err(to_py)?;
    let mut records = match name {
        experiments::FISHER_SIM => experiments::run_fisher_sim(&cfg),
        experiments::HESSIAN_GAP => experiments::run_hessian_gap(&cfg),
        experiments::PROPS => experiments::run_prop_validators(&cfg),
        experiments::TRAIN => experiments::run_train(&cfg),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown experiment '{other}'"
            )))
        }
    }
    .map_err(to_py)?;
    experiments::sort_records(&mut records);
    Ok(records
        .into_iter()
        .map(|r| (r.experiment, r.seed, r.method, r.metric, r.x, r.value))
        .collect())
}

#[pymodule]
fn pydykaf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOptimizer>()?;
    m.add_function(wrap_pyfunction!(kron, m)?)?;
    m.add_function(wrap_pyfunction!(rearrange, m)?)?;
    m.add_function(wrap_pyfunction!(sym_eig, m)?)?;
    m.add_function(wrap_pyfunction!(qr, m)?)?;
    m.add_function(wrap_pyfunction!(kron_proj_split, m)?)?;
    m.add_function(wrap_pyfunction!(init_from_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(nkp_best, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(read_libsvm, m)?)?;
    m.add_function(wrap_pyfunction!(synth_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
