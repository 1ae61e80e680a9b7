//! Python bindings. Structured results (dependencies, order reports,
//! metrics) come back as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

use tabperm_core::chain::{self, ChainConfig};
use tabperm_core::codec;
use tabperm_core::distill::distill;
use tabperm_core::eval::rules::{rules_from_json, rules_to_json, RuleSpec};
use tabperm_core::eval::{self, EvalOptions, LearnerKind, MleSpec, Task};
use tabperm_core::fd::{discover_with, DiscoveryOptions, FunctionalDependency};
use tabperm_core::order::{order_report_json, total_order};
use tabperm_core::sim::{self, SimKind, SimSpec};
use tabperm_core::table::{self as core_table, ColumnKind, Permutation};
use tabperm_core::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.kind()))
}

fn to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// An immutable typed table.
#[pyclass(frozen, module = "tabperm")]
pub struct Table {
    inner: core_table::Table,
}

#[pymethods]
impl Table {
    /// Parses CSV text with a header row; column kinds are inferred.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        let inner = core_table::load_table_str(text, None).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let inner = core_table::load_table_path(path, None).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    /// `(name, kind)` pairs, kind being "numeric" or "categorical".
    #[getter]
    fn columns(&self) -> Vec<(String, &'static str)> {
        self.inner
            .schema()
            .columns()
            .iter()
            .map(|c| {
                let kind = match c.kind {
                    ColumnKind::Numeric => "numeric",
                    ColumnKind::Categorical => "categorical",
                };
                (c.name.clone(), kind)
            })
            .collect()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.inner
            .rows()
            .iter()
            .map(|r| r.iter().map(|c| c.lexical.clone()).collect())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Table({} rows, columns={:?})", self.inner.n_rows(), self.inner.schema().names())
    }
}

fn fd_dict(fd: &FunctionalDependency, t: &core_table::Table) -> serde_json::Value {
    let names = |s: &[usize]| s.iter().map(|&c| t.schema().column(c).name.clone()).collect::<Vec<_>>();
    serde_json::json!({ "lhs": names(&fd.lhs), "rhs": names(&fd.rhs), "g3": fd.g3 })
}

fn parse_fds(table: &core_table::Table, fds: Vec<(Vec<String>, Vec<String>, f64)>) -> PyResult<Vec<FunctionalDependency>> {
    let schema = table.schema();
    let idx = |names: &[String]| names.iter().map(|n| schema.require(n)).collect::<Result<Vec<_>, _>>();
    fds.into_iter()
        .map(|(lhs, rhs, g3)| {
            let lhs = idx(&lhs).map_err(py_err)?;
            let rhs = idx(&rhs).map_err(py_err)?;
            FunctionalDependency::new(lhs, rhs, g3).map_err(py_err)
        })
        .collect()
}

fn permutation(table: &core_table::Table, order: Option<Vec<String>>) -> PyResult<Permutation> {
    match order {
        Some(names) => Permutation::from_names(&names, table.schema()).map_err(py_err),
        None => Ok(Permutation::identity(table.n_cols())),
    }
}

/// Minimal approximate dependencies as dicts `{lhs, rhs, g3}`.
#[pyfunction]
#[pyo3(signature = (table, max_lhs=3, g3=0.01, fd_bins=32, drop_keys=true))]
fn discover_fds<'py>(
    py: Python<'py>,
    table: &Table,
    max_lhs: usize,
    g3: f64,
    fd_bins: usize,
    drop_keys: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = DiscoveryOptions {
        max_lhs,
        error_threshold: g3,
        numeric_bins: (fd_bins > 0).then_some(fd_bins),
        drop_keys,
    };
    let fds = py.detach(|| discover_with(&table.inner, &opts)).map_err(py_err)?;
    let list: Vec<_> = fds.iter().map(|f| fd_dict(f, &table.inner)).collect();
    to_py(py, &serde_json::Value::Array(list))
}

/// Column order for a set of `(lhs, rhs, g3)` dependencies over `table`'s
/// columns, with its satisfied and violated edges.
#[pyfunction]
fn order_columns<'py>(
    py: Python<'py>,
    table: &Table,
    fds: Vec<(Vec<String>, Vec<String>, f64)>,
) -> PyResult<Bound<'py, PyAny>> {
    let fds = parse_fds(&table.inner, fds)?;
    let schema = table.inner.schema();
    let graph = distill(&fds, schema.len()).map_err(py_err)?;
    let result = total_order(&graph);
    to_py(py, &order_report_json(&graph, &result, schema))
}

/// Encodes row `row` of `table` as `"name is value, ..."` in the given
/// column order (schema order when omitted).
#[pyfunction]
#[pyo3(signature = (table, row, order=None))]
fn encode_row(table: &Table, row: usize, order: Option<Vec<String>>) -> PyResult<String> {
    let t = &table.inner;
    if row >= t.n_rows() {
        return Err(PyValueError::new_err(format!("row {row} out of range")));
    }
    let k = permutation(t, order)?;
    Ok(codec::encode_record(&t.rows()[row], t.schema(), &k).map_err(py_err)?.text)
}

/// Parses a sentence back into lexical values in `table`'s schema order.
#[pyfunction]
fn decode_sentence(table: &Table, text: &str) -> PyResult<Vec<String>> {
    let record = codec::decode_sentence(text, table.inner.schema()).map_err(py_err)?;
    Ok(record.into_iter().map(|c| c.lexical).collect())
}

/// Finite-context chain model over a fixed column order.
#[pyclass(frozen, module = "tabperm")]
pub struct ChainModel {
    inner: chain::ChainModel,
}

#[pymethods]
impl ChainModel {
    #[staticmethod]
    #[pyo3(signature = (table, order=None, context=1, bins=16, alpha=1.0, min_count=5))]
    fn fit(
        py: Python<'_>,
        table: &Table,
        order: Option<Vec<String>>,
        context: usize,
        bins: usize,
        alpha: f64,
        min_count: u64,
    ) -> PyResult<Self> {
        let k = permutation(&table.inner, order)?;
        let config = ChainConfig {
            context,
            bins,
            alpha,
            min_count,
        };
        let inner = py.detach(|| chain::fit(&table.inner, &k, config)).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Table> {
        let inner = py.detach(|| self.inner.sample(n, seed)).map_err(py_err)?;
        Ok(Table { inner })
    }

    fn loglikelihood(&self, table: &Table) -> PyResult<f64> {
        self.inner.loglikelihood(&table.inner).map_err(py_err)
    }

    #[getter]
    fn order(&self) -> Vec<String> {
        self.inner
            .permutation()
            .names(self.inner.schema())
            .into_iter()
            .map(String::from)
            .collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: chain::ChainModel::from_json(text).map_err(py_err)?,
        })
    }
}

/// Simulated `(table, rules_json)` for one of "disjoint_rects",
/// "overlapping_rects", "gaussian_blobs", "concentric_rings".
#[pyfunction]
#[pyo3(signature = (kind, categories=4, n=4000, seed=0))]
fn simulate(kind: &str, categories: usize, n: usize, seed: u64) -> PyResult<(Table, String)> {
    let kind = SimKind::parse(kind).ok_or_else(|| PyValueError::new_err(format!("unknown kind `{kind}`")))?;
    let sim = sim::simulate(&SimSpec::new(kind, categories, n, seed)).map_err(py_err)?;
    Ok((Table { inner: sim.table }, rules_to_json(&sim.rules)))
}

/// Full metrics report as a dict.
#[pyfunction]
#[pyo3(signature = (real, synth, rules=None, seed=0, learners=None, folds=5, target=None, task=None))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    real: &Table,
    synth: &Table,
    rules: Option<&str>,
    seed: u64,
    learners: Option<Vec<String>>,
    folds: usize,
    target: Option<String>,
    task: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let rules: Vec<RuleSpec> = match rules {
        Some(text) => rules_from_json(text).map_err(py_err)?,
        None => Vec::new(),
    };
    let mut opts = EvalOptions::new(seed);
    opts.folds = folds;
    if let Some(names) = learners {
        opts.learners = names
            .iter()
            .map(|n| LearnerKind::parse(n).ok_or_else(|| PyValueError::new_err(format!("unknown learner `{n}`"))))
            .collect::<PyResult<_>>()?;
    }
    opts.mle = match (target, task.as_deref()) {
        (Some(target), Some("classification")) => Some(MleSpec { target, task: Task::Classification }),
        (Some(target), Some("regression")) => Some(MleSpec { target, task: Task::Regression }),
        (None, None) => None,
        _ => return Err(PyValueError::new_err("target and task (classification|regression) go together")),
    };
    let report = py
        .detach(|| eval::evaluate(&real.inner, &synth.inner, &rules, &opts))
        .map_err(py_err)?;
    to_py(py, &serde_json::to_value(&report).expect("report serializes"))
}

#[pymodule]
fn tabperm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Table>()?;
    m.add_class::<ChainModel>()?;
    m.add_function(wrap_pyfunction!(discover_fds, m)?)?;
    m.add_function(wrap_pyfunction!(order_columns, m)?)?;
    m.add_function(wrap_pyfunction!(encode_row, m)?)?;
    m.add_function(wrap_pyfunction!(decode_sentence, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
