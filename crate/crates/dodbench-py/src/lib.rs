//! Python bindings exposing the main toolkit types and operations.

use dodbench::datagen;
use dodbench::model::ScaleFactor;
use dodbench::oracle::{self, Dataset, EvalOptions, ResultSet};
use dodbench::query::{self, parse_spec_text};
use dodbench::translate as xlate;
use dodbench::translate::{Dialect, TranslateOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;
use std::str::FromStr;

fn value_err(message: impl ToString) -> PyErr {
    PyValueError::new_err(message.to_string())
}

/// Loaded, immutable dataset evaluated by the oracle engine.
#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// Loads a canonical line-delimited record file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDataset { inner: Dataset::load(&path).map_err(value_err)? })
    }

    /// Parses line-delimited JSON documents as emitted by `emit_json`.
    #[staticmethod]
    fn from_json_lines(text: &str) -> PyResult<Self> {
        let records = datagen::parse_json_lines(text.as_bytes()).map_err(value_err)?;
        Ok(PyDataset { inner: Dataset::from_records(records) })
    }

    #[getter]
    fn record_count(&self) -> u64 {
        self.inner.record_count()
    }

    #[getter]
    fn pair_count(&self) -> u64 {
        self.inner.pair_count()
    }

    fn vocabulary(&self) -> Vec<String> {
        let mut words: Vec<String> = self.inner.vocabulary().iter().cloned().collect();
        words.sort();
        words
    }

    /// Evaluates a query given as canonical spec text (e.g. "Q2(i=1,j=2)").
    #[pyo3(signature = (spec_text, terms=None, case_sensitive=false))]
    fn evaluate(
        &self,
        py: Python<'_>,
        spec_text: &str,
        terms: Option<Vec<String>>,
        case_sensitive: bool,
    ) -> PyResult<PyObject> {
        let pool = terms.unwrap_or_else(query::default_term_pool);
        let spec = parse_spec_text(spec_text, &pool).map_err(value_err)?;
        let rs = oracle::evaluate(&self.inner, &spec, EvalOptions { case_sensitive });
        let out = match rs {
            ResultSet::Titles(titles) => titles.to_object(py),
            ResultSet::Groups(groups) => {
                let rows: Vec<(String, Option<i32>, u64)> = groups
                    .into_iter()
                    .map(|(key, count)| (key.author, key.year, count))
                    .collect();
                rows.to_object(py)
            }
        };
        Ok(out)
    }

    /// Returns (n, N, s) for a query evaluated over this dataset.
    #[pyo3(signature = (spec_text, terms=None, case_sensitive=false))]
    fn selectivity(
        &self,
        spec_text: &str,
        terms: Option<Vec<String>>,
        case_sensitive: bool,
    ) -> PyResult<(u64, u64, f64)> {
        let pool = terms.unwrap_or_else(query::default_term_pool);
        let spec = parse_spec_text(spec_text, &pool).map_err(value_err)?;
        let rs = oracle::evaluate(&self.inner, &spec, EvalOptions { case_sensitive });
        let sel = oracle::selectivity(&self.inner, &spec, &rs).map_err(value_err)?;
        Ok((sel.n, sel.population, sel.s))
    }

    /// Deterministic nested scale-factor subset; returns a new dataset.
    fn subset(&self, sf: f64, seed: u64) -> PyResult<Self> {
        let sf = ScaleFactor::new(sf).map_err(value_err)?;
        let picked = datagen::subset(self.inner.records(), sf, seed);
        Ok(PyDataset { inner: Dataset::from_records(picked) })
    }
}

#[pyfunction]
fn tokenize(title: &str) -> Vec<String> {
    query::tokenize(title)
}

#[pyfunction]
#[pyo3(signature = (title, term, case_sensitive=false))]
fn contains(title: &str, term: &str, case_sensitive: bool) -> bool {
    query::contains(title, term, case_sensitive)
}

/// Compiles a query into a backend dialect; returns a dict with
/// `main_text` and `setup_texts`.
#[pyfunction]
#[pyo3(signature = (spec_text, dialect, terms=None, case_sensitive=false))]
fn translate(
    py: Python<'_>,
    spec_text: &str,
    dialect: &str,
    terms: Option<Vec<String>>,
    case_sensitive: bool,
) -> PyResult<PyObject> {
    let pool = terms.unwrap_or_else(query::default_term_pool);
    let spec = parse_spec_text(spec_text, &pool).map_err(value_err)?;
    let dialect = Dialect::from_str(dialect).map_err(value_err)?;
    let tq = xlate::translate(&spec, dialect, TranslateOptions { case_sensitive });
    let out = PyDict::new_bound(py);
    out.set_item("dialect", tq.dialect.as_str())?;
    out.set_item("main_text", tq.main_text)?;
    let setups: Vec<(String, String)> =
        tq.setup_texts.into_iter().map(|s| (s.name, s.text)).collect();
    out.set_item("setup_texts", setups)?;
    Ok(out.to_object(py))
}

#[pyfunction]
#[pyo3(signature = (spec_text, dialect, terms=None))]
fn explain(spec_text: &str, dialect: &str, terms: Option<Vec<String>>) -> PyResult<String> {
    let pool = terms.unwrap_or_else(query::default_term_pool);
    let spec = parse_spec_text(spec_text, &pool).map_err(value_err)?;
    let dialect = Dialect::from_str(dialect).map_err(value_err)?;
    Ok(xlate::explain(&spec, dialect))
}

#[pymodule]
fn dodbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(contains, m)?)?;
    m.add_function(wrap_pyfunction!(translate, m)?)?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    Ok(())
}
