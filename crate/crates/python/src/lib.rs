//! Python bindings. Reports come back as plain dicts and lists, with the
//! same shape as the CLI's `result` block.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use structcalc::canon::canonical_hash;
use structcalc::config::Config;
use structcalc::derivation::{apply_morphism, portion_by_ids, quotient, Partition, Sidecar};
use structcalc::iso::{internal_classes, iso_report};
use structcalc::pixel::demo::run_demo;
use structcalc::pixel::{analyze, load_raster, standard_signatures, Signature};
use structcalc::rules::{mine_rules, RecognitionLog};
use structcalc::solver::{solve, solve_with_cache, ProblemSpec, SolutionCache};
use structcalc::TypeCatalog;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn config(json: Option<&str>) -> PyResult<Config> {
    json.map_or(Ok(Config::default()), |t| Config::from_json(t).map_err(err))
}

/// An attributed structure in the text format.
#[pyclass(name = "Structure", module = "structcalc_py", frozen)]
struct PyStructure {
    inner: structcalc::Structure,
}

#[pymethods]
impl PyStructure {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = structcalc::Structure::from_text(text).map_err(err)?;
        Ok(PyStructure { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn oriented(&self) -> bool {
        self.inner.oriented()
    }

    fn part_ids(&self) -> Vec<String> {
        self.inner.parts().iter().map(|p| p.id.clone()).collect()
    }

    fn relation_count(&self) -> usize {
        self.inner.relations().len()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn canonical_hash(&self) -> String {
        canonical_hash(&self.inner)
    }

    fn isomorphic(&self, other: &PyStructure) -> PyResult<bool> {
        Ok(structcalc::isomorphic(&self.inner, &other.inner).map_err(err)?.is_some())
    }

    /// Witness and class data for the comparison with `other`.
    fn iso_report<'py>(&self, py: Python<'py>, other: &PyStructure) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &iso_report(&self.inner, &other.inner).map_err(err)?)
    }

    /// Part ids grouped into internally indistinguishable classes.
    fn internal_classes(&self) -> Vec<Vec<String>> {
        internal_classes(&self.inner)
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.inner.part(i).id.clone()).collect())
            .collect()
    }

    #[pyo3(signature = (ids, allow_disconnected = false))]
    fn portion(&self, ids: Vec<String>, allow_disconnected: bool) -> PyResult<PyStructure> {
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        let p = portion_by_ids(&self.inner, &ids, allow_disconnected).map_err(err)?;
        Ok(PyStructure { inner: p.induced })
    }

    /// Quotient by `blocks`, then the sidecar mask if one is given. Returns
    /// the derived structure and the nested block types as text.
    #[pyo3(signature = (blocks, sidecar = None))]
    fn derive(&self, blocks: Vec<Vec<String>>, sidecar: Option<&str>) -> PyResult<(PyStructure, Vec<(String, String)>)> {
        let mut catalog = TypeCatalog::new();
        let mut st = self.inner.clone();
        if !blocks.is_empty() {
            let k = Partition::from_ids(&st, &blocks).map_err(err)?;
            st = quotient(&st, &k, &mut catalog).map_err(err)?;
        }
        if let Some(text) = sidecar {
            let mask = Sidecar::from_text(text).map_err(err)?.mask;
            st = apply_morphism(&st, &mask, &catalog).map_err(err)?;
        }
        let nested = catalog
            .entries()
            .filter_map(|(id, e)| match e {
                structcalc::structure::TypeEntry::Nested { structure } => Some((id.clone(), structure.to_text())),
                _ => None,
            })
            .collect();
        Ok((PyStructure { inner: st }, nested))
    }

    fn __eq__(&self, other: &PyStructure) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Structure(parts={}, relations={}, oriented={})",
            self.inner.len(),
            self.inner.relations().len(),
            self.inner.oriented()
        )
    }
}

/// Raster pipeline on PBM/PGM bytes. `signatures` is a JSON list replacing
/// the built-in polygon set.
#[pyfunction]
#[pyo3(signature = (image, signatures = None, config = None))]
fn analyze_image<'py>(
    py: Python<'py>,
    image: &[u8],
    signatures: Option<&str>,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(config)?;
    let r = load_raster(image, cfg.pixel.levels).map_err(err)?;
    let sigs: Vec<Signature> = match signatures {
        Some(t) => serde_json::from_str(t).map_err(err)?,
        None => standard_signatures(),
    };
    to_py(py, &analyze(&r, &cfg.pixel, &sigs))
}

/// Associative rules mined from a recognition log.
#[pyfunction]
#[pyo3(signature = (log, min_support = None, min_p = None, horizon = None, absence = None))]
fn mine<'py>(
    py: Python<'py>,
    log: &str,
    min_support: Option<u64>,
    min_p: Option<f64>,
    horizon: Option<u64>,
    absence: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = Config::default();
    let m = &mut cfg.mine;
    m.min_support = min_support.unwrap_or(m.min_support);
    m.min_p = min_p.unwrap_or(m.min_p);
    m.horizon = horizon.unwrap_or(m.horizon);
    m.absence = absence.unwrap_or(m.absence);
    cfg.check().map_err(err)?;
    let events = RecognitionLog::parse(log).map_err(err)?;
    to_py(py, &mine_rules(&events, &cfg.mine).map_err(err)?)
}

/// Best-first search on a problem given as JSON.
#[pyfunction]
#[pyo3(signature = (problem, budget = 100_000))]
fn solve_problem<'py>(py: Python<'py>, problem: &str, budget: usize) -> PyResult<Bound<'py, PyAny>> {
    let p: ProblemSpec = serde_json::from_str(problem).map_err(err)?;
    to_py(py, &solve(&p, budget).map_err(err)?)
}

/// Solution cache kept across calls.
#[pyclass(name = "SolutionCache", module = "structcalc_py")]
struct PyCache {
    inner: SolutionCache,
}

#[pymethods]
impl PyCache {
    /// `mask` is sidecar text; its `mask` lines define what the cache
    /// abstracts away.
    #[new]
    #[pyo3(signature = (mask = None))]
    fn new(mask: Option<&str>) -> PyResult<Self> {
        let mask = match mask {
            Some(t) => Sidecar::from_text(t).map_err(err)?.mask,
            None => Default::default(),
        };
        Ok(PyCache {
            inner: SolutionCache::new(mask),
        })
    }

    #[pyo3(signature = (problem, budget = 100_000))]
    fn solve<'py>(&mut self, py: Python<'py>, problem: &str, budget: usize) -> PyResult<Bound<'py, PyAny>> {
        let p: ProblemSpec = serde_json::from_str(problem).map_err(err)?;
        to_py(py, &solve_with_cache(&p, &mut self.inner, budget).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCache {
            inner: serde_json::from_str(text).map_err(err)?,
        })
    }
}

/// Polygon corpus run: summary and per-item results.
#[pyfunction]
#[pyo3(signature = (seed = 42, config = None))]
fn demo_polygons<'py>(py: Python<'py>, seed: u64, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(config)?;
    let run = run_demo(seed, &cfg.pixel, &standard_signatures());
    to_py(py, &serde_json::json!({"passed": run.passed(), "summary": run.summary, "items": run.items}))
}

#[pymodule]
fn structcalc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add_class::<PyCache>()?;
    m.add_function(wrap_pyfunction!(analyze_image, m)?)?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(solve_problem, m)?)?;
    m.add_function(wrap_pyfunction!(demo_polygons, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
