//! Python bindings. Build with `--features extension-module` and import as `dialectkit`.
#![allow(clippy::useless_conversion)]

use std::str::FromStr;

use dialectkit::analysis::{self, TermCounts};
use dialectkit::evalkit::{self, PredictionRow, RegionMap};
use dialectkit::gazetteer::{self, Gazetteer};
use dialectkit::lintext::{self, LinearTextModel, Loss, Preset};
use dialectkit::textnorm::{self, NormalizationConfig};
use dialectkit::weaklabel;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parses a JSON string into Python objects.
fn to_python(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyfunction]
#[pyo3(signature = (text, *, mask_pronouns=false, mentions=true, urls=true, digits=true, emoji=true, newlines=true, hashtags=true))]
#[allow(clippy::too_many_arguments)]
fn normalize(
    text: &str,
    mask_pronouns: bool,
    mentions: bool,
    urls: bool,
    digits: bool,
    emoji: bool,
    newlines: bool,
    hashtags: bool,
) -> String {
    let cfg = NormalizationConfig {
        replace_mentions: mentions,
        replace_urls: urls,
        replace_digits: digits,
        replace_emoji: emoji,
        replace_newlines: newlines,
        replace_relative_pronouns: mask_pronouns,
        segment_hashtags: hashtags,
    };
    textnorm::normalize_tweet(text, &cfg)
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    textnorm::tokenize(text).into_vec()
}

#[pyfunction]
fn segment_hashtag(tag: &str) -> Vec<String> {
    textnorm::segment_hashtag(tag)
}

/// `"MSA"`, `"DA"` or `None` for a tweet without an unambiguous trigger.
#[pyfunction]
fn label_by_pronoun(text: &str) -> Option<&'static str> {
    weaklabel::label_by_pronoun(text).map(|l| l.as_str())
}

#[pyclass(name = "Gazetteer", module = "dialectkit")]
struct PyGazetteer(Gazetteer);

#[pymethods]
impl PyGazetteer {
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<&str>) -> PyResult<Self> {
        match path {
            Some(p) => Gazetteer::from_path(p).map(PyGazetteer).map_err(value_err),
            None => Ok(PyGazetteer(Gazetteer::shipped())),
        }
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Country codes a term maps to.
    fn lookup(&self, term: &str) -> Vec<&'static str> {
        self.0.lookup(term).into_iter().map(|c| c.code()).collect()
    }

    /// `(country, matched_terms)` for an unambiguous description; `None`
    /// when nothing matches; raises `ValueError` listing the countries when ambiguous.
    fn match_country(&self, description: &str) -> PyResult<Option<(&'static str, Vec<String>)>> {
        let norm = textnorm::normalize_tweet(description, &NormalizationConfig::default());
        match gazetteer::match_country(&norm, &self.0) {
            None => Ok(None),
            Some(m) if m.ambiguous => Err(PyValueError::new_err(format!(
                "ambiguous description: {}",
                m.matched_terms.join(", ")
            ))),
            Some(m) => Ok(Some((m.country.code(), m.matched_terms))),
        }
    }
}

#[pyclass(name = "Model", module = "dialectkit")]
struct PyModel(LinearTextModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        lintext::load_model(path).map(PyModel).map_err(|e| match e {
            lintext::LintextError::Io { .. } => PyIOError::new_err(e.to_string()),
            other => value_err(other),
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        lintext::save_model(&self.0, path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    /// `(label, confidence, scores)`; scores follow `labels`.
    fn predict(&self, text: &str) -> (String, f64, Vec<f64>) {
        let p = self.0.predict(text);
        let c = p.confidence();
        (p.label, c, p.scores)
    }

    fn predict_many(&self, texts: Vec<String>) -> Vec<String> {
        texts.iter().map(|t| self.0.predict(t).label).collect()
    }

    fn __repr__(&self) -> String {
        format!("Model(labels={:?}, loss={})", self.0.labels(), self.0.loss())
    }
}

/// Trains a model from parallel lists of texts and labels.
#[pyfunction]
#[pyo3(signature = (texts, labels, preset="msa-da", *, seed=1, epochs=None, learning_rate=None, loss=None, l2=None, embed_dim=None, hash_buckets=None))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    texts: Vec<String>,
    labels: Vec<String>,
    preset: &str,
    seed: u64,
    epochs: Option<u32>,
    learning_rate: Option<f32>,
    loss: Option<&str>,
    l2: Option<f32>,
    embed_dim: Option<u32>,
    hash_buckets: Option<u32>,
) -> PyResult<PyModel> {
    if texts.len() != labels.len() {
        return Err(PyValueError::new_err(format!(
            "{} texts but {} labels",
            texts.len(),
            labels.len()
        )));
    }
    let preset = Preset::from_str(preset).map_err(value_err)?;
    let mut fc = preset.feature_config();
    let mut tc = preset.train_config();
    tc.seed = seed;
    if let Some(v) = epochs {
        tc.epochs = v;
    }
    if let Some(v) = learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = loss {
        tc.loss = Loss::from_str(v).map_err(value_err)?;
    }
    if let Some(v) = l2 {
        tc.l2 = v;
    }
    if let Some(v) = embed_dim {
        fc.embed_dim = v;
    }
    if let Some(v) = hash_buckets {
        fc.hash_buckets = v;
    }
    let model = py.allow_threads(|| {
        let pairs = texts.iter().zip(&labels).map(|(t, l)| (t.as_str(), l.as_str()));
        lintext::train(pairs, fc, tc)
    });
    model.map(|(m, _)| PyModel(m)).map_err(value_err)
}

#[pyclass(name = "TermCounts", module = "dialectkit")]
struct PyTermCounts(TermCounts);

#[pymethods]
impl PyTermCounts {
    /// Defaults to the 18 country codes plus `MSA`.
    #[new]
    #[pyo3(signature = (groups=None))]
    fn new(groups: Option<Vec<String>>) -> PyResult<Self> {
        let groups = groups.unwrap_or_else(analysis::default_groups);
        TermCounts::new(groups).map(PyTermCounts).map_err(value_err)
    }

    fn add_text(&mut self, group: &str, text: &str) -> PyResult<()> {
        self.0.add_text(group, text).map_err(value_err)
    }

    fn count(&self, term: &str, group: &str) -> PyResult<u64> {
        let i = self.0.group_index(group).map_err(value_err)?;
        Ok(self.0.count(term, i))
    }

    fn valence(&self, term: &str, group: &str) -> PyResult<f64> {
        let i = self.0.group_index(group).map_err(value_err)?;
        analysis::valence(term, &self.0, i).map_err(value_err)
    }

    /// `[(term, valence, count)]` with the highest valence first.
    #[pyo3(signature = (group, k=20, min_count=1))]
    fn top_words(&self, group: &str, k: usize, min_count: u64) -> PyResult<Vec<(String, f64, u64)>> {
        let ranked = analysis::top_valence_words(&self.0, group, k, min_count).map_err(value_err)?;
        Ok(ranked.into_iter().map(|r| (r.term, r.valence, r.count)).collect())
    }

    /// `(terms, groups, rows)` for the `top_k` most distinctive terms.
    fn vectors(&self, top_k: usize) -> (Vec<String>, Vec<String>, Vec<Vec<f32>>) {
        let vm = analysis::valence_vectors(&self.0, top_k);
        let rows = (0..vm.terms.len()).map(|t| vm.row(t).to_vec()).collect();
        (vm.terms, vm.groups, rows)
    }

    #[getter]
    fn groups(&self) -> Vec<String> {
        self.0.groups().to_vec()
    }
}

/// Full evaluation report as a dict. `regions` maps labels to region
/// names; the built-in grouping is used when omitted.
#[pyfunction]
#[pyo3(signature = (gold, predicted, texts=None, regions=None, bin_width=5))]
fn evaluate(
    py: Python<'_>,
    gold: Vec<String>,
    predicted: Vec<String>,
    texts: Option<Vec<String>>,
    regions: Option<Bound<'_, PyDict>>,
    bin_width: usize,
) -> PyResult<PyObject> {
    let texts = texts.unwrap_or_else(|| vec![String::new(); gold.len()]);
    if texts.len() != gold.len() || predicted.len() != gold.len() {
        return Err(PyValueError::new_err("gold, predicted and texts must have the same length"));
    }
    let regions = match regions {
        Some(d) => RegionMap(d.extract()?),
        None => RegionMap::default(),
    };
    let rows: Vec<PredictionRow> = gold
        .into_iter()
        .zip(predicted)
        .zip(texts)
        .map(|((gold, predicted), text)| PredictionRow { gold, predicted, text })
        .collect();
    let report = evalkit::evaluate(&rows, None, &regions, bin_width).map_err(value_err)?;
    to_python(py, &report)
}

#[pymodule]
#[pyo3(name = "dialectkit")]
fn dialectkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("MODEL_FORMAT_VERSION", lintext::FORMAT_VERSION)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(segment_hashtag, m)?)?;
    m.add_function(wrap_pyfunction!(label_by_pronoun, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PyGazetteer>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyTermCounts>()?;
    Ok(())
}
