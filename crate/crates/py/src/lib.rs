//! Python bindings for the core types and operations: code parsing and
//! hierarchy, the correspondence table, tokenization and TF-IDF, the
//! cluster-share filter, and classifier training/prediction.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use recat_core::classifier::{train, TrainConfig, TrainingExample, TrainingSet};
use recat_core::corpus::BaselineLabels;
use recat_core::features::{doc_segments, tokenize as core_tokenize, Vocabulary};
use recat_core::taxonomy::{CorrespondenceTable, ForCode, MappingKind, Scheme};
use recat_core::weaklabel::cluster_code_share;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scheme(scheme: &str) -> PyResult<Scheme> {
    Scheme::parse(scheme).map_err(value_error)
}

/// A validated FoR code tagged with its scheme.
#[pyclass(name = "ForCode", frozen)]
struct PyForCode(ForCode);

#[pymethods]
impl PyForCode {
    #[new]
    fn new(digits: &str, scheme: &str) -> PyResult<Self> {
        let scheme = parse_scheme(scheme)?;
        Ok(PyForCode(ForCode::parse(digits, scheme).map_err(value_error)?))
    }

    #[getter]
    fn digits(&self) -> &str {
        self.0.digits()
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.0.scheme().as_str()
    }

    #[getter]
    fn level(&self) -> &'static str {
        match self.0.level() {
            recat_core::taxonomy::Level::Division => "Division",
            recat_core::taxonomy::Level::Group => "Group",
            recat_core::taxonomy::Level::Field => "Field",
        }
    }

    fn parent(&self) -> PyResult<PyForCode> {
        Ok(PyForCode(self.0.parent().map_err(value_error)?))
    }

    fn division(&self) -> PyForCode {
        PyForCode(self.0.division())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("ForCode('{}', '{}')", self.0.digits(), self.0.scheme())
    }

    fn __eq__(&self, other: &PyForCode) -> bool {
        self.0 == other.0
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        self.0.hash(&mut hasher);
        hasher.finish()
    }
}

/// Parse and validate a code string.
#[pyfunction]
fn parse_code(text: &str, scheme: &str) -> PyResult<PyForCode> {
    PyForCode::new(text, scheme)
}

/// Case-folded word tokens of a text.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    core_tokenize(text)
}

/// The 6-digit 2008-to-2020 correspondence table.
#[pyclass(name = "CorrespondenceTable", frozen)]
struct PyCorrespondenceTable(CorrespondenceTable);

#[pymethods]
impl PyCorrespondenceTable {
    /// Load the table CSV, optionally with the new-codes list.
    #[staticmethod]
    #[pyo3(signature = (path, new_codes_path=None))]
    fn load(path: PathBuf, new_codes_path: Option<PathBuf>) -> PyResult<Self> {
        let table = match new_codes_path {
            Some(new_codes) => {
                CorrespondenceTable::load_with_new(&path, &new_codes).map_err(value_error)?
            }
            None => CorrespondenceTable::load(&path).map_err(value_error)?,
        };
        Ok(PyCorrespondenceTable(table))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Mapping kind of a 6-digit 2008 code: Direct, Split or Deleted.
    fn kind_of(&self, code_2008: &str) -> PyResult<Option<&'static str>> {
        let code = ForCode::parse(code_2008, Scheme::For2008).map_err(value_error)?;
        Ok(self.0.entry(&code).map(|e| match e.kind {
            MappingKind::Direct => "Direct",
            MappingKind::Split => "Split",
            MappingKind::New => "New",
            MappingKind::Deleted => "Deleted",
        }))
    }

    /// 2020 targets of a 6-digit 2008 code.
    fn targets_of(&self, code_2008: &str) -> PyResult<Vec<String>> {
        let code = ForCode::parse(code_2008, Scheme::For2008).map_err(value_error)?;
        Ok(self
            .0
            .entry(&code)
            .map(|e| e.targets.iter().map(|t| t.digits().to_string()).collect())
            .unwrap_or_default())
    }

    /// The unanimous 4-digit 2020 target of a 2008 group, if any.
    fn direct_group_target(&self, group_2008: &str) -> PyResult<Option<String>> {
        let group = ForCode::parse(group_2008, Scheme::For2008).map_err(value_error)?;
        let target = self.0.direct_group_target(&group).map_err(value_error)?;
        Ok(target.map(|t| t.digits().to_string()))
    }

    fn new_codes(&self) -> Vec<String> {
        self.0
            .new_codes()
            .iter()
            .map(|c| c.digits().to_string())
            .collect()
    }
}

/// An n-gram TF-IDF vocabulary.
#[pyclass(name = "Vocabulary", frozen)]
struct PyVocabulary(Vocabulary);

#[pymethods]
impl PyVocabulary {
    /// Build from (title, abstract) document pairs.
    #[staticmethod]
    #[pyo3(signature = (docs, max_n=2, min_df=2))]
    fn build(docs: Vec<(String, String)>, max_n: usize, min_df: usize) -> PyResult<Self> {
        let segments: Vec<_> = docs.iter().map(|(t, a)| doc_segments(t, a)).collect();
        Ok(PyVocabulary(
            Vocabulary::build(&segments, max_n, min_df).map_err(value_error)?,
        ))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn n_docs(&self) -> usize {
        self.0.n_docs()
    }

    fn term_index(&self, term: &str) -> Option<usize> {
        self.0.term_index(term)
    }

    /// L2-normalized TF-IDF vector as (index, value) pairs.
    #[pyo3(signature = (title, abstract_text=""))]
    fn vectorize(&self, title: &str, abstract_text: &str) -> Vec<(usize, f64)> {
        self.0
            .vectorize(&doc_segments(title, abstract_text))
            .entries()
            .to_vec()
    }
}

/// A trained one-vs-rest linear model.
#[pyclass(name = "Model", frozen)]
struct PyModel(recat_core::classifier::Model);

#[pymethods]
impl PyModel {
    /// Train from parallel lists of (title, abstract) docs and code lists.
    #[staticmethod]
    #[pyo3(signature = (docs, labels, scheme="FoR2020", max_n=2, min_df=2, lambda_=1e-4, epochs=10, seed=0, threshold=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        docs: Vec<(String, String)>,
        labels: Vec<Vec<String>>,
        scheme: &str,
        max_n: usize,
        min_df: usize,
        lambda_: f64,
        epochs: usize,
        seed: u64,
        threshold: f64,
    ) -> PyResult<Self> {
        if docs.len() != labels.len() {
            return Err(value_error("docs and labels must have equal length"));
        }
        let scheme = parse_scheme(scheme)?;
        let segments: Vec<_> = docs.iter().map(|(t, a)| doc_segments(t, a)).collect();
        let vocabulary = Vocabulary::build(&segments, max_n, min_df).map_err(value_error)?;
        let mut set = TrainingSet::default();
        for (i, (segment, codes)) in segments.iter().zip(&labels).enumerate() {
            let mut label_set = std::collections::BTreeSet::new();
            for code in codes {
                let code = ForCode::parse(code, scheme).map_err(value_error)?;
                *set.class_counts.entry(code.clone()).or_insert(0) += 1;
                label_set.insert(code);
            }
            if label_set.is_empty() {
                return Err(value_error(format!("document {i} has no labels")));
            }
            set.examples.push(TrainingExample {
                publication_id: format!("doc{i:06}"),
                vector: vocabulary.vectorize(segment),
                labels: label_set,
                weight: 1.0,
            });
        }
        let config = TrainConfig {
            lambda: lambda_,
            epochs,
            seed,
            threshold,
        };
        Ok(PyModel(
            train(&set, &vocabulary, &config).map_err(value_error)?,
        ))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel(
            recat_core::classifier::Model::load(&path).map_err(value_error)?,
        ))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(value_error)
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.0
            .classes
            .iter()
            .map(|c| c.code.digits().to_string())
            .collect()
    }

    /// Full ranked, scored class list for one document.
    #[pyo3(signature = (title, abstract_text=""))]
    fn predict(&self, title: &str, abstract_text: &str) -> Vec<(String, f64)> {
        self.0
            .predict_text(title, abstract_text)
            .entries()
            .iter()
            .map(|(code, score)| (code.digits().to_string(), *score))
            .collect()
    }

    /// (codes above threshold, derived divisions) for one document.
    #[pyo3(signature = (title, abstract_text=""))]
    fn assign(&self, title: &str, abstract_text: &str) -> (Vec<String>, Vec<String>) {
        let assignment = self.0.assign_text(title, abstract_text);
        (
            assignment
                .codes
                .iter()
                .map(|c| c.digits().to_string())
                .collect(),
            assignment
                .divisions
                .iter()
                .map(|c| c.digits().to_string())
                .collect(),
        )
    }
}

/// Share of `code`'s cluster-known baseline publications sitting in
/// `cluster_id`. `baseline` is a list of (publication_id, code_4digit)
/// pairs; `clusters` maps publication_id to cluster id.
#[pyfunction]
fn share_of_cluster(
    baseline: Vec<(String, String)>,
    clusters: BTreeMap<String, i64>,
    code: &str,
    cluster_id: i64,
) -> PyResult<f64> {
    let code = ForCode::parse(code, Scheme::For2008).map_err(value_error)?;
    let mut labels = BaselineLabels::default();
    for (publication_id, code_text) in baseline {
        let parsed = ForCode::parse(&code_text, Scheme::For2008).map_err(value_error)?;
        labels.insert(publication_id, parsed);
    }
    cluster_code_share(&code, cluster_id, &labels, &clusters).map_err(value_error)
}

#[pymodule]
fn recat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForCode>()?;
    m.add_class::<PyCorrespondenceTable>()?;
    m.add_class::<PyVocabulary>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(parse_code, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(share_of_cluster, m)?)?;
    Ok(())
}
