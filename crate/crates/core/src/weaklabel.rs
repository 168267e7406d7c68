//! Weak-supervision label generation: grant-to-publication propagation,
//! journal-title matching, contributed-data import, and the cluster-share
//! noise filter.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BaselineLabels, Store};
use crate::features::{contains_subsequence, tokenize};
use crate::taxonomy::{ForCode, Level, Scheme, SchemeCatalog};

#[derive(Debug, Error)]
pub enum WeakLabelError {
    #[error("code {0} has no baseline publications to compute a share from")]
    NoBaselineForCode(String),
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> WeakLabelError {
    WeakLabelError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Which strategy produced a label.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Provenance {
    GrantPropagation,
    JournalTitle,
    Contributed,
    KeywordQuery,
    Remapped,
    Override,
}

/// Whether the cluster filter has ruled on a label.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum FilterStatus {
    Accepted,
    Rejected,
    Unfiltered,
}

/// One (publication, 4-digit code) assertion: the unit of the training set.
#[derive(Debug, Clone, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LabeledExample {
    pub publication_id: String,
    pub code: ForCode,
    pub provenance: Provenance,
    pub weight: f64,
    pub filtered: FilterStatus,
}

impl LabeledExample {
    pub fn new(publication_id: impl Into<String>, code: ForCode, provenance: Provenance) -> Self {
        LabeledExample {
            publication_id: publication_id.into(),
            code,
            provenance,
            weight: 1.0,
            filtered: FilterStatus::Unfiltered,
        }
    }

    fn sort_key(&self) -> (&str, &ForCode, Provenance) {
        (&self.publication_id, &self.code, self.provenance)
    }
}

/// Canonical ordering used before persistence: (publication, code,
/// provenance).
pub fn sort_examples(examples: &mut [LabeledExample]) {
    examples.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn filter_strength(status: FilterStatus) -> u8 {
    match status {
        FilterStatus::Accepted => 2,
        FilterStatus::Unfiltered => 1,
        FilterStatus::Rejected => 0,
    }
}

/// Sorts and collapses duplicate (publication, code, provenance) triples,
/// keeping the largest weight and the strongest filter status.
pub fn dedup_examples(examples: &mut Vec<LabeledExample>) {
    sort_examples(examples);
    examples.dedup_by(|b, a| {
        if a.sort_key() == b.sort_key() {
            a.weight = a.weight.max(b.weight);
            if filter_strength(b.filtered) > filter_strength(a.filtered) {
                a.filtered = b.filtered;
            }
            true
        } else {
            false
        }
    });
}

/// The filter's verdict on one candidate, with the evidence it used.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    pub example: LabeledExample,
    pub cluster_id: Option<i64>,
    /// Fraction of the code's cluster-known baseline publications that sit
    /// in this candidate's cluster; absent when it could not be computed.
    pub share: Option<f64>,
    pub threshold: f64,
}

/// A grant reference on a publication that resolves to no ingested grant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingGrantRef {
    pub publication_id: String,
    pub grant_id: String,
}

/// Strategy 1: every publication acknowledging a grant receives the
/// 4-digit parent of each of the grant's 6-digit codes.
///
/// Dangling grant references are reported alongside the candidates, never
/// fatal. Candidates come back canonically sorted and deduplicated, all
/// `Unfiltered` pending the filter pass.
pub fn propagate_grant_codes(store: &Store) -> (Vec<LabeledExample>, Vec<DanglingGrantRef>) {
    let mut pairs: BTreeSet<(String, ForCode)> = BTreeSet::new();
    let mut dangling = Vec::new();
    for publication in store.publications() {
        for grant_id in &publication.grant_ids {
            match store.grant(grant_id) {
                Some(grant) => {
                    for code in &grant.codes_2008 {
                        let group = code.parent().expect("6-digit code has a parent");
                        pairs.insert((publication.id.clone(), group));
                    }
                }
                None => dangling.push(DanglingGrantRef {
                    publication_id: publication.id.clone(),
                    grant_id: grant_id.clone(),
                }),
            }
        }
    }
    let examples = pairs
        .into_iter()
        .map(|(publication_id, code)| {
            LabeledExample::new(publication_id, code, Provenance::GrantPropagation)
        })
        .collect();
    (examples, dangling)
}

/// The fraction of `code`'s baseline publications (restricted to those
/// with a known cluster) that belong to `cluster_id`.
pub fn cluster_code_share(
    code: &ForCode,
    cluster_id: i64,
    baseline: &BaselineLabels,
    clusters: &BTreeMap<String, i64>,
) -> Result<f64, WeakLabelError> {
    let publications = baseline.publications_for(code);
    if publications.is_empty() {
        return Err(WeakLabelError::NoBaselineForCode(code.to_string()));
    }
    let known: Vec<i64> = publications
        .iter()
        .filter_map(|p| clusters.get(*p).copied())
        .collect();
    if known.is_empty() {
        // Baseline rows exist but none can be attributed to a cluster.
        return Err(WeakLabelError::NoBaselineForCode(code.to_string()));
    }
    let matching = known.iter().filter(|c| **c == cluster_id).count();
    Ok(matching as f64 / known.len() as f64)
}

/// Runs the cluster-share filter over candidate labels.
///
/// A candidate is `Accepted` iff its share is strictly greater than
/// `threshold`. Candidates whose publication has no known cluster, or
/// whose code has no cluster-known baseline, are `Unfiltered` and
/// retained. Output order is canonical, independent of input order.
pub fn filter_by_cluster(
    candidates: Vec<LabeledExample>,
    baseline: &BaselineLabels,
    clusters: &BTreeMap<String, i64>,
    threshold: f64,
) -> Vec<FilterDecision> {
    // Per-code tallies over the cluster-known baseline.
    let mut per_code: BTreeMap<&ForCode, (usize, BTreeMap<i64, usize>)> = BTreeMap::new();
    for (publication_id, code) in baseline.iter() {
        if let Some(cluster) = clusters.get(publication_id) {
            let entry = per_code.entry(code).or_default();
            entry.0 += 1;
            *entry.1.entry(*cluster).or_insert(0) += 1;
        }
    }
    let mut decisions: Vec<FilterDecision> = candidates
        .into_iter()
        .map(|mut example| {
            let cluster_id = clusters.get(&example.publication_id).copied();
            let share = cluster_id.and_then(|cluster| {
                per_code.get(&example.code).map(|(total, by_cluster)| {
                    by_cluster.get(&cluster).copied().unwrap_or(0) as f64 / *total as f64
                })
            });
            example.filtered = match share {
                Some(s) if s > threshold => FilterStatus::Accepted,
                Some(_) => FilterStatus::Rejected,
                None => FilterStatus::Unfiltered,
            };
            FilterDecision {
                example,
                cluster_id,
                share,
                threshold,
            }
        })
        .collect();
    decisions.sort_by(|a, b| a.example.sort_key().cmp(&b.example.sort_key()));
    decisions
}

/// Strategy 2: journals whose title contains a group-level field name as a
/// contiguous token sequence label every publication they carry.
///
/// Matching is over `scheme`'s 4-digit code names in the catalog.
/// Candidates are `Unfiltered`; the caller passes them through
/// [`filter_by_cluster`].
pub fn journal_title_candidates(
    store: &Store,
    catalog: &SchemeCatalog,
    scheme: Scheme,
) -> Vec<LabeledExample> {
    let group_names: Vec<(&ForCode, Vec<String>)> = catalog
        .codes_at(scheme, Level::Group)
        .into_iter()
        .filter_map(|code| {
            let tokens = tokenize(catalog.name(code)?);
            if tokens.is_empty() {
                None
            } else {
                Some((code, tokens))
            }
        })
        .collect();
    let mut by_journal: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for publication in store.publications() {
        if let Some(journal_id) = &publication.journal_id {
            by_journal
                .entry(journal_id.as_str())
                .or_default()
                .push(&publication.id);
        }
    }
    let mut pairs: BTreeSet<(String, ForCode)> = BTreeSet::new();
    for journal in store.journals() {
        let title_tokens = tokenize(&journal.title);
        let Some(publication_ids) = by_journal.get(journal.id.as_str()) else {
            continue;
        };
        for (code, name_tokens) in &group_names {
            if contains_subsequence(&title_tokens, name_tokens) {
                for publication_id in publication_ids {
                    pairs.insert((publication_id.to_string(), (*code).clone()));
                }
            }
        }
    }
    pairs
        .into_iter()
        .map(|(publication_id, code)| {
            LabeledExample::new(publication_id, code, Provenance::JournalTitle)
        })
        .collect()
}

/// Strategy 3: imports contributed labels from CSV
/// `publication_id,code_2008` (6-digit, coarsened to 4-digit here).
///
/// A 4-digit row is accepted as-is with a warning. Rows referencing
/// unknown publications are skipped and reported.
pub fn import_contributed(
    path: &Path,
    store: &Store,
) -> Result<(Vec<LabeledExample>, Vec<String>), WeakLabelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| {
            io_err(
                path,
                match e.into_kind() {
                    csv::ErrorKind::Io(io) => io,
                    other => std::io::Error::other(format!("{other:?}")),
                },
            )
        })?;
    let path_str = path.display().to_string();
    let mut pairs: BTreeSet<(String, ForCode)> = BTreeSet::new();
    let mut unknown = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| WeakLabelError::MalformedRow {
            path: path_str.clone(),
            line,
            reason: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(WeakLabelError::MalformedRow {
                path: path_str,
                line,
                reason: format!("expected 2 columns, got {}", record.len()),
            });
        }
        let publication_id = record[0].trim().to_string();
        let code =
            ForCode::parse(&record[1], Scheme::For2008).map_err(|e| WeakLabelError::MalformedRow {
                path: path_str.clone(),
                line,
                reason: e.to_string(),
            })?;
        let group = match code.level() {
            Level::Field => code.parent().expect("6-digit code has a parent"),
            Level::Group => {
                log::warn!("{path_str}:{line}: contributed code '{code}' already 4-digit");
                code
            }
            Level::Division => {
                return Err(WeakLabelError::MalformedRow {
                    path: path_str,
                    line,
                    reason: format!("contributed code '{code}' is division-level"),
                });
            }
        };
        if store.publication(&publication_id).is_none() {
            unknown.push(publication_id);
            continue;
        }
        pairs.insert((publication_id, group));
    }
    let examples = pairs
        .into_iter()
        .map(|(publication_id, code)| {
            LabeledExample::new(publication_id, code, Provenance::Contributed)
        })
        .collect();
    Ok((examples, unknown))
}

/// The labels.jsonl row format: a label plus the filter evidence that
/// accompanied it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub publication_id: String,
    pub code: String,
    pub scheme: Scheme,
    pub provenance: Provenance,
    pub weight: f64,
    pub filtered: FilterStatus,
    pub share: Option<f64>,
    pub cluster_id: Option<i64>,
}

impl LabelRecord {
    pub fn from_example(example: &LabeledExample) -> LabelRecord {
        LabelRecord {
            publication_id: example.publication_id.clone(),
            code: example.code.digits().to_string(),
            scheme: example.code.scheme(),
            provenance: example.provenance,
            weight: example.weight,
            filtered: example.filtered,
            share: None,
            cluster_id: None,
        }
    }

    pub fn from_decision(decision: &FilterDecision) -> LabelRecord {
        let mut record = Self::from_example(&decision.example);
        record.share = decision.share;
        record.cluster_id = decision.cluster_id;
        record
    }

    pub fn to_example(&self) -> Result<LabeledExample, WeakLabelError> {
        let code = ForCode::parse(&self.code, self.scheme).map_err(|e| {
            WeakLabelError::MalformedRow {
                path: String::new(),
                line: 0,
                reason: e.to_string(),
            }
        })?;
        Ok(LabeledExample {
            publication_id: self.publication_id.clone(),
            code,
            provenance: self.provenance,
            weight: self.weight,
            filtered: self.filtered,
        })
    }
}

pub fn write_labels(path: &Path, records: &[LabelRecord]) -> Result<(), WeakLabelError> {
    let mut out = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| io_err(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRecord>, WeakLabelError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord =
            serde_json::from_str(&line).map_err(|e| WeakLabelError::MalformedRow {
                path: path.display().to_string(),
                line: i + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}
