//! The document store: publications, grants, journals, cluster
//! assignments, and the baseline label statistics used by the cluster
//! filter.
//!
//! Persistence is plain JSONL/CSV with an in-memory index rebuilt on
//! open. Single writer during ingest; immutable and freely shareable
//! afterwards.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{ForCode, Level, Scheme, TaxonomyError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: missing field '{field}'")]
    MissingField {
        path: String,
        line: usize,
        field: String,
    },
    #[error("{path}:{line}: duplicate id '{id}' within one file")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// The record types the corpus can hold.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum RecordType {
    Article,
    Proceeding,
    Preprint,
    Chapter,
    Monograph,
    Grant,
    Patent,
    PolicyDocument,
    ClinicalTrial,
}

impl RecordType {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordType::Article => "Article",
            RecordType::Proceeding => "Proceeding",
            RecordType::Preprint => "Preprint",
            RecordType::Chapter => "Chapter",
            RecordType::Monograph => "Monograph",
            RecordType::Grant => "Grant",
            RecordType::Patent => "Patent",
            RecordType::PolicyDocument => "PolicyDocument",
            RecordType::ClinicalTrial => "ClinicalTrial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub doi: Option<String>,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    pub year: i32,
    pub record_type: RecordType,
    #[serde(default)]
    pub journal_id: Option<String>,
    #[serde(default)]
    pub grant_ids: Vec<String>,
    #[serde(default)]
    pub cluster_id: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grant {
    pub id: String,
    pub funder: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    /// 6-digit FoR2008 codes assigned to the grant. Serialized as digit
    /// strings to match the grants.jsonl input format.
    #[serde(
        serialize_with = "serialize_codes",
        deserialize_with = "deserialize_codes_2008"
    )]
    pub codes_2008: Vec<ForCode>,
}

fn serialize_codes<S: serde::Serializer>(
    codes: &[ForCode],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(codes.iter().map(|c| c.digits()))
}

fn deserialize_codes_2008<'de, D: serde::Deserializer<'de>>(
    deserializer: D,
) -> Result<Vec<ForCode>, D::Error> {
    let raw: Vec<String> = Vec::deserialize(deserializer)?;
    raw.into_iter()
        .map(|s| ForCode::parse(&s, Scheme::For2008).map_err(serde::de::Error::custom))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Journal {
    pub id: String,
    pub title: String,
}

/// Deduplicated (publication id, 4-digit FoR2008 code) pairs from the
/// legacy mapping, used statistically as the cluster-filter prior.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineLabels {
    pairs: BTreeSet<(String, ForCode)>,
}

impl BaselineLabels {
    pub fn insert(&mut self, publication_id: String, code: ForCode) -> bool {
        self.pairs.insert((publication_id, code))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, ForCode)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Publication ids carrying `code`.
    pub fn publications_for(&self, code: &ForCode) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|(_, c)| c == code)
            .map(|(p, _)| p.as_str())
            .collect()
    }
}

/// Unresolved cross-references found in the store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DanglingReport {
    /// (publication id, journal id) pairs where the journal is unknown.
    pub missing_journals: Vec<(String, String)>,
    /// (publication id, grant id) pairs where the grant is unknown.
    pub missing_grants: Vec<(String, String)>,
}

impl DanglingReport {
    pub fn is_clean(&self) -> bool {
        self.missing_journals.is_empty() && self.missing_grants.is_empty()
    }
}

/// Per-record-type and per-period counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub by_record_type: BTreeMap<RecordType, usize>,
    /// Keyed by bucket start year; buckets are 5 years wide, anchored at 1991.
    pub by_period: BTreeMap<i32, usize>,
}

/// Start year of the 5-year bucket containing `year` (1991-1995,
/// 1996-2000, ...). Buckets extend backwards before 1991 on the same grid.
pub fn period_bucket(year: i32) -> i32 {
    year - (year - 1991).rem_euclid(5)
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    publications: BTreeMap<String, Publication>,
    grants: BTreeMap<String, Grant>,
    journals: BTreeMap<String, Journal>,
    clusters: BTreeMap<String, i64>,
    baseline: BaselineLabels,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    /// Ingests publications from JSONL. Returns the number of records
    /// read. Re-ingesting an id seen in an earlier call overwrites it
    /// with a warning; a duplicate id within one file is an error.
    pub fn ingest_publications(&mut self, path: &Path) -> Result<usize, CorpusError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let reader = BufReader::new(file);
        let path_str = path.display().to_string();
        let mut seen: HashSet<String> = HashSet::new();
        let mut batch = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawPublication =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                    path: path_str.clone(),
                    line: line_no,
                    reason: e.to_string(),
                })?;
            let publication = raw.validate(&path_str, line_no)?;
            if !seen.insert(publication.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    path: path_str,
                    line: line_no,
                    id: publication.id,
                });
            }
            batch.push(publication);
        }
        let count = batch.len();
        for publication in batch {
            if self.publications.contains_key(&publication.id) {
                log::warn!("publication '{}' re-ingested; overwriting", publication.id);
            }
            self.publications.insert(publication.id.clone(), publication);
        }
        Ok(count)
    }

    /// Ingests grants from JSONL.
    pub fn ingest_grants(&mut self, path: &Path) -> Result<usize, CorpusError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let reader = BufReader::new(file);
        let path_str = path.display().to_string();
        let mut seen: HashSet<String> = HashSet::new();
        let mut batch = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawGrant =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                    path: path_str.clone(),
                    line: line_no,
                    reason: e.to_string(),
                })?;
            let grant = raw.validate(&path_str, line_no)?;
            if !seen.insert(grant.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    path: path_str,
                    line: line_no,
                    id: grant.id,
                });
            }
            batch.push(grant);
        }
        let count = batch.len();
        for grant in batch {
            if self.grants.contains_key(&grant.id) {
                log::warn!("grant '{}' re-ingested; overwriting", grant.id);
            }
            self.grants.insert(grant.id.clone(), grant);
        }
        Ok(count)
    }

    /// Ingests journals from CSV `id,title`.
    pub fn ingest_journals(&mut self, path: &Path) -> Result<usize, CorpusError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| io_err(path, into_io(e)))?;
        let path_str = path.display().to_string();
        let mut seen: HashSet<String> = HashSet::new();
        let mut batch = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| CorpusError::MalformedRecord {
                path: path_str.clone(),
                line,
                reason: e.to_string(),
            })?;
            if record.len() < 2 {
                return Err(CorpusError::MissingField {
                    path: path_str,
                    line,
                    field: "title".to_string(),
                });
            }
            let journal = Journal {
                id: record[0].trim().to_string(),
                title: record[1].to_string(),
            };
            if journal.id.is_empty() {
                return Err(CorpusError::MissingField {
                    path: path_str,
                    line,
                    field: "id".to_string(),
                });
            }
            if !seen.insert(journal.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    path: path_str,
                    line,
                    id: journal.id,
                });
            }
            batch.push(journal);
        }
        let count = batch.len();
        for journal in batch {
            if self.journals.contains_key(&journal.id) {
                log::warn!("journal '{}' re-ingested; overwriting", journal.id);
            }
            self.journals.insert(journal.id.clone(), journal);
        }
        Ok(count)
    }

    /// Ingests DOI-to-cluster assignments from CSV `doi,cluster_id`.
    /// A later row for the same DOI overwrites with a warning.
    pub fn ingest_clusters(&mut self, path: &Path) -> Result<usize, CorpusError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| io_err(path, into_io(e)))?;
        let path_str = path.display().to_string();
        let mut count = 0;
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| CorpusError::MalformedRecord {
                path: path_str.clone(),
                line,
                reason: e.to_string(),
            })?;
            if record.len() < 2 {
                return Err(CorpusError::MissingField {
                    path: path_str,
                    line,
                    field: "cluster_id".to_string(),
                });
            }
            let doi = record[0].trim().to_string();
            let cluster_id: i64 =
                record[1]
                    .trim()
                    .parse()
                    .map_err(|_| CorpusError::MalformedRecord {
                        path: path_str.clone(),
                        line,
                        reason: format!("bad cluster id '{}'", &record[1]),
                    })?;
            if let Some(old) = self.clusters.insert(doi.clone(), cluster_id) {
                if old != cluster_id {
                    log::warn!("doi '{doi}': cluster {old} overwritten by {cluster_id}");
                }
            }
            count += 1;
        }
        Ok(count)
    }

    /// Ingests baseline labels from CSV `publication_id,code_2008_4digit`.
    /// Pairs are deduplicated.
    pub fn ingest_baseline(&mut self, path: &Path) -> Result<usize, CorpusError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| io_err(path, into_io(e)))?;
        let path_str = path.display().to_string();
        let mut count = 0;
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| CorpusError::MalformedRecord {
                path: path_str.clone(),
                line,
                reason: e.to_string(),
            })?;
            if record.len() < 2 {
                return Err(CorpusError::MissingField {
                    path: path_str,
                    line,
                    field: "code_2008_4digit".to_string(),
                });
            }
            let code = ForCode::parse(&record[1], Scheme::For2008).map_err(|e| {
                CorpusError::MalformedRecord {
                    path: path_str.clone(),
                    line,
                    reason: e.to_string(),
                }
            })?;
            if code.level() != Level::Group {
                return Err(CorpusError::MalformedRecord {
                    path: path_str.clone(),
                    line,
                    reason: format!("baseline code '{code}' is not 4-digit"),
                });
            }
            self.baseline.insert(record[0].trim().to_string(), code);
            count += 1;
        }
        Ok(count)
    }

    pub fn publications(&self) -> impl Iterator<Item = &Publication> {
        self.publications.values()
    }

    pub fn publication(&self, id: &str) -> Option<&Publication> {
        self.publications.get(id)
    }

    pub fn grants(&self) -> impl Iterator<Item = &Grant> {
        self.grants.values()
    }

    pub fn grant(&self, id: &str) -> Option<&Grant> {
        self.grants.get(id)
    }

    pub fn journals(&self) -> impl Iterator<Item = &Journal> {
        self.journals.values()
    }

    pub fn journal(&self, id: &str) -> Option<&Journal> {
        self.journals.get(id)
    }

    pub fn baseline(&self) -> &BaselineLabels {
        &self.baseline
    }

    pub fn n_publications(&self) -> usize {
        self.publications.len()
    }

    /// The cluster a publication belongs to: its own cluster field if
    /// present, otherwise the DOI lookup. Publications without a DOI can
    /// never match an assignment and stay cluster-unknown.
    pub fn cluster_of(&self, publication: &Publication) -> Option<i64> {
        publication.cluster_id.or_else(|| {
            publication
                .doi
                .as_deref()
                .and_then(|doi| self.clusters.get(doi).copied())
        })
    }

    /// Publication id to cluster id, for every publication with a known
    /// cluster.
    pub fn cluster_index(&self) -> BTreeMap<String, i64> {
        self.publications
            .values()
            .filter_map(|p| self.cluster_of(p).map(|c| (p.id.clone(), c)))
            .collect()
    }

    /// Per-record-type counts and per-5-year-bucket counts.
    pub fn corpus_stats(&self) -> CorpusStats {
        let mut stats = CorpusStats::default();
        for publication in self.publications.values() {
            *stats
                .by_record_type
                .entry(publication.record_type)
                .or_insert(0) += 1;
            *stats
                .by_period
                .entry(period_bucket(publication.year))
                .or_insert(0) += 1;
        }
        stats
    }

    /// Flags every journal_id or grant_ids entry that does not resolve.
    pub fn dangling_report(&self) -> DanglingReport {
        let mut report = DanglingReport::default();
        for publication in self.publications.values() {
            if let Some(journal_id) = &publication.journal_id {
                if !self.journals.contains_key(journal_id) {
                    report
                        .missing_journals
                        .push((publication.id.clone(), journal_id.clone()));
                }
            }
            for grant_id in &publication.grant_ids {
                if !self.grants.contains_key(grant_id) {
                    report
                        .missing_grants
                        .push((publication.id.clone(), grant_id.clone()));
                }
            }
        }
        report
    }

    /// Writes the store into `dir` as one file per record kind, in key
    /// order, so saves are byte-reproducible.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let pubs_path = dir.join("publications.jsonl");
        let mut out = std::fs::File::create(&pubs_path).map_err(|e| io_err(&pubs_path, e))?;
        for publication in self.publications.values() {
            serde_json::to_writer(&mut out, publication)
                .map_err(|e| io_err(&pubs_path, e.into()))?;
            out.write_all(b"\n").map_err(|e| io_err(&pubs_path, e))?;
        }
        let grants_path = dir.join("grants.jsonl");
        let mut out = std::fs::File::create(&grants_path).map_err(|e| io_err(&grants_path, e))?;
        for grant in self.grants.values() {
            serde_json::to_writer(&mut out, grant).map_err(|e| io_err(&grants_path, e.into()))?;
            out.write_all(b"\n").map_err(|e| io_err(&grants_path, e))?;
        }
        let journals_path = dir.join("journals.csv");
        let mut writer = csv::Writer::from_path(&journals_path)
            .map_err(|e| io_err(&journals_path, into_io(e)))?;
        writer
            .write_record(["id", "title"])
            .map_err(|e| io_err(&journals_path, into_io(e)))?;
        for journal in self.journals.values() {
            writer
                .write_record([journal.id.as_str(), journal.title.as_str()])
                .map_err(|e| io_err(&journals_path, into_io(e)))?;
        }
        writer.flush().map_err(|e| io_err(&journals_path, e))?;
        let clusters_path = dir.join("clusters.csv");
        let mut out =
            std::fs::File::create(&clusters_path).map_err(|e| io_err(&clusters_path, e))?;
        out.write_all(b"doi,cluster_id\n")
            .map_err(|e| io_err(&clusters_path, e))?;
        for (doi, cluster) in &self.clusters {
            writeln!(out, "{doi},{cluster}").map_err(|e| io_err(&clusters_path, e))?;
        }
        let baseline_path = dir.join("baseline.csv");
        let mut out =
            std::fs::File::create(&baseline_path).map_err(|e| io_err(&baseline_path, e))?;
        out.write_all(b"publication_id,code_2008_4digit\n")
            .map_err(|e| io_err(&baseline_path, e))?;
        for (publication_id, code) in self.baseline.iter() {
            writeln!(out, "{publication_id},{code}").map_err(|e| io_err(&baseline_path, e))?;
        }
        Ok(())
    }

    /// Rebuilds a store from a directory written by [`Store::save`].
    pub fn open(dir: &Path) -> Result<Store, CorpusError> {
        let mut store = Store::new();
        store.ingest_publications(&dir.join("publications.jsonl"))?;
        store.ingest_grants(&dir.join("grants.jsonl"))?;
        store.ingest_journals(&dir.join("journals.csv"))?;
        store.ingest_clusters(&dir.join("clusters.csv"))?;
        store.ingest_baseline(&dir.join("baseline.csv"))?;
        Ok(store)
    }
}

#[derive(Deserialize)]
struct RawPublication {
    id: Option<String>,
    #[serde(default)]
    doi: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: Option<String>,
    year: Option<i32>,
    record_type: Option<RecordType>,
    #[serde(default)]
    journal_id: Option<String>,
    #[serde(default)]
    grant_ids: Option<Vec<String>>,
    #[serde(default)]
    cluster_id: Option<i64>,
}

impl RawPublication {
    fn validate(self, path: &str, line: usize) -> Result<Publication, CorpusError> {
        let missing = |field: &str| CorpusError::MissingField {
            path: path.to_string(),
            line,
            field: field.to_string(),
        };
        let malformed = |reason: String| CorpusError::MalformedRecord {
            path: path.to_string(),
            line,
            reason,
        };
        let id = self.id.filter(|s| !s.is_empty()).ok_or_else(|| missing("id"))?;
        let title = self.title.ok_or_else(|| missing("title"))?;
        let year = self.year.ok_or_else(|| missing("year"))?;
        if year < 1500 {
            return Err(malformed(format!("year {year} is before 1500")));
        }
        let record_type = self.record_type.ok_or_else(|| missing("record_type"))?;
        let grant_ids = self.grant_ids.unwrap_or_default();
        let mut unique = HashSet::new();
        for grant_id in &grant_ids {
            if !unique.insert(grant_id) {
                return Err(malformed(format!("duplicate grant id '{grant_id}'")));
            }
        }
        Ok(Publication {
            id,
            doi: self.doi.filter(|s| !s.is_empty()),
            title,
            abstract_text: self.abstract_text.unwrap_or_default(),
            year,
            record_type,
            journal_id: self.journal_id.filter(|s| !s.is_empty()),
            grant_ids,
            cluster_id: self.cluster_id,
        })
    }
}

#[derive(Deserialize)]
struct RawGrant {
    id: Option<String>,
    funder: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: Option<String>,
    codes_2008: Option<Vec<String>>,
}

impl RawGrant {
    fn validate(self, path: &str, line: usize) -> Result<Grant, CorpusError> {
        let missing = |field: &str| CorpusError::MissingField {
            path: path.to_string(),
            line,
            field: field.to_string(),
        };
        let id = self.id.filter(|s| !s.is_empty()).ok_or_else(|| missing("id"))?;
        let funder = self.funder.ok_or_else(|| missing("funder"))?;
        let title = self.title.ok_or_else(|| missing("title"))?;
        let raw_codes = self.codes_2008.ok_or_else(|| missing("codes_2008"))?;
        let mut codes = Vec::new();
        for raw in raw_codes {
            let code = ForCode::parse(&raw, Scheme::For2008).map_err(|e| {
                CorpusError::MalformedRecord {
                    path: path.to_string(),
                    line,
                    reason: e.to_string(),
                }
            })?;
            if code.level() != Level::Field {
                return Err(CorpusError::MalformedRecord {
                    path: path.to_string(),
                    line,
                    reason: format!("grant code '{code}' is not 6-digit"),
                });
            }
            codes.push(code);
        }
        Ok(Grant {
            id,
            funder,
            title,
            abstract_text: self.abstract_text.unwrap_or_default(),
            codes_2008: codes,
        })
    }
}

fn into_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    }
}
