//! Moving 2008-scheme labels onto the 2020 scheme: direct remapping via
//! the correspondence table, cluster-conditioned split rules, keyword-query
//! corpus construction, and curation overrides.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Publication, Store};
use crate::features::{contains_subsequence, tokenize};
use crate::taxonomy::{CorrespondenceTable, ForCode, Level, MappingKind, Scheme, TaxonomyError};
use crate::weaklabel::{dedup_examples, sort_examples, LabeledExample, Provenance};

#[derive(Debug, Error)]
pub enum RemapError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("query spec for {0} has neither must terms nor any terms")]
    EmptySpec(String),
    #[error("override rows both add and remove ({publication_id}, {code})")]
    ConflictingOverride { publication_id: String, code: String },
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

fn io_err(path: &Path, source: std::io::Error) -> RemapError {
    RemapError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A mined rule: within `cluster_id`, labels on `source_group_2008` move
/// to `target_group_2020`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRule {
    pub source_group_2008: ForCode,
    pub cluster_id: i64,
    pub target_group_2020: ForCode,
    /// Number of distinct evidence publications behind the rule.
    pub support: usize,
}

/// Outcome of the direct-remap pass: labels moved to the 2020 scheme and
/// labels left untouched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RemapSplit {
    pub remapped: Vec<LabeledExample>,
    pub residual: Vec<LabeledExample>,
}

/// Remaps labels whose 4-digit group has a unanimous direct 2020 target.
///
/// Remapped labels keep their weight and filter status and take provenance
/// `Remapped`. Everything else lands in `residual` untouched; together the
/// two sides partition the input.
pub fn direct_remap(
    labels_2008: Vec<LabeledExample>,
    table: &CorrespondenceTable,
) -> Result<RemapSplit, RemapError> {
    let mut split = RemapSplit::default();
    // One table lookup per distinct group.
    let mut cache: BTreeMap<ForCode, Option<ForCode>> = BTreeMap::new();
    for label in labels_2008 {
        let target = match cache.get(&label.code) {
            Some(t) => t.clone(),
            None => {
                let t = table.direct_group_target(&label.code)?;
                cache.insert(label.code.clone(), t.clone());
                t
            }
        };
        match target {
            Some(group_2020) => split.remapped.push(LabeledExample {
                publication_id: label.publication_id,
                code: group_2020,
                provenance: Provenance::Remapped,
                weight: label.weight,
                filtered: label.filtered,
            }),
            None => split.residual.push(label),
        }
    }
    sort_examples(&mut split.remapped);
    sort_examples(&mut split.residual);
    Ok(split)
}

/// Mines (source group, cluster) pairs where every piece of 6-digit
/// evidence Direct-maps into the same 2020 group.
///
/// Evidence rows whose code the table does not know, or whose entry is
/// Split or Deleted, contribute nothing. Pairs with mixed targets or
/// fewer than `min_support` distinct publications emit no rule.
pub fn mine_split_rules(
    evidence: &[(String, ForCode)],
    table: &CorrespondenceTable,
    clusters: &BTreeMap<String, i64>,
    min_support: usize,
) -> Vec<SplitRule> {
    // (source group, cluster) -> (target groups seen, distinct publications)
    type Bucket<'a> = (BTreeSet<ForCode>, BTreeSet<&'a str>);
    let mut buckets: BTreeMap<(ForCode, i64), Bucket> = BTreeMap::new();
    for (publication_id, code) in evidence {
        if code.level() != Level::Field || code.scheme() != Scheme::For2008 {
            log::warn!("split-rule evidence '{code}' is not a 6-digit 2008 code; skipped");
            continue;
        }
        let Some(cluster) = clusters.get(publication_id) else {
            continue;
        };
        let Some(entry) = table.entry(code) else {
            continue;
        };
        if entry.kind != MappingKind::Direct {
            continue;
        }
        let source_group = code.parent().expect("6-digit code has a parent");
        let target_group = entry.targets[0].group().expect("field code has a group");
        let bucket = buckets.entry((source_group, *cluster)).or_default();
        bucket.0.insert(target_group);
        bucket.1.insert(publication_id);
    }
    buckets
        .into_iter()
        .filter_map(|((source, cluster), (targets, publications))| {
            if targets.len() == 1 && publications.len() >= min_support {
                Some(SplitRule {
                    source_group_2008: source,
                    cluster_id: cluster,
                    target_group_2020: targets.into_iter().next().unwrap(),
                    support: publications.len(),
                })
            } else {
                None
            }
        })
        .collect()
}

/// Applies mined rules to residual labels: a label whose publication's
/// cluster matches a rule for its source group becomes a 2020 label.
pub fn apply_split_rules(
    residual: Vec<LabeledExample>,
    rules: &[SplitRule],
    clusters: &BTreeMap<String, i64>,
) -> RemapSplit {
    let index: BTreeMap<(&ForCode, i64), &ForCode> = rules
        .iter()
        .map(|r| {
            (
                (&r.source_group_2008, r.cluster_id),
                &r.target_group_2020,
            )
        })
        .collect();
    let mut split = RemapSplit::default();
    for label in residual {
        let target = clusters
            .get(&label.publication_id)
            .and_then(|cluster| index.get(&(&label.code, *cluster)));
        match target {
            Some(group_2020) => split.remapped.push(LabeledExample {
                publication_id: label.publication_id,
                code: (*group_2020).clone(),
                provenance: Provenance::Remapped,
                weight: label.weight,
                filtered: label.filtered,
            }),
            None => split.residual.push(label),
        }
    }
    sort_examples(&mut split.remapped);
    sort_examples(&mut split.residual);
    split
}

/// Splits off labels whose 2008 group consists entirely of Deleted table
/// entries; those are dropped from the pipeline with a logged count.
pub fn drop_deleted_groups(
    residual: Vec<LabeledExample>,
    table: &CorrespondenceTable,
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut cache: BTreeMap<ForCode, bool> = BTreeMap::new();
    for label in residual {
        let is_deleted = *cache.entry(label.code.clone()).or_insert_with(|| {
            let children = table.group_children(&label.code);
            !children.is_empty() && children.iter().all(|e| e.kind == MappingKind::Deleted)
        });
        if is_deleted {
            dropped.push(label);
        } else {
            kept.push(label);
        }
    }
    if !dropped.is_empty() {
        log::info!("dropped {} labels on deleted 2008 groups", dropped.len());
    }
    (kept, dropped)
}

/// Which publication fields a query searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchField {
    Title,
    Abstract,
}

/// An expert-authored keyword query that builds a reference corpus for one
/// 2020 code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    /// 4- or 6-digit 2020 code the matches receive (coarsened to 4-digit).
    pub target_code: String,
    #[serde(default)]
    pub must: Vec<String>,
    #[serde(default)]
    pub any: Vec<String>,
    #[serde(default)]
    pub not: Vec<String>,
    /// Defaults to both fields when absent.
    #[serde(default)]
    pub fields: Vec<SearchField>,
}

impl QuerySpec {
    fn searched_fields(&self) -> Vec<SearchField> {
        if self.fields.is_empty() {
            vec![SearchField::Title, SearchField::Abstract]
        } else {
            self.fields.clone()
        }
    }
}

fn field_tokens(publication: &Publication, fields: &[SearchField]) -> Vec<Vec<String>> {
    fields
        .iter()
        .map(|f| match f {
            SearchField::Title => tokenize(&publication.title),
            SearchField::Abstract => tokenize(&publication.abstract_text),
        })
        .collect()
}

fn phrase_in_any(fields: &[Vec<String>], phrase: &[String]) -> bool {
    fields.iter().any(|tokens| contains_subsequence(tokens, phrase))
}

/// Reads query specs from JSONL (keys `target_code,must,any,not,fields`).
pub fn read_query_specs(path: &Path) -> Result<Vec<QuerySpec>, RemapError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut specs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: QuerySpec =
            serde_json::from_str(&line).map_err(|e| RemapError::MalformedRow {
                path: path.display().to_string(),
                line: i + 1,
                reason: e.to_string(),
            })?;
        specs.push(spec);
    }
    Ok(specs)
}

/// Labels every publication matching the query with the spec's target
/// code at the 4-digit level, provenance `KeywordQuery`.
///
/// A match requires every `must` phrase, at least one `any` phrase when
/// `any` is nonempty, and no `not` phrase, each checked as a contiguous
/// token sequence within the searched fields.
pub fn keyword_corpus(spec: &QuerySpec, store: &Store) -> Result<Vec<LabeledExample>, RemapError> {
    if spec.must.is_empty() && spec.any.is_empty() {
        return Err(RemapError::EmptySpec(spec.target_code.clone()));
    }
    let target = ForCode::parse(&spec.target_code, Scheme::For2020)?;
    let target = match target.level() {
        Level::Field => target.parent().expect("6-digit code has a parent"),
        Level::Group => target,
        Level::Division => {
            return Err(RemapError::MalformedRow {
                path: String::new(),
                line: 0,
                reason: format!("query target '{target}' is division-level"),
            })
        }
    };
    let fields = spec.searched_fields();
    let must: Vec<Vec<String>> = spec.must.iter().map(|p| tokenize(p)).collect();
    let any: Vec<Vec<String>> = spec.any.iter().map(|p| tokenize(p)).collect();
    let not: Vec<Vec<String>> = spec.not.iter().map(|p| tokenize(p)).collect();

    let mut examples = Vec::new();
    for publication in store.publications() {
        let tokens = field_tokens(publication, &fields);
        if !must.iter().all(|phrase| phrase_in_any(&tokens, phrase)) {
            continue;
        }
        if !any.is_empty() && !any.iter().any(|phrase| phrase_in_any(&tokens, phrase)) {
            continue;
        }
        if not.iter().any(|phrase| phrase_in_any(&tokens, phrase)) {
            continue;
        }
        examples.push(LabeledExample::new(
            publication.id.clone(),
            target.clone(),
            Provenance::KeywordQuery,
        ));
    }
    sort_examples(&mut examples);
    examples.dedup();
    Ok(examples)
}

/// A curation decision on one (publication, 2020 code) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverrideAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub publication_id: String,
    pub code: ForCode,
    pub action: OverrideAction,
}

/// Reads overrides from CSV `publication_id,code_2020,action` and rejects
/// pairs carrying both actions.
pub fn read_overrides(path: &Path) -> Result<Vec<Override>, RemapError> {
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
    let mut overrides = Vec::new();
    let mut seen: BTreeMap<(String, ForCode), OverrideAction> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| RemapError::MalformedRow {
            path: path_str.clone(),
            line,
            reason: e.to_string(),
        })?;
        if record.len() < 3 {
            return Err(RemapError::MalformedRow {
                path: path_str,
                line,
                reason: format!("expected 3 columns, got {}", record.len()),
            });
        }
        let publication_id = record[0].trim().to_string();
        let code = ForCode::parse(&record[1], Scheme::For2020).map_err(|e| {
            RemapError::MalformedRow {
                path: path_str.clone(),
                line,
                reason: e.to_string(),
            }
        })?;
        if code.level() != Level::Group {
            return Err(RemapError::MalformedRow {
                path: path_str,
                line,
                reason: format!("override code '{code}' is not 4-digit"),
            });
        }
        let action = match record[2].trim() {
            "Add" | "add" => OverrideAction::Add,
            "Remove" | "remove" => OverrideAction::Remove,
            other => {
                return Err(RemapError::MalformedRow {
                    path: path_str,
                    line,
                    reason: format!("unknown action '{other}'"),
                })
            }
        };
        let key = (publication_id.clone(), code.clone());
        if let Some(previous) = seen.get(&key) {
            if *previous != action {
                return Err(RemapError::ConflictingOverride {
                    publication_id,
                    code: code.to_string(),
                });
            }
        }
        seen.insert(key, action.clone());
        overrides.push(Override {
            publication_id,
            code,
            action,
        });
    }
    Ok(overrides)
}

/// Applies curation overrides. Remove deletes every label carrying the
/// pair regardless of provenance; Add inserts an `Override` label. The
/// result is independent of override row order.
pub fn apply_overrides(
    labels: Vec<LabeledExample>,
    overrides: &[Override],
) -> Vec<LabeledExample> {
    let removes: BTreeSet<(&str, &ForCode)> = overrides
        .iter()
        .filter(|o| o.action == OverrideAction::Remove)
        .map(|o| (o.publication_id.as_str(), &o.code))
        .collect();
    let mut result: Vec<LabeledExample> = labels
        .into_iter()
        .filter(|l| !removes.contains(&(l.publication_id.as_str(), &l.code)))
        .collect();
    for o in overrides {
        if o.action == OverrideAction::Add {
            result.push(LabeledExample::new(
                o.publication_id.clone(),
                o.code.clone(),
                Provenance::Override,
            ));
        }
    }
    dedup_examples(&mut result);
    result
}

/// Writes mined rules as CSV
/// `source_group_2008,cluster_id,target_group_2020,support`.
pub fn write_rules(path: &Path, rules: &[SplitRule]) -> Result<(), RemapError> {
    let mut out = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    out.write_all(b"source_group_2008,cluster_id,target_group_2020,support\n")
        .map_err(|e| io_err(path, e))?;
    for rule in rules {
        writeln!(
            out,
            "{},{},{},{}",
            rule.source_group_2008, rule.cluster_id, rule.target_group_2020, rule.support
        )
        .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Store;
    use crate::weaklabel::FilterStatus;

    fn code(digits: &str, scheme: Scheme) -> ForCode {
        ForCode::parse(digits, scheme).unwrap()
    }

    fn g08(digits: &str) -> ForCode {
        code(digits, Scheme::For2008)
    }

    fn g20(digits: &str) -> ForCode {
        code(digits, Scheme::For2020)
    }

    fn write_file(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn fixture_table(dir: &Path) -> CorrespondenceTable {
        // 1108 direct-unanimous into 3208; 1701 split; 1001 deleted;
        // 0601 direct but into two groups.
        let path = write_file(
            dir,
            "corr.csv",
            "source_2008,target_2020\n\
             110801,320801\n\
             110803,320803\n\
             170101,320301\n\
             170101,520101\n\
             170102,520102\n\
             060101,310101\n\
             060102,420101\n\
             100101,\n",
        );
        CorrespondenceTable::load(&path).unwrap()
    }

    #[test]
    fn direct_remap_partitions_input() {
        let dir = tempfile::tempdir().unwrap();
        let table = fixture_table(dir.path());
        let labels = vec![
            LabeledExample::new("p1", g08("1108"), Provenance::GrantPropagation),
            LabeledExample::new("p2", g08("1701"), Provenance::GrantPropagation),
            LabeledExample::new("p3", g08("0601"), Provenance::Contributed),
        ];
        let split = direct_remap(labels.clone(), &table).unwrap();
        assert_eq!(split.remapped.len(), 1);
        assert_eq!(split.remapped[0].code, g20("3208"));
        assert_eq!(split.remapped[0].provenance, Provenance::Remapped);
        assert_eq!(split.residual.len(), 2);
        assert_eq!(split.remapped.len() + split.residual.len(), labels.len());

        let empty = direct_remap(Vec::new(), &table).unwrap();
        assert!(empty.remapped.is_empty() && empty.residual.is_empty());
    }

    #[test]
    fn direct_remap_carries_weight_and_status() {
        let dir = tempfile::tempdir().unwrap();
        let table = fixture_table(dir.path());
        let mut label = LabeledExample::new("p1", g08("1108"), Provenance::JournalTitle);
        label.weight = 2.5;
        label.filtered = FilterStatus::Accepted;
        let split = direct_remap(vec![label], &table).unwrap();
        assert_eq!(split.remapped[0].weight, 2.5);
        assert_eq!(split.remapped[0].filtered, FilterStatus::Accepted);
    }

    #[test]
    fn direct_remap_unknown_group_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let table = fixture_table(dir.path());
        let labels = vec![LabeledExample::new(
            "p1",
            g08("2201"),
            Provenance::GrantPropagation,
        )];
        assert!(direct_remap(labels, &table).is_err());
    }

    #[test]
    fn split_rules_require_unanimity_and_support() {
        let dir = tempfile::tempdir().unwrap();
        let table = fixture_table(dir.path());
        let mut clusters = BTreeMap::new();
        let mut evidence = Vec::new();
        // Cluster 1: five pubs, all 170101 -> 320301? No: 170101 is Split,
        // so it contributes nothing. Use 170102 (Direct into 5201).
        for i in 0..5 {
            let id = format!("a{i}");
            clusters.insert(id.clone(), 1);
            evidence.push((id, g08("170102")));
        }
        // Cluster 2: unanimous but support 3 < 5.
        for i in 0..3 {
            let id = format!("b{i}");
            clusters.insert(id.clone(), 2);
            evidence.push((id, g08("170102")));
        }
        // Cluster 3: mixed targets within group 0601.
        for i in 0..6 {
            let id = format!("c{i}");
            clusters.insert(id.clone(), 3);
            evidence.push((
                id,
                if i % 2 == 0 { g08("060101") } else { g08("060102") },
            ));
        }
        let rules = mine_split_rules(&evidence, &table, &clusters, 5);
        assert_eq!(
            rules,
            vec![SplitRule {
                source_group_2008: g08("1701"),
                cluster_id: 1,
                target_group_2020: g20("5201"),
                support: 5,
            }]
        );
    }

    #[test]
    fn split_kind_evidence_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let table = fixture_table(dir.path());
        let mut clusters = BTreeMap::new();
        let mut evidence = Vec::new();
        for i in 0..10 {
            let id = format!("s{i}");
            clusters.insert(id.clone(), 4);
            evidence.push((id, g08("170101"))); // Split entry
        }
        assert!(mine_split_rules(&evidence, &table, &clusters, 5).is_empty());
    }

    #[test]
    fn apply_split_rules_matches_cluster_and_group() {
        let rules = vec![SplitRule {
            source_group_2008: g08("1701"),
            cluster_id: 7,
            target_group_2020: g20("5201"),
            support: 9,
        }];
        let mut clusters = BTreeMap::new();
        clusters.insert("p1".to_string(), 7);
        clusters.insert("p2".to_string(), 8);
        let residual = vec![
            LabeledExample::new("p1", g08("1701"), Provenance::GrantPropagation),
            LabeledExample::new("p2", g08("1701"), Provenance::GrantPropagation),
            LabeledExample::new("p3", g08("1701"), Provenance::GrantPropagation),
        ];
        let split = apply_split_rules(residual, &rules, &clusters);
        assert_eq!(split.remapped.len(), 1);
        assert_eq!(split.remapped[0].publication_id, "p1");
        assert_eq!(split.remapped[0].code, g20("5201"));
        // p2: cluster without a rule; p3: unknown cluster.
        assert_eq!(split.residual.len(), 2);

        // Idempotent on its remapped output: 2020-scheme labels match no
        // 2008-scheme rule source.
        let again = apply_split_rules(split.remapped.clone(), &rules, &clusters);
        assert!(again.remapped.is_empty());
        assert_eq!(again.residual, split.remapped);
    }

    #[test]
    fn deleted_groups_are_dropped_with_count() {
        let dir = tempfile::tempdir().unwrap();
        let table = fixture_table(dir.path());
        let residual = vec![
            LabeledExample::new("p1", g08("1001"), Provenance::GrantPropagation),
            LabeledExample::new("p2", g08("1701"), Provenance::GrantPropagation),
        ];
        let (kept, dropped) = drop_deleted_groups(residual, &table);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].code, g08("1701"));
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].code, g08("1001"));
    }

    fn keyword_store(dir: &Path) -> Store {
        let pubs = write_file(
            dir,
            "pubs.jsonl",
            r#"{"id":"p1","doi":null,"title":"Advances in quantum computing","abstract":"","year":2020,"record_type":"Article"}
{"id":"p2","doi":null,"title":"Classical algorithms","abstract":"a survey of quantum computing methods","year":2020,"record_type":"Article"}
{"id":"p3","doi":null,"title":"Quantum computing for chemistry","abstract":"includes benchmark data","year":2021,"record_type":"Article"}
{"id":"p4","doi":null,"title":"Unrelated work","abstract":"nothing to see","year":2021,"record_type":"Article"}
"#,
        );
        let mut store = Store::new();
        store.ingest_publications(&pubs).unwrap();
        store
    }

    #[test]
    fn keyword_corpus_respects_field_restriction() {
        let dir = tempfile::tempdir().unwrap();
        let store = keyword_store(dir.path());
        let spec = QuerySpec {
            target_code: "460299".to_string(),
            must: vec!["quantum computing".to_string()],
            any: vec![],
            not: vec![],
            fields: vec![SearchField::Title],
        };
        let examples = keyword_corpus(&spec, &store).unwrap();
        let ids: Vec<&str> = examples.iter().map(|e| e.publication_id.as_str()).collect();
        // p2 has the phrase only in its abstract.
        assert_eq!(ids, vec!["p1", "p3"]);
        assert!(examples.iter().all(|e| e.code == g20("4602")));
        assert!(examples.iter().all(|e| e.provenance == Provenance::KeywordQuery));
    }

    #[test]
    fn keyword_corpus_not_terms_exclude() {
        let dir = tempfile::tempdir().unwrap();
        let store = keyword_store(dir.path());
        let spec = QuerySpec {
            target_code: "4602".to_string(),
            must: vec!["quantum computing".to_string()],
            any: vec![],
            not: vec!["chemistry".to_string()],
            fields: vec![],
        };
        let examples = keyword_corpus(&spec, &store).unwrap();
        let ids: Vec<&str> = examples.iter().map(|e| e.publication_id.as_str()).collect();
        assert_eq!(ids, vec!["p1", "p2"]);
    }

    #[test]
    fn keyword_corpus_rejects_empty_spec() {
        let dir = tempfile::tempdir().unwrap();
        let store = keyword_store(dir.path());
        let spec = QuerySpec {
            target_code: "4602".to_string(),
            must: vec![],
            any: vec![],
            not: vec!["x".to_string()],
            fields: vec![],
        };
        assert!(matches!(
            keyword_corpus(&spec, &store),
            Err(RemapError::EmptySpec(_))
        ));
    }

    #[test]
    fn overrides_commute_and_conflict_detection_works() {
        let dir = tempfile::tempdir().unwrap();
        let labels = vec![
            LabeledExample::new("p1", g20("3208"), Provenance::Remapped),
            LabeledExample::new("p2", g20("5201"), Provenance::Remapped),
        ];
        let path = write_file(
            dir.path(),
            "overrides.csv",
            "publication_id,code_2020,action\np1,3208,Remove\np3,4602,Add\n",
        );
        let overrides = read_overrides(&path).unwrap();
        let result = apply_overrides(labels.clone(), &overrides);
        assert_eq!(result.len(), 2);
        assert!(result.iter().any(|l| l.publication_id == "p2"));
        assert!(result
            .iter()
            .any(|l| l.publication_id == "p3" && l.provenance == Provenance::Override));
        assert!(!result.iter().any(|l| l.publication_id == "p1"));

        // Any permutation yields the identical label set.
        let mut reversed = overrides.clone();
        reversed.reverse();
        assert_eq!(apply_overrides(labels, &reversed), result);

        let conflict = write_file(
            dir.path(),
            "conflict.csv",
            "publication_id,code_2020,action\np1,3208,Remove\np1,3208,Add\n",
        );
        assert!(matches!(
            read_overrides(&conflict).unwrap_err(),
            RemapError::ConflictingOverride { .. }
        ));
    }

    #[test]
    fn add_on_unlabeled_publication_creates_single_label() {
        let overrides = vec![Override {
            publication_id: "solo".to_string(),
            code: g20("4602"),
            action: OverrideAction::Add,
        }];
        let result = apply_overrides(Vec::new(), &overrides);
        assert_eq!(result.len(), 1);
        assert_eq!(result[0].provenance, Provenance::Override);
    }

    #[test]
    fn rules_csv_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let rules = vec![SplitRule {
            source_group_2008: g08("1701"),
            cluster_id: 7,
            target_group_2020: g20("5201"),
            support: 9,
        }];
        let path = dir.path().join("rules.csv");
        write_rules(&path, &rules).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "source_group_2008,cluster_id,target_group_2020,support\n1701,7,5201,9\n"
        );
    }
}
