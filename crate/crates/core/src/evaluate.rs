//! Model evaluation and report generation: k-fold cross-validation,
//! coverage tables, division distributions, the old-to-new transition
//! matrix, and the derived per-journal code list.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::{train, ClassifierError, TrainConfig, TrainingSet};
use crate::corpus::{period_bucket, Store};
use crate::features::Vocabulary;
use crate::taxonomy::{Bloc, ForCode, SchemeCatalog};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("{n} examples cannot form {k} folds")]
    TooFewExamples { n: usize, k: usize },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Per-publication assigned code sets (4-digit level).
pub type Assignments = BTreeMap<String, BTreeSet<ForCode>>;

/// Precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Metrics of one cross-validation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub test_size: usize,
    /// Publication ids of the held-out fold, sorted.
    pub test_ids: Vec<String>,
    pub per_class: BTreeMap<ForCode, Prf>,
    pub micro: Prf,
    pub macro_avg: Prf,
    /// Fraction of test documents whose top-ranked class is a true label.
    pub accuracy: f64,
    /// Fraction of test documents receiving at least one code.
    pub coverage: f64,
}

/// Seeded k-fold cross-validation: shuffle once, split into k near-equal
/// disjoint folds, train on k-1 and test on the held-out fold.
pub fn cross_validate(
    set: &TrainingSet,
    vocabulary: &Vocabulary,
    k: usize,
    seed: u64,
    config: &TrainConfig,
) -> Result<Vec<FoldReport>, EvaluateError> {
    if k < 2 || set.len() < k {
        return Err(EvaluateError::TooFewExamples { n: set.len(), k });
    }
    let mut indices: Vec<usize> = (0..set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let base = set.len() / k;
    let remainder = set.len() % k;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut cursor = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < remainder);
        folds.push(indices[cursor..cursor + size].to_vec());
        cursor += size;
    }

    let mut reports = Vec::with_capacity(k);
    for (fold_index, test_indices) in folds.iter().enumerate() {
        let test_set: BTreeSet<usize> = test_indices.iter().copied().collect();
        let mut train_split = TrainingSet::default();
        for (i, example) in set.examples.iter().enumerate() {
            if !test_set.contains(&i) {
                for code in &example.labels {
                    *train_split.class_counts.entry(code.clone()).or_insert(0) += 1;
                }
                train_split.examples.push(example.clone());
            }
        }
        let model = train(&train_split, vocabulary, config)?;

        let mut tp: BTreeMap<&ForCode, usize> = BTreeMap::new();
        let mut fp: BTreeMap<&ForCode, usize> = BTreeMap::new();
        let mut fn_: BTreeMap<&ForCode, usize> = BTreeMap::new();
        let mut correct_top = 0usize;
        let mut covered = 0usize;
        for &i in test_indices {
            let example = &set.examples[i];
            let assignment = model.assign(&example.vector)?;
            let ranking = model.predict(&example.vector)?;
            if let Some((top_code, _)) = ranking.top() {
                if example.labels.contains(top_code) {
                    correct_top += 1;
                }
            }
            if !assignment.codes.is_empty() {
                covered += 1;
            }
            for class in model.classes.iter().map(|c| &c.code) {
                let predicted = assignment.codes.contains(class);
                let actual = example.labels.contains(class);
                match (predicted, actual) {
                    (true, true) => *tp.entry(class).or_insert(0) += 1,
                    (true, false) => *fp.entry(class).or_insert(0) += 1,
                    (false, true) => *fn_.entry(class).or_insert(0) += 1,
                    (false, false) => {}
                }
            }
        }
        let classes: Vec<&ForCode> = model.classes.iter().map(|c| &c.code).collect();
        let mut per_class = BTreeMap::new();
        let (mut tp_sum, mut fp_sum, mut fn_sum) = (0, 0, 0);
        for class in &classes {
            let t = tp.get(class).copied().unwrap_or(0);
            let f = fp.get(class).copied().unwrap_or(0);
            let n = fn_.get(class).copied().unwrap_or(0);
            tp_sum += t;
            fp_sum += f;
            fn_sum += n;
            per_class.insert((*class).clone(), Prf::from_counts(t, f, n));
        }
        let macro_avg = {
            let count = per_class.len().max(1) as f64;
            let sum = per_class.values().fold(Prf::default(), |acc, p| Prf {
                precision: acc.precision + p.precision,
                recall: acc.recall + p.recall,
                f1: acc.f1 + p.f1,
            });
            Prf {
                precision: sum.precision / count,
                recall: sum.recall / count,
                f1: sum.f1 / count,
            }
        };
        let test_size = test_indices.len();
        let mut test_ids: Vec<String> = test_indices
            .iter()
            .map(|&i| set.examples[i].publication_id.clone())
            .collect();
        test_ids.sort();
        reports.push(FoldReport {
            fold: fold_index,
            test_size,
            test_ids,
            per_class,
            micro: Prf::from_counts(tp_sum, fp_sum, fn_sum),
            macro_avg,
            accuracy: correct_top as f64 / test_size.max(1) as f64,
            coverage: covered as f64 / test_size.max(1) as f64,
        });
    }
    Ok(reports)
}

/// Percentage with one decimal place, half-up, computed in exact integer
/// arithmetic: round(covered / total * 1000) / 10.
pub fn format_percentage(covered: u64, total: u64) -> String {
    if total == 0 {
        return "0.0".to_string();
    }
    let scaled = covered as u128 * 1000;
    let mut q = scaled / total as u128;
    let r = scaled % total as u128;
    if r * 2 >= total as u128 {
        q += 1;
    }
    format!("{}.{}", q / 10, q % 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageGrouping {
    ByRecordType,
    ByPeriod5y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub group: String,
    pub total: u64,
    pub covered: u64,
}

impl CoverageRow {
    pub fn percentage(&self) -> String {
        format_percentage(self.covered, self.total)
    }
}

/// Per-group totals, covered counts, and percentages. A publication is
/// covered when it has at least one assigned code.
pub fn coverage_report(
    assignments: &Assignments,
    store: &Store,
    grouping: CoverageGrouping,
) -> Vec<CoverageRow> {
    let mut groups: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for publication in store.publications() {
        let key = match grouping {
            CoverageGrouping::ByRecordType => publication.record_type.as_str().to_string(),
            CoverageGrouping::ByPeriod5y => {
                let start = period_bucket(publication.year);
                format!("{}-{}", start, start + 4)
            }
        };
        let entry = groups.entry(key).or_insert((0, 0));
        entry.0 += 1;
        if assignments
            .get(&publication.id)
            .map(|codes| !codes.is_empty())
            .unwrap_or(false)
        {
            entry.1 += 1;
        }
    }
    groups
        .into_iter()
        .map(|(group, (total, covered))| CoverageRow {
            group,
            total,
            covered,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRow {
    pub division: ForCode,
    pub name: String,
    pub count: u64,
    /// Share of all (object, division) affiliations, in percent.
    pub share: f64,
}

/// Division-level distribution of assignments: each (object, division)
/// affiliation counts once, shares sum to 100.
pub fn distribution_report(
    assignments: &Assignments,
    catalog: &SchemeCatalog,
) -> Vec<DistributionRow> {
    let mut counts: BTreeMap<ForCode, u64> = BTreeMap::new();
    for codes in assignments.values() {
        let divisions: BTreeSet<ForCode> = codes.iter().map(|c| c.division()).collect();
        for division in divisions {
            *counts.entry(division).or_insert(0) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    counts
        .into_iter()
        .map(|(division, count)| DistributionRow {
            name: catalog.name(&division).unwrap_or("").to_string(),
            share: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
            division,
            count,
        })
        .collect()
}

/// Row-stochastic percentage overlap between old-scheme divisions (rows)
/// and new-scheme divisions (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub rows: Vec<ForCode>,
    pub cols: Vec<ForCode>,
    /// cells[r][c] in percent; every row sums to 100.
    pub cells: Vec<Vec<f64>>,
    /// Number of leading STEM rows / columns, for the block rule.
    pub stem_rows: usize,
    pub stem_cols: usize,
}

impl TransitionMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn cell(&self, row: &ForCode, col: &ForCode) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some(self.cells[r][c])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("source");
        for col in &self.cols {
            out.push(',');
            out.push_str(col.digits());
        }
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(row.digits());
            for value in &self.cells[r] {
                out.push_str(&format!(",{value:.1}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Orders divisions STEM first, then HASS, then unclassified, ascending
/// within each bloc.
fn bloc_order(divisions: BTreeSet<ForCode>, catalog: &SchemeCatalog) -> (Vec<ForCode>, usize) {
    let mut stem = Vec::new();
    let mut hass = Vec::new();
    let mut other = Vec::new();
    for division in divisions {
        match catalog.bloc(&division) {
            Some(Bloc::Stem) => stem.push(division),
            Some(Bloc::Hass) => hass.push(division),
            None => other.push(division),
        }
    }
    let stem_len = stem.len();
    stem.extend(hass);
    stem.extend(other);
    (stem, stem_len)
}

/// Builds the transition matrix between two labelings of one object
/// universe, at division level.
///
/// An object with m new-scheme divisions contributes 1/m to each of its
/// (old, new) pairings, so rows sum to exactly 100. Objects with no new
/// division contribute nothing; rows with no outputs are omitted.
pub fn transition_matrix(
    labels_old: &Assignments,
    labels_new: &Assignments,
    catalog: &SchemeCatalog,
) -> TransitionMatrix {
    // numerators[r][c] = sum of 1/m over objects; denominators[r] = count.
    let mut numerators: BTreeMap<ForCode, BTreeMap<ForCode, f64>> = BTreeMap::new();
    let mut denominators: BTreeMap<ForCode, u64> = BTreeMap::new();
    let mut col_set: BTreeSet<ForCode> = BTreeSet::new();
    for (object, old_codes) in labels_old {
        let old_divisions: BTreeSet<ForCode> = old_codes.iter().map(|c| c.division()).collect();
        let new_divisions: BTreeSet<ForCode> = labels_new
            .get(object)
            .map(|codes| codes.iter().map(|c| c.division()).collect())
            .unwrap_or_default();
        if new_divisions.is_empty() {
            continue;
        }
        let fraction = 1.0 / new_divisions.len() as f64;
        for old in &old_divisions {
            *denominators.entry(old.clone()).or_insert(0) += 1;
            let row = numerators.entry(old.clone()).or_default();
            for new in &new_divisions {
                *row.entry(new.clone()).or_insert(0.0) += fraction;
                col_set.insert(new.clone());
            }
        }
    }
    let (rows, stem_rows) = bloc_order(denominators.keys().cloned().collect(), catalog);
    let (cols, stem_cols) = bloc_order(col_set, catalog);
    let cells = rows
        .iter()
        .map(|row| {
            let denominator = denominators[row] as f64;
            let numerator_row = &numerators[row];
            cols.iter()
                .map(|col| {
                    100.0 * numerator_row.get(col).copied().unwrap_or(0.0) / denominator
                })
                .collect()
        })
        .collect();
    TransitionMatrix {
        rows,
        cols,
        cells,
        stem_rows,
        stem_cols,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JournalCodes {
    pub journal_id: String,
    pub title: String,
    pub codes: Vec<ForCode>,
}

/// Per journal, the `top_k` most frequent 4-digit codes among its
/// publications from `since_year` onwards. Ties break toward the lower
/// code string; journals with no coded recent publications are omitted.
pub fn journal_list(
    assignments: &Assignments,
    store: &Store,
    top_k: usize,
    since_year: i32,
) -> Vec<JournalCodes> {
    let mut per_journal: BTreeMap<&str, BTreeMap<&ForCode, u64>> = BTreeMap::new();
    for publication in store.publications() {
        if publication.year < since_year {
            continue;
        }
        let Some(journal_id) = &publication.journal_id else {
            continue;
        };
        let Some(codes) = assignments.get(&publication.id) else {
            continue;
        };
        let counts = per_journal.entry(journal_id.as_str()).or_default();
        for code in codes {
            *counts.entry(code).or_insert(0) += 1;
        }
    }
    per_journal
        .into_iter()
        .filter(|(_, counts)| !counts.is_empty())
        .map(|(journal_id, counts)| {
            let mut ranked: Vec<(&ForCode, u64)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            JournalCodes {
                journal_id: journal_id.to_string(),
                title: store
                    .journal(journal_id)
                    .map(|j| j.title.clone())
                    .unwrap_or_default(),
                codes: ranked.into_iter().take(top_k).map(|(c, _)| c.clone()).collect(),
            }
        })
        .collect()
}
