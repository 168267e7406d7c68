//! Dataset shaping, one-vs-rest linear classification with hinge loss,
//! and ranked multi-label prediction with derived division codes.
//!
//! Training is seeded stochastic subgradient descent on the primal
//! objective; per-class runs are independent, so they execute in parallel
//! and merge in class order, keeping the persisted model byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Store;
use crate::features::{doc_segments, FeaturesError, SparseVector, Vocabulary};
use crate::taxonomy::{ForCode, TaxonomyError};
use crate::weaklabel::LabeledExample;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("no labels survive shaping; the training set is empty")]
    EmptyLabelSet,
    #[error("training needs at least two classes, got {0}")]
    SingleClass(usize),
    #[error("vector dimension {got} does not match the model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model archive {path}: {reason}")]
    BadModelFile { path: String, reason: String },
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ClassifierError {
    ClassifierError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One publication in the training set: its vector, the union of its
/// label codes, and a sampling weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub publication_id: String,
    pub vector: SparseVector,
    pub labels: BTreeSet<ForCode>,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub examples: Vec<TrainingExample>,
    pub class_counts: BTreeMap<ForCode, usize>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn classes(&self) -> Vec<ForCode> {
        self.class_counts.keys().cloned().collect()
    }
}

/// How per-class target shares are derived.
#[derive(Debug, Clone, PartialEq)]
pub enum ShareMode {
    /// Shares follow the raw pre-shaping distribution, capped at the given
    /// percentile of class sizes.
    Proportional { cap_percentile: f64 },
    /// Every class is allotted an equal share of the label assertions.
    EqualShare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingPolicy {
    pub mode: ShareMode,
    /// Classes below this count are up-weighted rather than resampled.
    pub floor: usize,
    pub seed: u64,
}

impl Default for ShapingPolicy {
    fn default() -> Self {
        ShapingPolicy {
            mode: ShareMode::Proportional {
                cap_percentile: 0.95,
            },
            floor: 0,
            seed: 0,
        }
    }
}

impl ShapingPolicy {
    pub fn describe(&self) -> String {
        match &self.mode {
            ShareMode::Proportional { cap_percentile } => format!(
                "proportional cap_percentile={} floor={} seed={}",
                cap_percentile, self.floor, self.seed
            ),
            ShareMode::EqualShare => {
                format!("equal_share floor={} seed={}", self.floor, self.seed)
            }
        }
    }
}

/// Nearest-rank percentile of class sizes.
fn percentile(sorted_sizes: &[usize], q: f64) -> usize {
    debug_assert!(!sorted_sizes.is_empty());
    let rank = (q * sorted_sizes.len() as f64).ceil() as usize;
    sorted_sizes[rank.clamp(1, sorted_sizes.len()) - 1]
}

fn class_seed(base: u64, code: &ForCode) -> u64 {
    // FNV-1a over the code identity, mixed with the base seed.
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in code.scheme().as_str().bytes().chain(code.digits().bytes()) {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash ^ base
}

/// Builds the training set: one example per publication with the union of
/// its codes, then per-class counts clamped into [floor, cap].
///
/// Classes above their cap are down-sampled by removing the class from
/// deterministically chosen publications (seeded shuffle); classes below
/// the floor keep all members and have them up-weighted by floor/count.
/// Labels referencing publications missing from the store are skipped
/// with a warning.
pub fn shape_dataset(
    labels: &[LabeledExample],
    store: &Store,
    vocabulary: &Vocabulary,
    policy: &ShapingPolicy,
) -> Result<TrainingSet, ClassifierError> {
    // Per-publication label union; weight is the max over its labels.
    let mut by_publication: BTreeMap<&str, (BTreeSet<ForCode>, f64)> = BTreeMap::new();
    for label in labels {
        if store.publication(&label.publication_id).is_none() {
            log::warn!(
                "label ({}, {}) references an unknown publication; skipped",
                label.publication_id,
                label.code
            );
            continue;
        }
        let entry = by_publication
            .entry(&label.publication_id)
            .or_insert_with(|| (BTreeSet::new(), 0.0));
        entry.0.insert(label.code.clone());
        entry.1 = entry.1.max(label.weight);
    }
    if by_publication.is_empty() {
        return Err(ClassifierError::EmptyLabelSet);
    }

    let mut raw_counts: BTreeMap<ForCode, usize> = BTreeMap::new();
    for (codes, _) in by_publication.values() {
        for code in codes {
            *raw_counts.entry(code.clone()).or_insert(0) += 1;
        }
    }
    let total_pairs: usize = raw_counts.values().sum();
    let mut sizes: Vec<usize> = raw_counts.values().copied().collect();
    sizes.sort_unstable();

    let cap_for = |count: usize| -> usize {
        match &policy.mode {
            ShareMode::Proportional { cap_percentile } => {
                percentile(&sizes, *cap_percentile).min(count)
            }
            ShareMode::EqualShare => total_pairs / raw_counts.len(),
        }
    };

    // Down-sample over-cap classes by removing the class from the
    // publications beyond the cap in shuffled order.
    let mut label_sets: BTreeMap<&str, BTreeSet<ForCode>> = by_publication
        .iter()
        .map(|(id, (codes, _))| (*id, codes.clone()))
        .collect();
    for (code, &count) in &raw_counts {
        let cap = cap_for(count);
        if count <= cap {
            continue;
        }
        let mut members: Vec<&str> = label_sets
            .iter()
            .filter(|(_, codes)| codes.contains(code))
            .map(|(id, _)| *id)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(class_seed(policy.seed, code));
        members.shuffle(&mut rng);
        for id in members.into_iter().skip(cap) {
            label_sets.get_mut(id).unwrap().remove(code);
        }
    }
    label_sets.retain(|_, codes| !codes.is_empty());
    if label_sets.is_empty() {
        return Err(ClassifierError::EmptyLabelSet);
    }

    let mut class_counts: BTreeMap<ForCode, usize> = BTreeMap::new();
    for codes in label_sets.values() {
        for code in codes {
            *class_counts.entry(code.clone()).or_insert(0) += 1;
        }
    }
    for code in raw_counts.keys() {
        if !class_counts.contains_key(code) {
            log::warn!("class {code} has no examples after shaping; excluded from the model");
        }
    }

    // Up-weight factor per class that sits below the floor.
    let boost: BTreeMap<&ForCode, f64> = class_counts
        .iter()
        .filter(|(_, count)| **count > 0 && **count < policy.floor)
        .map(|(code, count)| (code, policy.floor as f64 / *count as f64))
        .collect();

    let examples = label_sets
        .into_iter()
        .map(|(id, codes)| {
            let publication = store.publication(id).expect("checked above");
            let base_weight = by_publication[id].1.max(f64::MIN_POSITIVE);
            let factor = codes
                .iter()
                .filter_map(|c| boost.get(c).copied())
                .fold(1.0, f64::max);
            TrainingExample {
                publication_id: id.to_string(),
                vector: vocabulary
                    .vectorize(&doc_segments(&publication.title, &publication.abstract_text)),
                labels: codes,
                weight: base_weight * factor,
            }
        })
        .collect();
    Ok(TrainingSet {
        examples,
        class_counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Decision threshold applied to every class by `assign`.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-4,
            epochs: 10,
            seed: 0,
            threshold: 0.0,
        }
    }
}

/// One binary classifier of the one-vs-rest ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub code: ForCode,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl ClassModel {
    pub fn score(&self, vector: &SparseVector) -> f64 {
        vector.dot_dense(&self.weights) + self.bias
    }
}

/// The trained ensemble plus everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub vocabulary: Vocabulary,
    pub classes: Vec<ClassModel>,
    pub config: TrainConfig,
    /// Free-form provenance (shaping policy, feature params) persisted in
    /// the archive's config snapshot.
    pub extra: BTreeMap<String, String>,
}

/// Ranked, scored class list for one document: descending score, ties
/// broken by ascending code.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    entries: Vec<(ForCode, f64)>,
}

impl Ranking {
    pub fn entries(&self) -> &[(ForCode, f64)] {
        &self.entries
    }

    pub fn top(&self) -> Option<&(ForCode, f64)> {
        self.entries.first()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Codes assigned above threshold, with the derived division set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub codes: BTreeSet<ForCode>,
    pub divisions: BTreeSet<ForCode>,
}

/// Regularized hinge objective of one binary classifier over the set,
/// with example weights: lambda/2 ||w||^2 + sum(w_i * xi_i) / sum(w_i).
pub fn hinge_objective(
    class: &ClassModel,
    set: &TrainingSet,
    lambda: f64,
) -> f64 {
    let mut loss = 0.0;
    let mut total_weight = 0.0;
    for example in &set.examples {
        let y = if example.labels.contains(&class.code) {
            1.0
        } else {
            -1.0
        };
        let margin = y * class.score(&example.vector);
        loss += example.weight * (1.0 - margin).max(0.0);
        total_weight += example.weight;
    }
    let reg = 0.5 * lambda * class.weights.iter().map(|w| w * w).sum::<f64>();
    reg + loss / total_weight
}

fn train_class(code: &ForCode, set: &TrainingSet, config: &TrainConfig) -> ClassModel {
    let dim = set.examples.first().map(|e| e.vector.dim()).unwrap_or(0);
    // w is kept as scale * values so the shrink step stays O(1).
    let mut values = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..set.examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(class_seed(config.seed, code));
    let mut t: u64 = 0;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (config.lambda * t as f64 + 1.0);
            let example = &set.examples[i];
            let y = if example.labels.contains(code) { 1.0 } else { -1.0 };
            let score = scale * example.vector.dot_dense(&values) + bias;
            scale *= 1.0 - eta * config.lambda;
            if scale < 1e-9 {
                for v in &mut values {
                    *v *= scale;
                }
                scale = 1.0;
            }
            if y * score < 1.0 {
                let step = eta * example.weight * y / scale;
                for (idx, value) in example.vector.entries() {
                    values[*idx] += step * value;
                }
                bias += eta * example.weight * y;
            }
        }
    }
    let weights = values.into_iter().map(|v| v * scale).collect();
    ClassModel {
        code: code.clone(),
        weights,
        bias,
        threshold: config.threshold,
    }
}

/// Trains one binary hinge-loss classifier per class. Classes run
/// independently (in parallel) with per-class derived seeds and are
/// merged in code order.
pub fn train(
    set: &TrainingSet,
    vocabulary: &Vocabulary,
    config: &TrainConfig,
) -> Result<Model, ClassifierError> {
    if config.epochs == 0 {
        return Err(ClassifierError::InvalidConfig("epochs must be > 0".into()));
    }
    if !config.lambda.is_finite() || config.lambda <= 0.0 {
        return Err(ClassifierError::InvalidConfig(
            "lambda must be positive".into(),
        ));
    }
    let classes = set.classes();
    if classes.len() < 2 {
        return Err(ClassifierError::SingleClass(classes.len()));
    }
    let dim = vocabulary.len();
    if let Some(bad) = set.examples.iter().find(|e| e.vector.dim() != dim) {
        return Err(ClassifierError::DimensionMismatch {
            expected: dim,
            got: bad.vector.dim(),
        });
    }
    let class_models: Vec<ClassModel> = classes
        .par_iter()
        .map(|code| train_class(code, set, config))
        .collect();
    Ok(Model {
        vocabulary: vocabulary.clone(),
        classes: class_models,
        config: config.clone(),
        extra: BTreeMap::new(),
    })
}

impl Model {
    /// Scores every class and returns the full ranking.
    pub fn predict(&self, vector: &SparseVector) -> Result<Ranking, ClassifierError> {
        let dim = self.dim();
        if vector.dim() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                got: vector.dim(),
            });
        }
        let mut entries: Vec<(ForCode, f64)> = self
            .classes
            .iter()
            .map(|c| (c.code.clone(), c.score(vector)))
            .collect();
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("scores are finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        Ok(Ranking { entries })
    }

    /// Codes scoring strictly above their threshold, plus the deduplicated
    /// division parents. May be empty.
    pub fn assign(&self, vector: &SparseVector) -> Result<Assignment, ClassifierError> {
        let dim = self.dim();
        if vector.dim() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                got: vector.dim(),
            });
        }
        let mut assignment = Assignment::default();
        for class in &self.classes {
            if class.score(vector) > class.threshold {
                assignment.divisions.insert(class.code.division());
                assignment.codes.insert(class.code.clone());
            }
        }
        Ok(assignment)
    }

    pub fn dim(&self) -> usize {
        self.classes
            .first()
            .map(|c| c.weights.len())
            .unwrap_or(0)
    }

    /// Convenience: vectorize raw text with the model's vocabulary and
    /// predict.
    pub fn predict_text(&self, title: &str, abstract_text: &str) -> Ranking {
        let vector = self.vocabulary.vectorize(&doc_segments(title, abstract_text));
        self.predict(&vector).expect("dimensions match by construction")
    }

    pub fn assign_text(&self, title: &str, abstract_text: &str) -> Assignment {
        let vector = self.vocabulary.vectorize(&doc_segments(title, abstract_text));
        self.assign(&vector).expect("dimensions match by construction")
    }

    /// Persists the model as an uncompressed tar archive holding the
    /// vocabulary CSV, per-class weights, biases/thresholds, and the
    /// config snapshot. Entry metadata is pinned so identical models
    /// produce identical bytes.
    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let mut config_txt = String::new();
        config_txt.push_str(&format!("format_version={MODEL_FORMAT_VERSION}\n"));
        config_txt.push_str(&format!("lambda={}\n", self.config.lambda));
        config_txt.push_str(&format!("epochs={}\n", self.config.epochs));
        config_txt.push_str(&format!("seed={}\n", self.config.seed));
        config_txt.push_str(&format!("threshold={}\n", self.config.threshold));
        for (key, value) in &self.extra {
            config_txt.push_str(&format!("{key}={value}\n"));
        }

        let vocab_csv = self.vocabulary.to_csv_string().into_bytes();

        let mut classes_csv = String::from("code,scheme,bias,threshold\n");
        let mut weights_csv = String::from("code,index,weight\n");
        for class in &self.classes {
            classes_csv.push_str(&format!(
                "{},{},{},{}\n",
                class.code,
                class.code.scheme(),
                class.bias,
                class.threshold
            ));
            for (idx, w) in class.weights.iter().enumerate() {
                if *w != 0.0 {
                    weights_csv.push_str(&format!("{},{},{}\n", class.code, idx, w));
                }
            }
        }

        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        let mut builder = tar::Builder::new(file);
        for (name, data) in [
            ("config.txt", config_txt.as_bytes()),
            ("vocabulary.csv", vocab_csv.as_slice()),
            ("classes.csv", classes_csv.as_bytes()),
            ("weights.csv", weights_csv.as_bytes()),
        ] {
            let mut header = tar::Header::new_gnu();
            header.set_path(name).map_err(|e| io_err(path, e))?;
            header.set_size(data.len() as u64);
            header.set_mode(0o644);
            header.set_mtime(0);
            header.set_uid(0);
            header.set_gid(0);
            header.set_cksum();
            builder.append(&header, data).map_err(|e| io_err(path, e))?;
        }
        builder.finish().map_err(|e| io_err(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model, ClassifierError> {
        let bad = |reason: String| ClassifierError::BadModelFile {
            path: path.display().to_string(),
            reason,
        };
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let mut archive = tar::Archive::new(file);
        let mut parts: BTreeMap<String, Vec<u8>> = BTreeMap::new();
        for entry in archive.entries().map_err(|e| io_err(path, e))? {
            let mut entry = entry.map_err(|e| io_err(path, e))?;
            let name = entry
                .path()
                .map_err(|e| io_err(path, e))?
                .display()
                .to_string();
            let mut data = Vec::new();
            entry.read_to_end(&mut data).map_err(|e| io_err(path, e))?;
            parts.insert(name, data);
        }
        let get = |name: &str| {
            parts
                .get(name)
                .ok_or_else(|| bad(format!("missing archive entry '{name}'")))
        };

        let config_txt = String::from_utf8(get("config.txt")?.clone())
            .map_err(|e| bad(e.to_string()))?;
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for line in config_txt.lines() {
            if let Some((key, value)) = line.split_once('=') {
                kv.insert(key.to_string(), value.to_string());
            }
        }
        let version: u32 = kv
            .remove("format_version")
            .ok_or_else(|| bad("missing format_version".into()))?
            .parse()
            .map_err(|_| bad("bad format_version".into()))?;
        if version != MODEL_FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {version}")));
        }
        let parse_f64 = |kv: &mut BTreeMap<String, String>, key: &str| -> Result<f64, ClassifierError> {
            kv.remove(key)
                .ok_or_else(|| bad(format!("missing {key}")))?
                .parse()
                .map_err(|_| bad(format!("bad {key}")))
        };
        let lambda = parse_f64(&mut kv, "lambda")?;
        let threshold = parse_f64(&mut kv, "threshold")?;
        let epochs: usize = kv
            .remove("epochs")
            .ok_or_else(|| bad("missing epochs".into()))?
            .parse()
            .map_err(|_| bad("bad epochs".into()))?;
        let seed: u64 = kv
            .remove("seed")
            .ok_or_else(|| bad("missing seed".into()))?
            .parse()
            .map_err(|_| bad("bad seed".into()))?;

        let vocabulary = Vocabulary::read_csv(
            std::io::BufReader::new(get("vocabulary.csv")?.as_slice()),
            &format!("{}#vocabulary.csv", path.display()),
        )?;
        let dim = vocabulary.len();

        let classes_csv =
            String::from_utf8(get("classes.csv")?.clone()).map_err(|e| bad(e.to_string()))?;
        let mut classes: Vec<ClassModel> = Vec::new();
        for line in classes_csv.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad(format!("bad classes row '{line}'")));
            }
            let scheme = crate::taxonomy::Scheme::parse(fields[1])?;
            classes.push(ClassModel {
                code: ForCode::parse(fields[0], scheme)?,
                weights: vec![0.0; dim],
                bias: fields[2].parse().map_err(|_| bad("bad bias".into()))?,
                threshold: fields[3].parse().map_err(|_| bad("bad threshold".into()))?,
            });
        }
        let by_code: BTreeMap<String, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.code.to_string(), i))
            .collect();
        let weights_csv =
            String::from_utf8(get("weights.csv")?.clone()).map_err(|e| bad(e.to_string()))?;
        for line in weights_csv.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(bad(format!("bad weights row '{line}'")));
            }
            let class_index = *by_code
                .get(fields[0])
                .ok_or_else(|| bad(format!("weights for unknown class '{}'", fields[0])))?;
            let idx: usize = fields[1].parse().map_err(|_| bad("bad index".into()))?;
            if idx >= dim {
                return Err(bad(format!("weight index {idx} out of range")));
            }
            classes[class_index].weights[idx] =
                fields[2].parse().map_err(|_| bad("bad weight".into()))?;
        }
        Ok(Model {
            vocabulary,
            classes,
            config: TrainConfig {
                lambda,
                epochs,
                seed,
                threshold,
            },
            extra: kv,
        })
    }
}
