//! The flat key=value pipeline configuration.
//!
//! Paths are resolved relative to the config file's directory; the raw
//! strings are kept for hashing so the config hash is machine-independent.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::classifier::{ShapingPolicy, ShareMode, TrainConfig};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    raw: BTreeMap<String, String>,
    base_dir: PathBuf,

    pub publications: PathBuf,
    pub grants: PathBuf,
    pub journals: PathBuf,
    pub clusters: PathBuf,
    pub baseline: PathBuf,
    pub catalog: PathBuf,
    pub correspondence: PathBuf,
    pub stem_hass: PathBuf,
    pub new_codes: Option<PathBuf>,
    pub contributed: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub overrides: Option<PathBuf>,

    pub filter_threshold: f64,
    pub drop_unfiltered: bool,
    pub min_support: usize,
    pub shaping_mode: String,
    pub shaping_cap_percentile: f64,
    pub shaping_floor: usize,
    pub max_n: usize,
    pub min_df: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub threshold: f64,
    pub cv_folds: usize,
    pub report_top_k: usize,
    pub report_since_year: i32,
}

const REQUIRED_PATH_KEYS: [&str; 8] = [
    "publications",
    "grants",
    "journals",
    "clusters",
    "baseline",
    "catalog",
    "correspondence",
    "stem_hass",
];

const OPTIONAL_PATH_KEYS: [&str; 4] = ["new_codes", "contributed", "queries", "overrides"];

const KNOB_KEYS: [&str; 15] = [
    "filter_threshold",
    "drop_unfiltered",
    "min_support",
    "shaping_mode",
    "shaping_cap_percentile",
    "shaping_floor",
    "max_n",
    "min_df",
    "lambda",
    "epochs",
    "seed",
    "threshold",
    "cv_folds",
    "report_top_k",
    "report_since_year",
];

fn invalid(message: impl Into<String>) -> PipelineError {
    PipelineError::ConfigInvalid(message.into())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Self::parse(&text, base_dir)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<PipelineConfig, PipelineError> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key=value", i + 1)))?;
            let key = key.trim().to_string();
            if !REQUIRED_PATH_KEYS.contains(&key.as_str())
                && !OPTIONAL_PATH_KEYS.contains(&key.as_str())
                && !KNOB_KEYS.contains(&key.as_str())
            {
                return Err(invalid(format!("line {}: unknown key '{key}'", i + 1)));
            }
            if raw.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(invalid(format!("duplicate key '{key}'")));
            }
        }
        Self::from_raw(raw, base_dir)
    }

    fn from_raw(
        raw: BTreeMap<String, String>,
        base_dir: PathBuf,
    ) -> Result<PipelineConfig, PipelineError> {
        let path_of = |key: &str| -> Option<PathBuf> {
            raw.get(key).map(|value| base_dir.join(value))
        };
        let required_path = |key: &str| -> Result<PathBuf, PipelineError> {
            path_of(key).ok_or_else(|| invalid(format!("missing required path '{key}'")))
        };
        let knob = |key: &str, default: &str| -> String {
            raw.get(key).cloned().unwrap_or_else(|| default.to_string())
        };
        let parse_f64 = |key: &str, default: &str| -> Result<f64, PipelineError> {
            knob(key, default)
                .parse()
                .map_err(|_| invalid(format!("bad value for '{key}'")))
        };
        let parse_usize = |key: &str, default: &str| -> Result<usize, PipelineError> {
            knob(key, default)
                .parse()
                .map_err(|_| invalid(format!("bad value for '{key}'")))
        };

        let seed: u64 = raw
            .get("seed")
            .ok_or_else(|| invalid("'seed' is mandatory and has no default"))?
            .parse()
            .map_err(|_| invalid("bad value for 'seed'"))?;

        let shaping_mode = knob("shaping_mode", "proportional");
        if shaping_mode != "proportional" && shaping_mode != "equal_share" {
            return Err(invalid(format!(
                "shaping_mode must be 'proportional' or 'equal_share', got '{shaping_mode}'"
            )));
        }
        let drop_unfiltered = match knob("drop_unfiltered", "false").as_str() {
            "true" => true,
            "false" => false,
            other => return Err(invalid(format!("bad value for 'drop_unfiltered': {other}"))),
        };

        let config = PipelineConfig {
            publications: required_path("publications")?,
            grants: required_path("grants")?,
            journals: required_path("journals")?,
            clusters: required_path("clusters")?,
            baseline: required_path("baseline")?,
            catalog: required_path("catalog")?,
            correspondence: required_path("correspondence")?,
            stem_hass: required_path("stem_hass")?,
            new_codes: path_of("new_codes"),
            contributed: path_of("contributed"),
            queries: path_of("queries"),
            overrides: path_of("overrides"),
            filter_threshold: parse_f64("filter_threshold", "0.01")?,
            drop_unfiltered,
            min_support: parse_usize("min_support", "5")?,
            shaping_mode,
            shaping_cap_percentile: parse_f64("shaping_cap_percentile", "0.95")?,
            shaping_floor: parse_usize("shaping_floor", "0")?,
            max_n: parse_usize("max_n", "2")?,
            min_df: parse_usize("min_df", "2")?,
            lambda: parse_f64("lambda", "1e-4")?,
            epochs: parse_usize("epochs", "10")?,
            seed,
            threshold: parse_f64("threshold", "0")?,
            cv_folds: parse_usize("cv_folds", "3")?,
            report_top_k: parse_usize("report_top_k", "3")?,
            report_since_year: knob("report_since_year", "2015")
                .parse()
                .map_err(|_| invalid("bad value for 'report_since_year'"))?,
            raw,
            base_dir,
        };
        config.check_paths_exist()?;
        Ok(config)
    }

    /// Every referenced path must exist at run start.
    fn check_paths_exist(&self) -> Result<(), PipelineError> {
        let mut paths: Vec<(&str, &Path)> = vec![
            ("publications", &self.publications),
            ("grants", &self.grants),
            ("journals", &self.journals),
            ("clusters", &self.clusters),
            ("baseline", &self.baseline),
            ("catalog", &self.catalog),
            ("correspondence", &self.correspondence),
            ("stem_hass", &self.stem_hass),
        ];
        for (key, path) in [
            ("new_codes", &self.new_codes),
            ("contributed", &self.contributed),
            ("queries", &self.queries),
            ("overrides", &self.overrides),
        ] {
            if let Some(path) = path {
                paths.push((key, path));
            }
        }
        for (key, path) in paths {
            if !path.is_file() {
                return Err(invalid(format!(
                    "{key} path does not exist: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Overrides the seed (the CLI `--seed` flag).
    pub fn with_seed(mut self, seed: u64) -> PipelineConfig {
        self.seed = seed;
        self.raw.insert("seed".to_string(), seed.to_string());
        self
    }

    /// Drops labels the filter could not rule on instead of retaining
    /// them (the CLI `--drop-unfiltered` flag).
    pub fn with_drop_unfiltered(mut self) -> PipelineConfig {
        self.drop_unfiltered = true;
        self.raw
            .insert("drop_unfiltered".to_string(), "true".to_string());
        self
    }

    /// The effective configuration as sorted key=value lines, defaults
    /// materialized. This is what gets hashed.
    pub fn canonical_text(&self) -> String {
        let mut effective = self.raw.clone();
        let mut put = |key: &str, value: String| {
            effective.entry(key.to_string()).or_insert(value);
        };
        put("filter_threshold", self.filter_threshold.to_string());
        put("drop_unfiltered", self.drop_unfiltered.to_string());
        put("min_support", self.min_support.to_string());
        put("shaping_mode", self.shaping_mode.clone());
        put(
            "shaping_cap_percentile",
            self.shaping_cap_percentile.to_string(),
        );
        put("shaping_floor", self.shaping_floor.to_string());
        put("max_n", self.max_n.to_string());
        put("min_df", self.min_df.to_string());
        put("lambda", self.lambda.to_string());
        put("epochs", self.epochs.to_string());
        put("seed", self.seed.to_string());
        put("threshold", self.threshold.to_string());
        put("cv_folds", self.cv_folds.to_string());
        put("report_top_k", self.report_top_k.to_string());
        put("report_since_year", self.report_since_year.to_string());
        let mut out = String::new();
        for (key, value) in &effective {
            out.push_str(&format!("{key}={value}\n"));
        }
        out
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn shaping_policy(&self) -> ShapingPolicy {
        ShapingPolicy {
            mode: if self.shaping_mode == "equal_share" {
                ShareMode::EqualShare
            } else {
                ShareMode::Proportional {
                    cap_percentile: self.shaping_cap_percentile,
                }
            },
            floor: self.shaping_floor,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            epochs: self.epochs,
            seed: self.seed,
            threshold: self.threshold,
        }
    }
}
