//! Pipeline orchestration: configuration, the run directory with its
//! manifest, stage gating, and the stage implementations behind the CLI
//! subcommands.
//!
//! Each stage writes only its own subdirectory of the run directory and
//! records input and artifact checksums in `manifest.txt`, so a finished
//! run is auditable and byte-reproducible from its config and inputs.

mod config;
mod stages;

pub use config::PipelineConfig;
pub use stages::{
    cmd_evaluate, cmd_ingest, cmd_label, cmd_predict, cmd_remap, cmd_report, cmd_train,
    ReportKind, Strategy,
};

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::corpus::CorpusError;
use crate::evaluate::EvaluateError;
use crate::features::FeaturesError;
use crate::remap::RemapError;
use crate::taxonomy::TaxonomyError;
use crate::weaklabel::WeakLabelError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("stage '{stage}' needs '{needs}' from a prior stage; run `{hint}` first")]
    MissingPriorStage {
        stage: String,
        needs: String,
        hint: String,
    },
    #[error("run directory is locked by another process ({0})")]
    Locked(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    WeakLabel(#[from] WeakLabelError),
    #[error(transparent)]
    Remap(#[from] RemapError),
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> PipelineError {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Stable machine-readable kind for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::ConfigInvalid(_) => "ConfigInvalid",
            PipelineError::MissingPriorStage { .. } => "MissingPriorStage",
            PipelineError::Locked(_) => "Locked",
            PipelineError::Taxonomy(_) => "Taxonomy",
            PipelineError::Corpus(_) => "Corpus",
            PipelineError::WeakLabel(_) => "WeakLabel",
            PipelineError::Remap(_) => "Remap",
            PipelineError::Features(_) => "Features",
            PipelineError::Classifier(_) => "Classifier",
            PipelineError::Evaluate(_) => "Evaluate",
            PipelineError::Io { .. } => "Io",
        }
    }
}

/// The fixed stage order used to keep the manifest stable.
const STAGE_ORDER: [&str; 7] = [
    "ingest", "label", "remap", "train", "predict", "evaluate", "report",
];

/// A run directory. Stage artifacts live in per-stage subdirectories; a
/// lock file serializes writers.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Opens (creating if needed) an explicit run directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<RunDir, PipelineError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| PipelineError::io(&root, e))?;
        Ok(RunDir { root })
    }

    /// The default layout: `<base>/runs/<timestamp>-<confighash12>`.
    pub fn for_config(base: &Path, config: &PipelineConfig) -> Result<RunDir, PipelineError> {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let short_hash: String = config.config_hash().chars().take(12).collect();
        Self::open(base.join("runs").join(format!("{timestamp}-{short_hash}")))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn store_dir(&self) -> PathBuf {
        self.root.join("store")
    }

    pub fn labels_dir(&self) -> PathBuf {
        self.root.join("labels")
    }

    pub fn remap_dir(&self) -> PathBuf {
        self.root.join("remap")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.root.join("model")
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.root.join("predictions")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.txt")
    }

    /// Takes the writer lock. Fails when another writer holds it.
    pub fn lock(&self) -> Result<LockGuard, PipelineError> {
        let path = self.root.join("lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(path.display().to_string()))
            }
            Err(e) => Err(PipelineError::io(&path, e)),
        }
    }

    /// Gate: error unless `file` (produced by `prior`) exists.
    pub fn require(&self, stage: &str, file: &Path, prior: &str) -> Result<(), PipelineError> {
        if !file.exists() {
            return Err(PipelineError::MissingPriorStage {
                stage: stage.to_string(),
                needs: file
                    .strip_prefix(&self.root)
                    .unwrap_or(file)
                    .display()
                    .to_string(),
                hint: prior.to_string(),
            });
        }
        Ok(())
    }

    /// Rewrites the manifest with this stage's section replaced. Sections
    /// keep the fixed stage order so repeated runs produce identical
    /// bytes.
    pub fn record_stage(
        &self,
        stage: &str,
        config_hash: &str,
        inputs: &[(String, PathBuf)],
        artifacts: &[PathBuf],
    ) -> Result<(), PipelineError> {
        let mut section = format!("[stage {stage}]\nconfig_sha256={config_hash}\n");
        for (name, path) in inputs {
            section.push_str(&format!("input {name} sha256={}\n", sha256_file(path)?));
        }
        for path in artifacts {
            let rel = path.strip_prefix(&self.root).unwrap_or(path);
            section.push_str(&format!(
                "artifact {} sha256={}\n",
                rel.display(),
                sha256_file(path)?
            ));
        }

        let manifest_path = self.manifest_path();
        let mut sections: BTreeMap<String, String> = BTreeMap::new();
        if manifest_path.exists() {
            let text = std::fs::read_to_string(&manifest_path)
                .map_err(|e| PipelineError::io(&manifest_path, e))?;
            let mut current: Option<(String, String)> = None;
            for line in text.lines() {
                if let Some(name) = line
                    .strip_prefix("[stage ")
                    .and_then(|rest| rest.strip_suffix(']'))
                {
                    if let Some((name, body)) = current.take() {
                        sections.insert(name, body);
                    }
                    current = Some((name.to_string(), format!("{line}\n")));
                } else if let Some((_, body)) = current.as_mut() {
                    body.push_str(line);
                    body.push('\n');
                }
            }
            if let Some((name, body)) = current.take() {
                sections.insert(name, body);
            }
        }
        sections.insert(stage.to_string(), section);

        let mut out = String::new();
        for name in STAGE_ORDER {
            if let Some(body) = sections.get(name) {
                out.push_str(body);
            }
        }
        std::fs::write(&manifest_path, out).map_err(|e| PipelineError::io(&manifest_path, e))
    }
}

/// Removes the lock file when the stage finishes.
pub struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let mut file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buffer).map_err(|e| PipelineError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buffer[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
