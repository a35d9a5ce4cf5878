//! The bundled corpus of synthetic app models.
//!
//! Each app lives in its own directory holding an `entry.json` manifest, the
//! model, its change set, the expected targets, and optionally a guidance
//! file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::impact::{load_change_set, ChangeSet, ImpactError, TargetSet};
use crate::model::{load_app_model, AppModel, ModelError};
use crate::runner::{Guidance, RunError};

/// Overrides the bundled corpus directory.
pub const CORPUS_ENV: &str = "CHANGEHOUND_CORPUS";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("corpus app `{0}` not found")]
    UnknownApp(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Changes(#[from] ImpactError),
    #[error(transparent)]
    Guidance(#[from] RunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeType {
    NewElement,
    ModifiedActivity,
    ChangedFunctions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultNote {
    pub fault_id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub change_type: ChangeType,
    pub model_file: String,
    pub changes_file: String,
    pub expected_targets_file: String,
    #[serde(default)]
    pub faults: Vec<FaultNote>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guidance_file: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CorpusApp {
    pub dir: PathBuf,
    pub entry: CorpusEntry,
    pub model: AppModel,
    pub changes: ChangeSet,
    pub expected_targets: TargetSet,
    pub guidance: Option<Guidance>,
}

impl CorpusApp {
    pub fn name(&self) -> &str {
        &self.entry.name
    }

    pub fn model_path(&self) -> PathBuf {
        self.dir.join(&self.entry.model_file)
    }

    pub fn changes_path(&self) -> PathBuf {
        self.dir.join(&self.entry.changes_file)
    }

    pub fn guidance_path(&self) -> Option<PathBuf> {
        self.entry.guidance_file.as_ref().map(|g| self.dir.join(g))
    }
}

/// `$CHANGEHOUND_CORPUS` if set, else the corpus shipped with the sources.
pub fn corpus_dir() -> PathBuf {
    match std::env::var_os(CORPUS_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"),
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_app(dir: impl AsRef<Path>) -> Result<CorpusApp, CorpusError> {
    let dir = dir.as_ref();
    let entry_path = dir.join("entry.json");
    let entry: CorpusEntry =
        serde_json::from_str(&read(&entry_path)?).map_err(|e| CorpusError::Io {
            path: entry_path.display().to_string(),
            message: e.to_string(),
        })?;
    let model = load_app_model(dir.join(&entry.model_file))?;
    let changes = load_change_set(dir.join(&entry.changes_file))?;
    let targets_path = dir.join(&entry.expected_targets_file);
    let expected_targets =
        serde_json::from_str(&read(&targets_path)?).map_err(|e| CorpusError::Io {
            path: targets_path.display().to_string(),
            message: e.to_string(),
        })?;
    let guidance = entry
        .guidance_file
        .as_ref()
        .map(|g| Guidance::load(dir.join(g)))
        .transpose()?;
    Ok(CorpusApp {
        dir: dir.to_owned(),
        entry,
        model,
        changes,
        expected_targets,
        guidance,
    })
}

/// Names of the apps under `root`, sorted.
pub fn app_names(root: impl AsRef<Path>) -> Result<Vec<String>, CorpusError> {
    let root = root.as_ref();
    let io = |e: std::io::Error| CorpusError::Io {
        path: root.display().to_string(),
        message: e.to_string(),
    };
    let mut names = Vec::new();
    for dirent in std::fs::read_dir(root).map_err(io)? {
        let dirent = dirent.map_err(io)?;
        if dirent.path().join("entry.json").is_file() {
            names.push(dirent.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

/// Every app under `root`, sorted by name.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Vec<CorpusApp>, CorpusError> {
    let root = root.as_ref();
    app_names(root)?
        .iter()
        .map(|n| load_app(root.join(n)))
        .collect()
}

/// Looks an app up by name in `root`.
pub fn find_app(root: impl AsRef<Path>, name: &str) -> Result<CorpusApp, CorpusError> {
    let dir = root.as_ref().join(name);
    if !dir.join("entry.json").is_file() {
        return Err(CorpusError::UnknownApp(name.to_owned()));
    }
    load_app(dir)
}
