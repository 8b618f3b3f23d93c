//! Versioned JSON artifacts passed between commands. Every envelope carries
//! a schema version; loading an artifact written by an incompatible version
//! is refused.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    payload: T,
}

pub fn save<T: Serialize>(dir: &Path, name: &str, payload: &T) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let envelope = Envelope { schema_version: ARTIFACT_SCHEMA_VERSION, payload };
    let json = serde_json::to_vec_pretty(&envelope)
        .map_err(|e| CliError::Schema(format!("serializing {name}: {e}")))?;
    std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn load<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, CliError> {
    let path = dir.join(name);
    let raw = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    let envelope: Envelope<T> = serde_json::from_slice(&raw).map_err(|e| {
        CliError::Schema(format!("artifact {} is not readable: {e}", path.display()))
    })?;
    if envelope.schema_version != ARTIFACT_SCHEMA_VERSION {
        return Err(CliError::Schema(format!(
            "artifact {} has schema version {}, this build expects {}",
            path.display(),
            envelope.schema_version,
            ARTIFACT_SCHEMA_VERSION
        )));
    }
    Ok(envelope.payload)
}

pub const DATASET: &str = "dataset.json";
pub const COHERENCE: &str = "coherence.json";
pub const VOCABULARY: &str = "vocab.json";
pub const MODEL: &str = "model.json";
pub const SCORES: &str = "scores.json";
pub const PLAN: &str = "plan.json";
pub const EVALUATION: &str = "evaluation.json";
