//! The run artifact: one pretty-printed JSON document holding the config
//! snapshot and every intermediate product of a run.
//!
//! Serialization is deterministic (struct field order, sorted maps,
//! shortest round-trip float formatting), so parsing an artifact and
//! writing it back reproduces the original bytes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::DocumentScores;
use crate::summarize::SummaryArtifact;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("artifact is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported artifact format version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub format_version: u32,
    pub run: SummaryArtifact,
    /// Scores of the final summary against a reference, when one was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<DocumentScores>,
}

impl RunArtifact {
    pub fn new(run: SummaryArtifact) -> Self {
        Self {
            format_version: ARTIFACT_FORMAT_VERSION,
            run,
            eval: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let artifact: Self = serde_json::from_str(text)?;
        if artifact.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(ArtifactError::Version(artifact.format_version));
        }
        Ok(artifact)
    }

    pub fn read(path: &Path) -> Result<Self, ArtifactError> {
        let text = std::fs::read_to_string(path).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), ArtifactError> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let io_err = |source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
