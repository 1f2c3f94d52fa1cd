//! Run configuration and its file format.
//!
//! Config files are TOML written as flat dotted keys, one setting per line:
//!
//! ```text
//! mode = "markov-cluster"
//! seed = 7
//! chunker.chunk_size = 500
//! embedding.kind = "remote"
//! embedding.endpoint = "${EMBEDDING_URL}"
//! llm.kind = "remote-chat"
//! ```
//!
//! `${NAME}` anywhere in the file is replaced by the environment variable
//! `NAME` before parsing, so endpoints and other deployment details can stay
//! out of the file. API tokens are never read from the file; the provider
//! sections name the environment variable that holds them.

use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::ChunkerConfig;
use crate::clustering::{DEFAULT_MAX_ITERS, DEFAULT_N_INIT, DEFAULT_TOL, DEFAULT_TOP_K};
use crate::embeddings::EmbeddingProviderConfig;
use crate::pathfinding::DEFAULT_DP_CAP;
use crate::summarize::{LlmProviderConfig, Mode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("environment variable {0} referenced by the config is not set")]
    MissingEnv(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Explicit cluster count; chosen from the chunk count when absent.
    pub k: Option<usize>,
    pub top_k: usize,
    /// Deduplicate consecutive equal labels before counting transitions.
    pub collapse_runs: bool,
    /// Largest cluster count solved exactly; above it the greedy solver runs.
    pub solver_cap: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    /// k-means++ restarts; the lowest-inertia run is kept.
    pub kmeans_n_init: usize,
    /// Record wall-clock stage timings in the artifact. Off by default so
    /// artifacts are byte-reproducible.
    pub record_timings: bool,
    pub chunker: ChunkerConfig,
    pub embedding: EmbeddingProviderConfig,
    pub llm: LlmProviderConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::MarkovCluster,
            seed: 0,
            k: None,
            top_k: DEFAULT_TOP_K,
            collapse_runs: false,
            solver_cap: DEFAULT_DP_CAP,
            kmeans_max_iters: DEFAULT_MAX_ITERS,
            kmeans_tol: DEFAULT_TOL,
            kmeans_n_init: DEFAULT_N_INIT,
            record_timings: false,
            chunker: ChunkerConfig::default(),
            embedding: EmbeddingProviderConfig::default(),
            llm: LlmProviderConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses config text after `${VAR}` interpolation.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let interpolated = interpolate_env(text, |name| std::env::var(name).ok())?;
        let cfg: RunConfig = toml::from_str(&interpolated)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.chunker.validate().map_err(|e| invalid(&e))?;
        self.embedding.validate().map_err(|e| invalid(&e))?;
        self.llm.validate().map_err(|e| invalid(&e))?;
        if self.top_k == 0 {
            return Err(ConfigError::Invalid("top_k must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(ConfigError::Invalid("k must be at least 1".into()));
        }
        if self.kmeans_n_init == 0 {
            return Err(ConfigError::Invalid(
                "kmeans_n_init must be at least 1".into(),
            ));
        }
        if self.solver_cap == 0 {
            return Err(ConfigError::Invalid("solver_cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Replaces every `${NAME}` using `lookup`; unknown names are an error.
pub fn interpolate_env(
    text: &str,
    lookup: impl Fn(&str) -> Option<String>,
) -> Result<String, ConfigError> {
    let re = Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("valid regex");
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in re.captures_iter(text) {
        let whole = caps.get(0).unwrap();
        let name = &caps[1];
        let value = lookup(name).ok_or_else(|| ConfigError::MissingEnv(name.to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(&value);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}
