//! Chunk embeddings: provider abstraction, batching, caching and the vector
//! primitives (normalization, cosine similarity) used downstream.

mod cache;
mod provider;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::HttpError;
use crate::parallel::bounded_map;

pub use cache::{cache_key, EmbeddingCache};
pub use provider::{
    provider_from_config, DeterministicEmbedder, EmbeddingProvider, RemoteEmbedder,
    DETERMINISTIC_DIM,
};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Transport(#[from] HttpError),
    #[error("embedding protocol error: {0}")]
    Protocol(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid embedding configuration: {0}")]
    Config(String),
    #[error("cache I/O error: {0}")]
    Cache(#[from] std::io::Error),
}

/// A finite, fixed-dimension real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::Degenerate("empty vector".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(EmbedError::Degenerate(format!(
                "non-finite component {bad}"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingProviderKind {
    Remote,
    DeterministicTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingProviderConfig {
    pub kind: EmbeddingProviderKind,
    pub endpoint: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token. Empty for none.
    pub auth_token_env: String,
    pub batch_size: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    /// Concurrent in-flight batches.
    pub parallelism: usize,
    /// Request field carrying the list of input strings.
    pub input_field: String,
    /// Dotted path to the vectors in the response; `*` walks an array.
    pub output_path: String,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        Self {
            kind: EmbeddingProviderKind::DeterministicTest,
            endpoint: String::new(),
            model_name: "nomic-embed-text-v1".into(),
            auth_token_env: "EMBEDDING_API_KEY".into(),
            batch_size: 32,
            timeout_secs: 60,
            max_retries: 3,
            retry_base_ms: 500,
            parallelism: 4,
            input_field: "input".into(),
            output_path: "data.*.embedding".into(),
        }
    }
}

impl EmbeddingProviderConfig {
    pub fn deterministic() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.batch_size == 0 {
            return Err(EmbedError::Config("batch_size must be at least 1".into()));
        }
        if self.kind == EmbeddingProviderKind::Remote && self.endpoint.is_empty() {
            return Err(EmbedError::Config(
                "remote provider needs an endpoint".into(),
            ));
        }
        Ok(())
    }

    /// Model name under which vectors are cached.
    pub fn effective_model_name(&self) -> String {
        match self.kind {
            EmbeddingProviderKind::Remote => self.model_name.clone(),
            EmbeddingProviderKind::DeterministicTest => provider::DETERMINISTIC_MODEL.to_string(),
        }
    }
}

pub fn normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbedError> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(EmbedError::Degenerate(
            "cannot normalize a zero vector".into(),
        ));
    }
    Ok(EmbeddingVector(v.0.iter().map(|x| x / norm).collect()))
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::Degenerate("cosine of a zero vector".into()));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Batches texts through a provider, consulting an optional cache, and
/// L2-normalizes every returned vector.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    batch_size: usize,
    parallelism: usize,
    cache: Option<Arc<EmbeddingCache>>,
}

impl Embedder {
    pub fn new(
        provider: Box<dyn EmbeddingProvider>,
        batch_size: usize,
        parallelism: usize,
    ) -> Self {
        Self {
            provider,
            batch_size: batch_size.max(1),
            parallelism: parallelism.max(1),
            cache: None,
        }
    }

    pub fn from_config(cfg: &EmbeddingProviderConfig) -> Result<Self, EmbedError> {
        cfg.validate()?;
        Ok(Self::new(
            provider_from_config(cfg)?,
            cfg.batch_size,
            cfg.parallelism,
        ))
    }

    pub fn with_cache(mut self, cache: Arc<EmbeddingCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn model_name(&self) -> &str {
        self.provider.model_name()
    }

    pub fn embed_all(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::Degenerate("no texts to embed".into()));
        }
        let model = self.provider.model_name().to_string();
        let mut out: Vec<Option<EmbeddingVector>> = vec![None; texts.len()];
        let mut misses: Vec<usize> = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            match self
                .cache
                .as_ref()
                .and_then(|c| c.get(&cache_key(&model, text)))
            {
                Some(v) => out[i] = Some(v),
                None => misses.push(i),
            }
        }

        let batches: Vec<&[usize]> = misses.chunks(self.batch_size).collect();
        let results = bounded_map(&batches, self.parallelism, |batch| {
            let inputs: Vec<String> = batch.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.provider.embed(&inputs)?;
            if vectors.len() != inputs.len() {
                return Err(EmbedError::Protocol(format!(
                    "provider returned {} vectors for {} inputs",
                    vectors.len(),
                    inputs.len()
                )));
            }
            vectors.iter().map(normalize).collect::<Result<Vec<_>, _>>()
        });

        for (batch, vectors) in batches.iter().zip(results) {
            for (&i, v) in batch.iter().zip(vectors?) {
                if let Some(cache) = &self.cache {
                    cache.put(&cache_key(&model, &texts[i]), &v)?;
                }
                out[i] = Some(v);
            }
        }

        let out: Vec<EmbeddingVector> = out.into_iter().map(|v| v.expect("filled")).collect();
        let dim = out[0].dim();
        if let Some(bad) = out.iter().find(|v| v.dim() != dim) {
            return Err(EmbedError::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        Ok(out)
    }
}

/// One-shot embedding of `texts` with the configured provider, no cache.
pub fn embed_batch(
    texts: &[String],
    cfg: &EmbeddingProviderConfig,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    Embedder::from_config(cfg)?.embed_all(texts)
}
