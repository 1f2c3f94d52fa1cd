use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingProviderConfig, EmbeddingProviderKind, EmbeddingVector};
use crate::chunker::{is_punctuation, tokenize};
use crate::http::{JsonClient, RetryPolicy};

pub const DETERMINISTIC_DIM: usize = 64;
pub(crate) const DETERMINISTIC_MODEL: &str = "deterministic-feature-hash-64";
const FEATURE_SALT: &[u8] = b"chainsum/feature-hash/v1";

pub trait EmbeddingProvider: Send + Sync {
    fn model_name(&self) -> &str;

    /// Embeds one batch. Must return one vector per input, in order.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

pub fn provider_from_config(
    cfg: &EmbeddingProviderConfig,
) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
    Ok(match cfg.kind {
        EmbeddingProviderKind::DeterministicTest => Box::new(DeterministicEmbedder::default()),
        EmbeddingProviderKind::Remote => Box::new(RemoteEmbedder::new(cfg)?),
    })
}

/// Offline embedder: each lowercased word token is hashed (SHA-256 with a
/// fixed salt and seed) to a signed unit in one of `dim` buckets, the
/// buckets are summed and the result normalized. Bit-identical on every
/// platform since all intermediate sums are small integers.
#[derive(Debug, Clone)]
pub struct DeterministicEmbedder {
    dim: usize,
    seed: u64,
}

impl Default for DeterministicEmbedder {
    fn default() -> Self {
        Self {
            dim: DETERMINISTIC_DIM,
            seed: 0,
        }
    }
}

impl DeterministicEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim: dim.max(1),
            seed,
        }
    }

    fn feature(&self, token: &str) -> (usize, f64) {
        let mut hasher = Sha256::new();
        hasher.update(FEATURE_SALT);
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let h = hasher.finalize();
        let bucket = u64::from_le_bytes(h[..8].try_into().unwrap()) % self.dim as u64;
        let sign = if h[8] & 1 == 0 { 1.0 } else { -1.0 };
        (bucket as usize, sign)
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        for (tok, _) in tokenize(text).iter() {
            if is_punctuation(tok) {
                continue;
            }
            let (bucket, sign) = self.feature(&tok.to_lowercase());
            acc[bucket] += sign;
        }
        if acc.iter().all(|&x| x == 0.0) {
            // no word tokens, or all features cancelled
            let (bucket, sign) = self.feature(text.trim());
            acc[bucket] += sign;
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        EmbeddingVector(acc.into_iter().map(|x| x / norm).collect())
    }
}

impl EmbeddingProvider for DeterministicEmbedder {
    fn model_name(&self) -> &str {
        DETERMINISTIC_MODEL
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Generic "model + inputs -> vectors" HTTP embedding endpoint.
pub struct RemoteEmbedder {
    client: JsonClient,
    model_name: String,
    input_field: String,
    output_path: Vec<String>,
}

impl RemoteEmbedder {
    pub fn new(cfg: &EmbeddingProviderConfig) -> Result<Self, EmbedError> {
        let client = JsonClient::new(
            &cfg.endpoint,
            Duration::from_secs(cfg.timeout_secs),
            Some(cfg.auth_token_env.as_str()),
            RetryPolicy {
                max_retries: cfg.max_retries,
                base_delay: Duration::from_millis(cfg.retry_base_ms),
            },
        )?;
        Ok(Self {
            client,
            model_name: cfg.model_name.clone(),
            input_field: cfg.input_field.clone(),
            output_path: cfg.output_path.split('.').map(str::to_string).collect(),
        })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut body = json!({ "model": self.model_name });
        body[self.input_field.as_str()] = json!(texts);
        let resp = self.client.post(&body)?;
        let mut found = Vec::new();
        collect_path(&resp, &self.output_path, &mut found);
        found
            .into_iter()
            .map(|v| {
                let arr = v.as_array().ok_or_else(|| {
                    EmbedError::Protocol(format!("expected an array of numbers, got {v}"))
                })?;
                let values = arr
                    .iter()
                    .map(|x| {
                        x.as_f64()
                            .ok_or_else(|| EmbedError::Protocol(format!("non-numeric value {x}")))
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                EmbeddingVector::new(values)
            })
            .collect()
    }
}

fn collect_path<'a>(value: &'a Value, path: &[String], out: &mut Vec<&'a Value>) {
    match path.split_first() {
        None => out.push(value),
        Some((head, rest)) if head == "*" => {
            if let Some(items) = value.as_array() {
                for item in items {
                    collect_path(item, rest, out);
                }
            }
        }
        Some((head, rest)) if head.is_empty() => collect_path(value, rest, out),
        Some((head, rest)) => {
            if let Some(next) = value.get(head.as_str()) {
                collect_path(next, rest, out);
            }
        }
    }
}
