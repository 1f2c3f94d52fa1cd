//! LLM orchestration: per-cluster summaries, final aggregation, the
//! whole-document baseline and the end-to-end pipeline.

mod llm;
mod pipeline;
mod prompts;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{chunk_tokens, tokenize, ChunkerConfig};
use crate::http::HttpError;
use crate::parallel::bounded_map;

pub use llm::{
    chat_provider_from_config, ChatProvider, Completion, LlmRequest, LlmTask, MockExtractive,
    RemoteChat, MOCK_MODEL,
};
pub use pipeline::{
    run_pipeline, ClusteringRecord, DocumentInfo, Pipeline, PipelineError, Stage, SummaryArtifact,
};
pub use prompts::{delimit, PromptSet, PromptTemplate, BUILTIN_PROMPT_VERSION};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Transport(#[from] HttpError),
    #[error("LLM protocol error: {0}")]
    Protocol(String),
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("prompt template error: {0}")]
    Prompt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LlmProviderKind {
    RemoteChat,
    MockExtractive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmProviderConfig {
    pub kind: LlmProviderKind,
    pub endpoint: String,
    pub model_name: String,
    /// Environment variable holding the bearer token. Empty for none.
    pub auth_token_env: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    /// Concurrent cluster-summary requests.
    pub parallelism: usize,
    /// Provider context window, in tokenizer tokens.
    pub context_limit_tokens: usize,
    /// Headroom kept free for instructions and output.
    pub context_margin_tokens: usize,
    /// Directory with replacement prompt templates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_dir: Option<String>,
}

impl Default for LlmProviderConfig {
    fn default() -> Self {
        Self {
            kind: LlmProviderKind::MockExtractive,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-mini".into(),
            auth_token_env: "OPENAI_API_KEY".into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            timeout_secs: 120,
            max_retries: 3,
            retry_base_ms: 1000,
            parallelism: 4,
            context_limit_tokens: 128_000,
            context_margin_tokens: 4_000,
            prompt_dir: None,
        }
    }
}

impl LlmProviderConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::Config("temperature must be >= 0".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::Config("max_output_tokens must be >= 1".into()));
        }
        if self.context_margin_tokens >= self.context_limit_tokens {
            return Err(LlmError::Config(
                "context_margin_tokens must be below context_limit_tokens".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderMetadata {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
}

impl From<&Completion> for ProviderMetadata {
    fn from(c: &Completion) -> Self {
        Self {
            model: c.model.clone(),
            prompt_tokens: c.prompt_tokens,
            completion_tokens: c.completion_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_id: usize,
    pub representative_chunk_ids: Vec<usize>,
    pub summary_text: String,
    pub provider_metadata: ProviderMetadata,
}

/// Record of how the whole-document baseline fit the provider context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmFullMeta {
    pub document_tokens: usize,
    pub budget_tokens: usize,
    /// True when the document was split into pieces that were summarized
    /// separately and then combined.
    pub stitched: bool,
    pub pieces: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Cluster summaries ordered along the most probable Hamiltonian path.
    MarkovCluster,
    /// Cluster summaries ordered by first appearance in the document.
    ClusterSum,
    /// One request over the whole document.
    LlmFull,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::MarkovCluster => "markov-cluster",
            Mode::ClusterSum => "cluster-sum",
            Mode::LlmFull => "llm-full",
        })
    }
}

/// Renders prompts and sends them to a chat provider.
pub struct Summarizer {
    provider: Box<dyn ChatProvider>,
    prompts: PromptSet,
    parallelism: usize,
    context_limit_tokens: usize,
    context_margin_tokens: usize,
}

impl Summarizer {
    pub fn new(provider: Box<dyn ChatProvider>, prompts: PromptSet) -> Self {
        let defaults = LlmProviderConfig::default();
        Self {
            provider,
            prompts,
            parallelism: defaults.parallelism,
            context_limit_tokens: defaults.context_limit_tokens,
            context_margin_tokens: defaults.context_margin_tokens,
        }
    }

    pub fn from_config(cfg: &LlmProviderConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let prompts = match &cfg.prompt_dir {
            Some(dir) => PromptSet::load_dir(Path::new(dir))?,
            None => PromptSet::builtin(),
        };
        Ok(Self::new(chat_provider_from_config(cfg)?, prompts)
            .with_parallelism(cfg.parallelism)
            .with_context(cfg.context_limit_tokens, cfg.context_margin_tokens))
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    pub fn with_context(mut self, limit_tokens: usize, margin_tokens: usize) -> Self {
        self.context_limit_tokens = limit_tokens;
        self.context_margin_tokens = margin_tokens.min(limit_tokens.saturating_sub(1));
        self
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    pub fn model_name(&self) -> &str {
        self.provider.model_name()
    }

    fn call(&self, request: LlmRequest) -> Result<Completion, LlmError> {
        let completion = self.provider.complete(&request)?;
        if completion.text.trim().is_empty() {
            return Err(LlmError::Protocol(
                "provider returned an empty response".into(),
            ));
        }
        Ok(completion)
    }

    pub fn summarize_cluster(
        &self,
        cluster_id: usize,
        representative_chunk_ids: &[usize],
        rep_texts: &[String],
    ) -> Result<ClusterSummary, LlmError> {
        if rep_texts.is_empty() {
            return Err(LlmError::Protocol(format!(
                "cluster {cluster_id} has no representative passages"
            )));
        }
        let template = &self.prompts.cluster_summary;
        let completion = self.call(LlmRequest {
            system: template.system.clone(),
            user: template.render("passages", &delimit("Passage", rep_texts)),
            task: LlmTask::ClusterSummary {
                passages: rep_texts.to_vec(),
            },
        })?;
        Ok(ClusterSummary {
            cluster_id,
            representative_chunk_ids: representative_chunk_ids.to_vec(),
            summary_text: completion.text.trim().to_string(),
            provider_metadata: ProviderMetadata::from(&completion),
        })
    }

    /// Summarizes several clusters concurrently; output follows input order.
    pub fn summarize_clusters(
        &self,
        jobs: &[(usize, Vec<usize>, Vec<String>)],
    ) -> Result<Vec<ClusterSummary>, LlmError> {
        bounded_map(jobs, self.parallelism, |(id, ids, texts)| {
            self.summarize_cluster(*id, ids, texts)
        })
        .into_iter()
        .collect()
    }

    /// Feeds the summaries, in the given order, to one aggregation request.
    pub fn aggregate_final(&self, ordered: &[ClusterSummary]) -> Result<Completion, LlmError> {
        let texts: Vec<String> = ordered.iter().map(|s| s.summary_text.clone()).collect();
        self.aggregate_texts(&texts)
    }

    fn aggregate_texts(&self, texts: &[String]) -> Result<Completion, LlmError> {
        if texts.is_empty() {
            return Err(LlmError::Protocol("nothing to aggregate".into()));
        }
        let template = &self.prompts.final_aggregate;
        self.call(LlmRequest {
            system: template.system.clone(),
            user: template.render("summaries", &delimit("Section", texts)),
            task: LlmTask::Aggregate {
                summaries: texts.to_vec(),
            },
        })
    }

    fn full_request(&self, text: &str) -> Result<Completion, LlmError> {
        let template = &self.prompts.full_document;
        self.call(LlmRequest {
            system: template.system.clone(),
            user: template.render("document", text),
            task: LlmTask::FullDocument {
                text: text.to_string(),
            },
        })
    }

    /// Whole-document baseline. Documents over the context budget are cut
    /// into budget-sized pieces, each piece is summarized, and the piece
    /// summaries are combined by one aggregation request.
    pub fn summarize_full(&self, document: &str) -> Result<(Completion, LlmFullMeta), LlmError> {
        let tokens = tokenize(document);
        let budget = self.context_limit_tokens - self.context_margin_tokens;
        let mut meta = LlmFullMeta {
            document_tokens: tokens.len(),
            budget_tokens: budget,
            stitched: false,
            pieces: 1,
        };
        if tokens.len() <= budget {
            return Ok((self.full_request(document)?, meta));
        }
        let pieces = chunk_tokens(
            document,
            &tokens,
            &ChunkerConfig {
                chunk_size: budget,
                overlap: 0,
            },
        );
        let piece_texts: Vec<String> = pieces.into_iter().map(|c| c.text).collect();
        let partials = bounded_map(&piece_texts, self.parallelism, |t| self.full_request(t))
            .into_iter()
            .map(|r| r.map(|c| c.text.trim().to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        meta.stitched = true;
        meta.pieces = partials.len();
        Ok((self.aggregate_texts(&partials)?, meta))
    }
}

/// One-shot cluster summary with a provider built from `cfg`.
pub fn summarize_cluster(
    rep_texts: &[String],
    cfg: &LlmProviderConfig,
) -> Result<ClusterSummary, LlmError> {
    let ids: Vec<usize> = (0..rep_texts.len()).collect();
    Summarizer::from_config(cfg)?.summarize_cluster(0, &ids, rep_texts)
}

/// One-shot aggregation with a provider built from `cfg`.
pub fn aggregate_final(
    ordered: &[ClusterSummary],
    cfg: &LlmProviderConfig,
) -> Result<String, LlmError> {
    Ok(Summarizer::from_config(cfg)?.aggregate_final(ordered)?.text)
}
