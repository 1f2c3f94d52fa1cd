use std::time::Duration;

use serde_json::{json, Value};

use super::{LlmError, LlmProviderConfig, LlmProviderKind};
use crate::eval::split_sentences;
use crate::http::{JsonClient, RetryPolicy};

/// What a request asks for. Remote providers only see the rendered
/// prompt; the mock works on the structured inputs directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LlmTask {
    ClusterSummary { passages: Vec<String> },
    Aggregate { summaries: Vec<String> },
    FullDocument { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmRequest {
    pub task: LlmTask,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub model: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub trait ChatProvider: Send + Sync {
    fn model_name(&self) -> &str;
    fn complete(&self, request: &LlmRequest) -> Result<Completion, LlmError>;
}

pub fn chat_provider_from_config(
    cfg: &LlmProviderConfig,
) -> Result<Box<dyn ChatProvider>, LlmError> {
    Ok(match cfg.kind {
        LlmProviderKind::MockExtractive => Box::new(MockExtractive),
        LlmProviderKind::RemoteChat => Box::new(RemoteChat::new(cfg)?),
    })
}

pub const MOCK_MODEL: &str = "mock-extractive";

/// Deterministic offline provider. Cluster requests yield the first
/// sentence of each passage joined by spaces; aggregation yields the
/// summaries joined by blank lines; full-document requests yield the first
/// sentence of the document.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockExtractive;

fn first_sentence(text: &str) -> Option<String> {
    split_sentences(text).into_iter().next()
}

impl ChatProvider for MockExtractive {
    fn model_name(&self) -> &str {
        MOCK_MODEL
    }

    fn complete(&self, request: &LlmRequest) -> Result<Completion, LlmError> {
        let text = match &request.task {
            LlmTask::ClusterSummary { passages } => passages
                .iter()
                .filter_map(|p| first_sentence(p))
                .collect::<Vec<_>>()
                .join(" "),
            LlmTask::Aggregate { summaries } => summaries
                .iter()
                .map(|s| s.trim())
                .collect::<Vec<_>>()
                .join("\n\n"),
            LlmTask::FullDocument { text } => first_sentence(text).unwrap_or_default(),
        };
        Ok(Completion {
            text,
            model: MOCK_MODEL.to_string(),
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}

/// Chat-completion style endpoint: `{model, temperature, max_tokens,
/// messages: [{role, content}]}` in, `choices[0].message.content` out.
pub struct RemoteChat {
    client: JsonClient,
    model_name: String,
    temperature: f64,
    max_output_tokens: u32,
}

impl RemoteChat {
    pub fn new(cfg: &LlmProviderConfig) -> Result<Self, LlmError> {
        if cfg.endpoint.is_empty() {
            return Err(LlmError::Config(
                "remote chat provider needs an endpoint".into(),
            ));
        }
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
            temperature: cfg.temperature,
            max_output_tokens: cfg.max_output_tokens,
        })
    }
}

impl ChatProvider for RemoteChat {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn complete(&self, request: &LlmRequest) -> Result<Completion, LlmError> {
        let body = json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let resp = self.client.post(&body)?;
        let text = resp
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                LlmError::Protocol(format!("no choices[0].message.content in {resp}"))
            })?;
        let usage = |field: &str| {
            resp.pointer(&format!("/usage/{field}"))
                .and_then(Value::as_u64)
        };
        Ok(Completion {
            text: text.to_string(),
            model: resp
                .get("model")
                .and_then(Value::as_str)
                .unwrap_or(&self.model_name)
                .to_string(),
            prompt_tokens: usage("prompt_tokens"),
            completion_tokens: usage("completion_tokens"),
        })
    }
}
