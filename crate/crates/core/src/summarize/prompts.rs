//! Prompt templates. Each template file has a `[system]` and a `[user]`
//! section; the user section holds one placeholder (`{passages}`,
//! `{summaries}` or `{document}`) that is replaced by the delimited input.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LlmError;

pub const BUILTIN_PROMPT_VERSION: &str = "v1";

const CLUSTER_SUMMARY: &str = include_str!("../../prompts/cluster_summary.txt");
const FINAL_AGGREGATE: &str = include_str!("../../prompts/final_aggregate.txt");
const FULL_DOCUMENT: &str = include_str!("../../prompts/full_document.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, LlmError> {
        let (before_user, user) = source
            .split_once("[user]")
            .ok_or_else(|| LlmError::Prompt("template lacks a [user] section".into()))?;
        let system = before_user
            .split_once("[system]")
            .map(|(_, s)| s)
            .unwrap_or("");
        Ok(Self {
            system: system.trim().to_string(),
            user: user.trim().to_string(),
        })
    }

    pub fn render(&self, placeholder: &str, content: &str) -> String {
        self.user.replace(&format!("{{{placeholder}}}"), content)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub version: String,
    pub cluster_summary: PromptTemplate,
    pub final_aggregate: PromptTemplate,
    pub full_document: PromptTemplate,
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self {
            version: BUILTIN_PROMPT_VERSION.to_string(),
            cluster_summary: PromptTemplate::parse(CLUSTER_SUMMARY).expect("builtin template"),
            final_aggregate: PromptTemplate::parse(FINAL_AGGREGATE).expect("builtin template"),
            full_document: PromptTemplate::parse(FULL_DOCUMENT).expect("builtin template"),
        }
    }

    /// Loads `cluster_summary.txt`, `final_aggregate.txt` and
    /// `full_document.txt` from `dir`; missing files fall back to the
    /// builtin templates. The version is `custom:<dir>`.
    pub fn load_dir(dir: &Path) -> Result<Self, LlmError> {
        let builtin = Self::builtin();
        let load = |name: &str, fallback: PromptTemplate| -> Result<PromptTemplate, LlmError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(fallback);
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|e| LlmError::Prompt(format!("{}: {e}", path.display())))?;
            PromptTemplate::parse(&text)
        };
        Ok(Self {
            version: format!("custom:{}", dir.display()),
            cluster_summary: load("cluster_summary.txt", builtin.cluster_summary)?,
            final_aggregate: load("final_aggregate.txt", builtin.final_aggregate)?,
            full_document: load("full_document.txt", builtin.full_document)?,
        })
    }
}

/// Numbered blocks separated by blank lines: `[Passage 1]\n...\n\n[Passage 2]...`.
pub fn delimit(label: &str, items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("[{label} {}]\n{}", i + 1, s.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}
