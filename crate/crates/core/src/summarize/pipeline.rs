//! chunk -> embed -> cluster -> representatives -> transition matrix ->
//! path -> cluster summaries -> aggregation, plus the two baseline modes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{ClusterSummary, LlmFullMeta, Mode, ProviderMetadata, Summarizer};
use crate::chunker::{chunk_document, tokenize, Chunk};
use crate::clustering::{
    choose_k, distinct_count, kmeans_with_restarts, representatives, ClusterAssignment,
    ClusterRepresentatives,
};
use crate::config::RunConfig;
use crate::embeddings::{Embedder, EmbeddingCache};
use crate::markov::{build_transition_matrix, collapse_runs, TransitionMatrix};
use crate::pathfinding::{solve, HamiltonianPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Chunk,
    Embed,
    Cluster,
    Markov,
    Path,
    Summarize,
    Aggregate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Chunk => "chunk",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Markov => "markov",
            Stage::Path => "path",
            Stage::Summarize => "summarize",
            Stage::Aggregate => "aggregate",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    fn at<E: std::error::Error + Send + Sync + 'static>(stage: Stage) -> impl FnOnce(E) -> Self {
        move |e| Self {
            stage,
            source: Box::new(e),
        }
    }

    fn msg(stage: Stage, message: impl Into<String>) -> Self {
        Self {
            stage,
            source: message.into().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentInfo {
    pub bytes: usize,
    pub tokens: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringRecord {
    pub k: usize,
    pub seed: u64,
    /// Cluster id of every chunk in document order.
    pub labels: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// SHA-256 over the centroid dimensions and raw f64 bits.
    pub centroids_digest: String,
    pub representatives: ClusterRepresentatives,
}

impl ClusteringRecord {
    fn new(a: &ClusterAssignment, reps: ClusterRepresentatives) -> Self {
        Self {
            k: a.k,
            seed: a.seed,
            labels: a.labels.clone(),
            cluster_sizes: a.cluster_sizes(),
            inertia: a.inertia,
            iterations: a.iterations,
            centroids_digest: centroids_digest(&a.centroids),
            representatives: reps,
        }
    }

    /// Cluster ids in order of first appearance in the label sequence.
    pub fn first_appearance_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.k];
        self.labels
            .iter()
            .filter(|&&l| !std::mem::replace(&mut seen[l], true))
            .copied()
            .collect()
    }
}

pub fn centroids_digest(centroids: &[Vec<f64>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((centroids.len() as u64).to_le_bytes());
    for c in centroids {
        hasher.update((c.len() as u64).to_le_bytes());
        for x in c {
            hasher.update(x.to_bits().to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Everything a run produced, in the order it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryArtifact {
    pub mode: Mode,
    pub document: DocumentInfo,
    #[serde(default)]
    pub chunks: Vec<Chunk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_matrix: Option<TransitionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<HamiltonianPath>,
    /// Cluster ids in the order their summaries were aggregated.
    #[serde(default)]
    pub summary_order: Vec<usize>,
    #[serde(default)]
    pub cluster_summaries: Vec<ClusterSummary>,
    pub final_text: String,
    pub final_metadata: ProviderMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_full: Option<LlmFullMeta>,
    pub prompt_version: String,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub timings_ms: BTreeMap<String, f64>,
    pub config: RunConfig,
}

/// Owns the configured providers; runs any number of documents.
pub struct Pipeline {
    cfg: RunConfig,
    embedder: Embedder,
    summarizer: Summarizer,
}

struct Timer<'a> {
    enabled: bool,
    timings: BTreeMap<String, f64>,
    started: Instant,
    progress: &'a mut dyn FnMut(Stage, f64),
}

impl<'a> Timer<'a> {
    fn new(enabled: bool, progress: &'a mut dyn FnMut(Stage, f64)) -> Self {
        Self {
            enabled,
            timings: BTreeMap::new(),
            started: Instant::now(),
            progress,
        }
    }

    fn lap(&mut self, stage: Stage) {
        let ms = self.started.elapsed().as_secs_f64() * 1e3;
        info!("{stage}: {ms:.1} ms");
        (self.progress)(stage, ms);
        if self.enabled {
            self.timings.insert(stage.to_string(), ms);
        }
        self.started = Instant::now();
    }
}

impl Pipeline {
    pub fn new(cfg: RunConfig, embedder: Embedder, summarizer: Summarizer) -> Self {
        Self {
            cfg,
            embedder,
            summarizer,
        }
    }

    pub fn from_config(cfg: RunConfig) -> Result<Self, PipelineError> {
        cfg.validate().map_err(PipelineError::at(Stage::Config))?;
        let embedder =
            Embedder::from_config(&cfg.embedding).map_err(PipelineError::at(Stage::Config))?;
        let summarizer =
            Summarizer::from_config(&cfg.llm).map_err(PipelineError::at(Stage::Config))?;
        Ok(Self::new(cfg, embedder, summarizer))
    }

    pub fn with_cache(mut self, cache: Arc<EmbeddingCache>) -> Self {
        self.embedder = self.embedder.with_cache(cache);
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn run(&self, document: &str) -> Result<SummaryArtifact, PipelineError> {
        self.run_with_progress(document, &mut |_, _| {})
    }

    /// Like [`Pipeline::run`], calling `progress(stage, elapsed_ms)` as each
    /// stage completes.
    pub fn run_with_progress(
        &self,
        document: &str,
        progress: &mut dyn FnMut(Stage, f64),
    ) -> Result<SummaryArtifact, PipelineError> {
        let cfg = &self.cfg;
        let mut timer = Timer::new(cfg.record_timings, progress);
        let mut notes = Vec::new();

        let tokens = tokenize(document);
        if tokens.is_empty() {
            return Err(PipelineError::msg(
                Stage::Chunk,
                "document contains no tokens",
            ));
        }
        let info = DocumentInfo {
            bytes: document.len(),
            tokens: tokens.len(),
            sha256: hex::encode(Sha256::digest(document.as_bytes())),
        };

        let mut artifact = SummaryArtifact {
            mode: cfg.mode,
            document: info,
            chunks: Vec::new(),
            clustering: None,
            transition_matrix: None,
            path: None,
            summary_order: Vec::new(),
            cluster_summaries: Vec::new(),
            final_text: String::new(),
            final_metadata: ProviderMetadata {
                model: self.summarizer.model_name().to_string(),
                prompt_tokens: None,
                completion_tokens: None,
            },
            llm_full: None,
            prompt_version: self.summarizer.prompts().version.clone(),
            notes: Vec::new(),
            timings_ms: BTreeMap::new(),
            config: cfg.clone(),
        };

        if cfg.mode == Mode::LlmFull {
            let (completion, meta) = self
                .summarizer
                .summarize_full(document)
                .map_err(PipelineError::at(Stage::Summarize))?;
            if meta.stitched {
                notes.push(format!(
                    "document of {} tokens exceeded the {}-token budget; summarized in {} pieces",
                    meta.document_tokens, meta.budget_tokens, meta.pieces
                ));
            }
            timer.lap(Stage::Summarize);
            artifact.final_text = completion.text.trim().to_string();
            artifact.final_metadata = ProviderMetadata::from(&completion);
            artifact.llm_full = Some(meta);
            artifact.notes = notes;
            artifact.timings_ms = timer.timings;
            return Ok(artifact);
        }

        let chunks =
            chunk_document(document, &cfg.chunker).map_err(PipelineError::at(Stage::Chunk))?;
        timer.lap(Stage::Chunk);

        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        let vectors = self
            .embedder
            .embed_all(&texts)
            .map_err(PipelineError::at(Stage::Embed))?;
        timer.lap(Stage::Embed);

        let mut k = choose_k(chunks.len(), cfg.k);
        let distinct = distinct_count(&vectors);
        if k > distinct {
            notes.push(format!(
                "k lowered from {k} to {distinct}: only {distinct} distinct chunk embeddings"
            ));
            warn!("{}", notes.last().unwrap());
            k = distinct;
        }
        let assignment = kmeans_with_restarts(
            &vectors,
            k,
            cfg.seed,
            cfg.kmeans_max_iters,
            cfg.kmeans_tol,
            cfg.kmeans_n_init,
        )
        .map_err(PipelineError::at(Stage::Cluster))?;
        let reps = representatives(&assignment, &vectors, cfg.top_k);
        let record = ClusteringRecord::new(&assignment, reps);
        timer.lap(Stage::Cluster);

        let order = match cfg.mode {
            Mode::MarkovCluster => {
                let sequence = if cfg.collapse_runs {
                    collapse_runs(&record.labels)
                } else {
                    record.labels.clone()
                };
                let matrix = build_transition_matrix(&sequence, k)
                    .map_err(PipelineError::at(Stage::Markov))?;
                timer.lap(Stage::Markov);
                let path =
                    solve(&matrix, cfg.solver_cap).map_err(PipelineError::at(Stage::Path))?;
                if k > cfg.solver_cap {
                    notes.push(format!(
                        "k = {k} exceeds the exact solver cap {}; greedy path used",
                        cfg.solver_cap
                    ));
                }
                timer.lap(Stage::Path);
                let order = path.order.clone();
                artifact.transition_matrix = Some(matrix);
                artifact.path = Some(path);
                order
            }
            _ => record.first_appearance_order(),
        };

        let jobs: Vec<(usize, Vec<usize>, Vec<String>)> = (0..k)
            .map(|id| {
                let ids = record.representatives.for_cluster(id).to_vec();
                let texts = ids.iter().map(|&i| chunks[i].text.clone()).collect();
                (id, ids, texts)
            })
            .collect();
        let by_id = self
            .summarizer
            .summarize_clusters(&jobs)
            .map_err(PipelineError::at(Stage::Summarize))?;
        timer.lap(Stage::Summarize);

        let ordered: Vec<ClusterSummary> = order.iter().map(|&id| by_id[id].clone()).collect();
        let completion = self
            .summarizer
            .aggregate_final(&ordered)
            .map_err(PipelineError::at(Stage::Aggregate))?;
        timer.lap(Stage::Aggregate);

        artifact.chunks = chunks;
        artifact.clustering = Some(record);
        artifact.summary_order = order;
        artifact.cluster_summaries = ordered;
        artifact.final_text = completion.text.trim().to_string();
        artifact.final_metadata = ProviderMetadata::from(&completion);
        artifact.notes = notes;
        artifact.timings_ms = timer.timings;
        Ok(artifact)
    }
}

/// Runs `document` through `mode` with providers built from `cfg`
/// (no embedding cache).
pub fn run_pipeline(
    document: &str,
    mode: Mode,
    cfg: &RunConfig,
) -> Result<SummaryArtifact, PipelineError> {
    let cfg = RunConfig {
        mode,
        ..cfg.clone()
    };
    Pipeline::from_config(cfg)?.run(document)
}
