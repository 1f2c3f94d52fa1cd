//! Summary scoring: clipped ROUGE-N and embedding-based coherence, plus a
//! per-mode corpus report.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{is_punctuation, tokenize};
use crate::embeddings::{cosine_similarity, EmbedError, Embedder};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ROUGE order must be 1 or 2, got {0}")]
    UnsupportedOrder(usize),
    #[error("reference has no {0}-grams; ROUGE is undefined")]
    EmptyReference(usize),
    #[error(transparent)]
    Embedding(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(
        n: usize,
        matches: usize,
        candidate_total: usize,
        reference_total: usize,
    ) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(matches, candidate_total);
        let recall = ratio(matches, reference_total);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            n,
            precision,
            recall,
            f1,
        }
    }
}

/// Lowercased word tokens, punctuation dropped.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| !is_punctuation(t))
        .map(|t| t.to_lowercase())
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N with clipped counts: each candidate n-gram is credited at most as
/// often as it occurs in the reference. No stemming, no stopword removal.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<RougeScore, EvalError> {
    if !(1..=2).contains(&n) {
        return Err(EvalError::UnsupportedOrder(n));
    }
    let cand_tokens = rouge_tokens(candidate);
    let ref_tokens = rouge_tokens(reference);
    let reference_total = ref_tokens.len().saturating_sub(n - 1);
    if reference_total == 0 {
        return Err(EvalError::EmptyReference(n));
    }
    let candidate_total = cand_tokens.len().saturating_sub(n - 1);
    let ref_counts = ngram_counts(&ref_tokens, n);
    let matches = ngram_counts(&cand_tokens, n)
        .into_iter()
        .map(|(gram, c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    Ok(RougeScore::from_counts(
        n,
        matches,
        candidate_total,
        reference_total,
    ))
}

/// Splits after `.`, `!` or `?` when followed by whitespace or the end of
/// the text. Abbreviations are not special-cased.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((pos, ch)) = chars.next() {
        if !matches!(ch, '.' | '!' | '?') {
            continue;
        }
        let boundary = chars.peek().is_none_or(|&(_, next)| next.is_whitespace());
        if boundary {
            let end = pos + ch.len_utf8();
            push_trimmed(&mut sentences, &text[start..end]);
            start = end;
        }
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Mean cosine similarity of sentence embeddings one (`first_order`) and
/// two (`second_order`) positions apart. `None` when there are too few
/// sentences for the pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScore {
    pub first_order: Option<f64>,
    pub second_order: Option<f64>,
    pub sentence_count: usize,
}

pub fn coherence(text: &str, embedder: &Embedder) -> Result<CoherenceScore, EvalError> {
    let sentences = split_sentences(text);
    let sentence_count = sentences.len();
    if sentence_count < 2 {
        return Ok(CoherenceScore {
            first_order: None,
            second_order: None,
            sentence_count,
        });
    }
    let vectors = embedder.embed_all(&sentences)?;
    let mean_at_gap = |gap: usize| -> Result<Option<f64>, EvalError> {
        if sentence_count <= gap {
            return Ok(None);
        }
        let mut total = 0.0;
        for i in 0..sentence_count - gap {
            total += cosine_similarity(&vectors[i], &vectors[i + gap])?;
        }
        Ok(Some(total / (sentence_count - gap) as f64))
    };
    Ok(CoherenceScore {
        first_order: mean_at_gap(1)?,
        second_order: mean_at_gap(2)?,
        sentence_count,
    })
}

/// One candidate/reference pair to score.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentPair {
    pub id: String,
    pub mode: String,
    pub candidate: String,
    pub reference: String,
    /// Externally computed scores (e.g. BERTScore) carried into the report.
    pub external: BTreeMap<String, f64>,
}

impl DocumentPair {
    pub fn new(
        id: impl Into<String>,
        mode: impl Into<String>,
        candidate: &str,
        reference: &str,
    ) -> Self {
        Self {
            id: id.into(),
            mode: mode.into(),
            candidate: candidate.to_string(),
            reference: reference.to_string(),
            external: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScores {
    pub id: String,
    pub mode: String,
    pub rouge1: Option<RougeScore>,
    pub rouge2: Option<RougeScore>,
    pub coherence: Option<CoherenceScore>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMean {
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAggregate {
    pub mode: String,
    pub documents: usize,
    pub metrics: BTreeMap<String, MetricMean>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub documents: Vec<DocumentScores>,
    pub aggregates: Vec<ModeAggregate>,
    pub failures: usize,
}

pub const METRIC_COLUMNS: [(&str, &str); 6] = [
    ("R-1", "rouge1_f1"),
    ("R-2", "rouge2_f1"),
    ("C-1", "coherence_first"),
    ("C-2", "coherence_second"),
    ("BERTScore", "bertscore"),
    ("BLEURT", "bleurt"),
];

pub fn score_document(pair: &DocumentPair, embedder: &Embedder) -> DocumentScores {
    let mut scores = DocumentScores {
        id: pair.id.clone(),
        mode: pair.mode.clone(),
        rouge1: None,
        rouge2: None,
        coherence: None,
        external: pair.external.clone(),
        error: None,
    };
    let result = (|| -> Result<(), EvalError> {
        scores.rouge1 = Some(rouge_n(&pair.candidate, &pair.reference, 1)?);
        scores.rouge2 = match rouge_n(&pair.candidate, &pair.reference, 2) {
            Ok(s) => Some(s),
            Err(EvalError::EmptyReference(_)) => None,
            Err(e) => return Err(e),
        };
        scores.coherence = Some(coherence(&pair.candidate, embedder)?);
        Ok(())
    })();
    if let Err(e) = result {
        scores.error = Some(e.to_string());
    }
    scores
}

impl EvalReport {
    /// Builds per-mode means from already scored documents. Documents with
    /// an error are excluded from every mean and counted as failures.
    pub fn from_documents(documents: Vec<DocumentScores>) -> Self {
        type Sums = BTreeMap<String, (f64, usize)>;
        let mut by_mode: BTreeMap<String, (usize, Sums)> = BTreeMap::new();
        let mut failures = 0;
        for doc in &documents {
            if doc.error.is_some() {
                failures += 1;
                continue;
            }
            let (count, sums) = by_mode.entry(doc.mode.clone()).or_default();
            *count += 1;
            let mut add = |name: &str, value: Option<f64>| {
                if let Some(v) = value {
                    let e = sums.entry(name.to_string()).or_insert((0.0, 0));
                    e.0 += v;
                    e.1 += 1;
                }
            };
            for (prefix, score) in [("rouge1", doc.rouge1), ("rouge2", doc.rouge2)] {
                add(&format!("{prefix}_precision"), score.map(|s| s.precision));
                add(&format!("{prefix}_recall"), score.map(|s| s.recall));
                add(&format!("{prefix}_f1"), score.map(|s| s.f1));
            }
            add("coherence_first", doc.coherence.and_then(|c| c.first_order));
            add(
                "coherence_second",
                doc.coherence.and_then(|c| c.second_order),
            );
            for (name, &v) in &doc.external {
                add(&name.to_ascii_lowercase(), Some(v));
            }
        }
        let aggregates = by_mode
            .into_iter()
            .map(|(mode, (documents, sums))| ModeAggregate {
                mode,
                documents,
                metrics: sums
                    .into_iter()
                    .map(|(k, (sum, count))| {
                        (
                            k,
                            MetricMean {
                                mean: sum / count as f64,
                                count,
                            },
                        )
                    })
                    .collect(),
            })
            .collect();
        Self {
            documents,
            aggregates,
            failures,
        }
    }

    /// Records a document that could not even be loaded.
    pub fn push_failure(&mut self, id: &str, mode: &str, error: String) {
        self.documents.push(DocumentScores {
            id: id.to_string(),
            mode: mode.to_string(),
            rouge1: None,
            rouge2: None,
            coherence: None,
            external: BTreeMap::new(),
            error: Some(error),
        });
        self.failures += 1;
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text table, one row per mode. ROUGE columns are F1 x 100;
    /// coherence columns are raw cosine means.
    pub fn to_table(&self) -> String {
        let header: Vec<String> = std::iter::once("Method".to_string())
            .chain(METRIC_COLUMNS.iter().map(|(h, _)| h.to_string()))
            .collect();
        let mut rows = vec![header];
        for agg in &self.aggregates {
            let mut row = vec![agg.mode.clone()];
            for (_, key) in METRIC_COLUMNS {
                let cell = match agg.metrics.get(key) {
                    Some(m) if key.starts_with("rouge") => format!("{:.2}", m.mean * 100.0),
                    Some(m) => format!("{:.4}", m.mean),
                    None => "-".to_string(),
                };
                row.push(cell);
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" | ").trim_end());
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                let _ = writeln!(out, "{}", rule.join("-+-"));
            }
        }
        let _ = writeln!(
            out,
            "documents: {}, failures: {}",
            self.documents.len(),
            self.failures
        );
        out
    }
}

pub fn evaluate_corpus(pairs: &[DocumentPair], embedder: &Embedder) -> EvalReport {
    let docs = crate::parallel::bounded_map(pairs, 4, |p| score_document(p, embedder));
    EvalReport::from_documents(docs)
}
