//! Word-level tokenization and fixed-window chunking with overlap.
//!
//! Tokens are maximal runs of alphanumeric characters; every other
//! non-whitespace character is a token of its own. Offsets are byte
//! offsets into the source string, so every chunk can be traced back to
//! the exact span of the document it came from.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkerError {
    #[error("overlap ({overlap}) must be smaller than chunk_size ({chunk_size})")]
    OverlapTooLarge { chunk_size: usize, overlap: usize },
    #[error("chunk_size must be at least 1")]
    ZeroChunkSize,
}

/// Tokens of a text together with their byte spans in the source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, (usize, usize))> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.offsets.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkerConfig {
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        Self {
            chunk_size: 500,
            overlap: 20,
        }
    }
}

impl ChunkerConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Result<Self, ChunkerError> {
        let cfg = Self {
            chunk_size,
            overlap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ChunkerError> {
        if self.chunk_size == 0 {
            return Err(ChunkerError::ZeroChunkSize);
        }
        if self.overlap >= self.chunk_size {
            return Err(ChunkerError::OverlapTooLarge {
                chunk_size: self.chunk_size,
                overlap: self.overlap,
            });
        }
        Ok(())
    }

    /// Distance in tokens between the starts of consecutive chunks.
    pub fn stride(&self) -> usize {
        self.chunk_size - self.overlap
    }
}

/// A contiguous token window of the source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    /// Index of the first token of this chunk in the document's token sequence.
    pub token_start: usize,
    pub token_count: usize,
    pub byte_span: (usize, usize),
    pub text: String,
}

impl Chunk {
    pub fn token_range(&self) -> std::ops::Range<usize> {
        self.token_start..self.token_start + self.token_count
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    let mut seq = TokenSequence::default();
    let mut word_start: Option<usize> = None;

    for (pos, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if word_start.is_none() {
                word_start = Some(pos);
            }
            continue;
        }
        if let Some(start) = word_start.take() {
            push_token(&mut seq, text, start, pos);
        }
        if !ch.is_whitespace() {
            push_token(&mut seq, text, pos, pos + ch.len_utf8());
        }
    }
    if let Some(start) = word_start {
        push_token(&mut seq, text, start, text.len());
    }
    seq
}

fn push_token(seq: &mut TokenSequence, text: &str, start: usize, end: usize) {
    seq.tokens.push(text[start..end].to_string());
    seq.offsets.push((start, end));
}

/// True when the token is a single non-alphanumeric character.
pub fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

pub fn chunk_document(text: &str, cfg: &ChunkerConfig) -> Result<Vec<Chunk>, ChunkerError> {
    cfg.validate()?;
    let tokens = tokenize(text);
    Ok(chunk_tokens(text, &tokens, cfg))
}

/// Chunks an already tokenized text. `cfg` is assumed valid.
pub fn chunk_tokens(text: &str, tokens: &TokenSequence, cfg: &ChunkerConfig) -> Vec<Chunk> {
    let total = tokens.len();
    if total == 0 {
        return Vec::new();
    }
    let stride = cfg.stride();
    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + cfg.chunk_size).min(total);
        let byte_start = tokens.offsets[start].0;
        let byte_end = tokens.offsets[end - 1].1;
        chunks.push(Chunk {
            index: chunks.len(),
            token_start: start,
            token_count: end - start,
            byte_span: (byte_start, byte_end),
            text: text[byte_start..byte_end].to_string(),
        });
        if end == total {
            break;
        }
        start += stride;
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn whitespace_separated_words() {
        let seq = tokenize("a b a");
        assert_eq!(seq.tokens, vec!["a", "b", "a"]);
        assert_eq!(seq.offsets, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn punctuation_is_split_out() {
        let seq = tokenize("Hello, world.");
        assert_eq!(seq.tokens, vec!["Hello", ",", "world", "."]);
        assert_eq!(seq.offsets, vec![(0, 5), (5, 6), (7, 12), (12, 13)]);
    }

    #[test]
    fn multibyte_offsets_slice_correctly() {
        let text = "naïve café…ok";
        let seq = tokenize(text);
        assert_eq!(seq.tokens, vec!["naïve", "café", "…", "ok"]);
        for (tok, (s, e)) in seq.iter() {
            assert_eq!(&text[s..e], tok);
        }
    }

    #[test]
    fn config_rejects_overlap_at_or_above_size() {
        assert_eq!(
            ChunkerConfig::new(10, 10),
            Err(ChunkerError::OverlapTooLarge {
                chunk_size: 10,
                overlap: 10
            })
        );
        assert_eq!(ChunkerConfig::new(0, 0), Err(ChunkerError::ZeroChunkSize));
        assert!(ChunkerConfig::new(1, 0).is_ok());
    }

    #[test]
    fn exact_fit_is_one_chunk() {
        let chunks = chunk_document(&words(500), &ChunkerConfig::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_count, 500);
    }

    #[test]
    fn three_chunks_for_1000_tokens() {
        let chunks = chunk_document(&words(1000), &ChunkerConfig::default()).unwrap();
        let starts: Vec<_> = chunks.iter().map(|c| c.token_start).collect();
        assert_eq!(starts, vec![0, 480, 960]);
        assert_eq!(chunks[2].token_count, 40);
    }

    #[test]
    fn short_document_is_single_chunk() {
        let chunks = chunk_document("Just a few words.", &ChunkerConfig::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text, "Just a few words.");
        assert_eq!(chunks[0].byte_span, (0, 17));
    }

    #[test]
    fn empty_document_has_no_chunks() {
        assert!(chunk_document("", &ChunkerConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn chunk_text_matches_source_span() {
        let text = "  one, two;  three four.\nfive six ";
        let cfg = ChunkerConfig::new(4, 1).unwrap();
        for c in chunk_document(text, &cfg).unwrap() {
            assert_eq!(&text[c.byte_span.0..c.byte_span.1], c.text);
        }
    }
}
