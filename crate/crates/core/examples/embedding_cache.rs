//! Embed texts with the offline deterministic embedder and a persistent
//! cache; the second pass is served from disk.
//!
//! cargo run --example embedding_cache

use std::sync::Arc;

use chainsum::embeddings::{cosine_similarity, Embedder, EmbeddingCache, EmbeddingProviderConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("embeddings.cache");
    let texts: Vec<String> = [
        "The tide came in over the flats.",
        "Water rose across the mud flats with the tide.",
        "The quarterly report shows revenue growth.",
    ]
    .map(String::from)
    .to_vec();

    let cfg = EmbeddingProviderConfig::deterministic();
    let first = Embedder::from_config(&cfg)?.with_cache(Arc::new(EmbeddingCache::open(&path)?));
    let vectors = first.embed_all(&texts)?;
    println!("model {}, dim {}", first.model_name(), vectors[0].dim());

    let reopened = EmbeddingCache::open(&path)?;
    println!("cache holds {} vectors after reopening", reopened.len());
    let second = Embedder::from_config(&cfg)?.with_cache(Arc::new(reopened));
    assert_eq!(second.embed_all(&texts)?, vectors);

    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            println!(
                "cos({i}, {j}) = {:.4}",
                cosine_similarity(&vectors[i], &vectors[j])?
            );
        }
    }
    Ok(())
}
