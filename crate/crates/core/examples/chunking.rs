//! Split a document into overlapping token windows.
//!
//! cargo run --example chunking -- [path] [chunk_size] [overlap]

use chainsum::chunker::{chunk_document, tokenize, ChunkerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let text = match args.first() {
        Some(path) => std::fs::read_to_string(path)?,
        None => "Call me Ishmael. Some years ago, never mind how long precisely, having little \
                 or no money in my purse, I thought I would sail about a little and see the \
                 watery part of the world."
            .to_string(),
    };
    let size = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let overlap = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let cfg = ChunkerConfig::new(size, overlap)?;

    let tokens = tokenize(&text);
    println!(
        "{} tokens, chunk_size {size}, overlap {overlap}, stride {}",
        tokens.len(),
        cfg.stride()
    );
    for chunk in chunk_document(&text, &cfg)? {
        let r = chunk.token_range();
        println!(
            "#{:<3} tokens [{:>4}, {:>4})  {:?}",
            chunk.index, r.start, r.end, chunk.text
        );
    }
    Ok(())
}
