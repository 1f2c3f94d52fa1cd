//! ROUGE-1/2 and embedding coherence for a few candidate summaries.
//!
//! cargo run --example evaluate_summaries

use chainsum::embeddings::{Embedder, EmbeddingProviderConfig};
use chainsum::eval::{coherence, evaluate_corpus, rouge_n, DocumentPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = "The fleet left at dawn. A storm drove it home. The market reopened at dusk.";
    let candidates = [
        (
            "ordered",
            "markov-cluster",
            "Boats left at dawn. A storm sent them home. The market reopened at dusk.",
        ),
        (
            "shuffled",
            "cluster-sum",
            "The market reopened at dusk. Boats left at dawn. A storm sent them home.",
        ),
        ("off-topic", "llm-full", "Bread was baked. Bread was sold."),
    ];

    let r2 = rouge_n("a b c", "a b d", 2)?;
    println!(
        "bigram check: p {} r {} f1 {}",
        r2.precision, r2.recall, r2.f1
    );

    let embedder = Embedder::from_config(&EmbeddingProviderConfig::deterministic())?;
    let c = coherence("Waves broke. Waves broke. Waves broke.", &embedder)?;
    println!(
        "repeated sentences: {:?} / {:?}",
        c.first_order, c.second_order
    );
    let one = coherence("Only one sentence.", &embedder)?;
    println!("single sentence: {:?}\n", one.first_order);

    let pairs: Vec<DocumentPair> = candidates
        .iter()
        .map(|(id, mode, text)| DocumentPair::new(*id, *mode, text, reference))
        .collect();
    print!("{}", evaluate_corpus(&pairs, &embedder).to_table());
    Ok(())
}
