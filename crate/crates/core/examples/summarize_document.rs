//! Full pipeline with offline providers, in all three modes.
//!
//! cargo run --example summarize_document -- [path]

use chainsum::artifact::RunArtifact;
use chainsum::chunker::ChunkerConfig;
use chainsum::config::RunConfig;
use chainsum::summarize::{run_pipeline, Mode};

const SAMPLE: &str = include_str!("../tests/data/harbor.txt");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let cfg = RunConfig {
        seed: 3,
        k: Some(3),
        chunker: ChunkerConfig::new(40, 5)?,
        ..RunConfig::default()
    };

    for mode in [Mode::MarkovCluster, Mode::ClusterSum, Mode::LlmFull] {
        let run = run_pipeline(&text, mode, &cfg)?;
        println!("== {mode}");
        if let Some(path) = &run.path {
            println!(
                "path {:?} ({}), p = {:.4}",
                path.order,
                path.method,
                path.probability()
            );
        }
        if !run.summary_order.is_empty() {
            println!("summary order {:?}", run.summary_order);
        }
        println!("{}\n", run.final_text);
    }

    let artifact = RunArtifact::new(run_pipeline(&text, Mode::MarkovCluster, &cfg)?);
    println!("artifact: {} bytes of JSON", artifact.to_json().len());
    Ok(())
}
