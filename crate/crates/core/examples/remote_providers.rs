//! Summarize with real HTTP providers.
//!
//! Needs EMBEDDING_URL plus EMBEDDING_API_KEY, and OPENAI_API_KEY (or a
//! compatible CHAT_URL). Without them it prints what to set and exits.
//!
//! EMBEDDING_URL=https://api.example.com/v1/embeddings \
//!   cargo run --example remote_providers -- notes.txt

use chainsum::config::RunConfig;
use chainsum::summarize::Pipeline;

const CONFIG: &str = r#"
mode = "markov-cluster"
embedding.kind = "remote"
embedding.endpoint = "${EMBEDDING_URL}"
embedding.model_name = "nomic-embed-text-v1"
llm.kind = "remote-chat"
llm.endpoint = "${CHAT_URL}"
llm.model_name = "gpt-4o-mini"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::var_os("CHAT_URL").is_none() {
        std::env::set_var("CHAT_URL", "https://api.openai.com/v1/chat/completions");
    }
    let missing: Vec<&str> = ["EMBEDDING_URL", "EMBEDDING_API_KEY", "OPENAI_API_KEY"]
        .into_iter()
        .filter(|v| std::env::var_os(v).is_none())
        .collect();
    if !missing.is_empty() {
        println!("set {} to run against live endpoints", missing.join(", "));
        return Ok(());
    }
    let path = std::env::args()
        .nth(1)
        .ok_or("usage: remote_providers <document>")?;
    let text = std::fs::read_to_string(path)?;
    let pipeline = Pipeline::from_config(RunConfig::parse(CONFIG)?)?;
    let run =
        pipeline.run_with_progress(&text, &mut |stage, ms| eprintln!("{stage}: {ms:.0} ms"))?;
    println!("{}", run.final_text);
    Ok(())
}
