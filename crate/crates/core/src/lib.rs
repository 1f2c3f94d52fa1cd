pub mod artifact;
pub mod bench;
pub mod chunker;
pub mod cli;
pub mod clustering;
pub mod config;
pub mod embeddings;
pub mod eval;
pub mod markov;
pub mod numfmt;
pub mod pathfinding;
pub mod summarize;

mod http;
mod parallel;
