//! Command-line front end: `summarize`, `evaluate`, `inspect`, `bench`.
//!
//! Exit codes: 0 success, 1 internal or pipeline failure, 2 usage or input
//! error. Progress goes to stdout, errors to stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::artifact::{write_atomic, RunArtifact};
use crate::bench::{bench_dp, to_csv};
use crate::config::RunConfig;
use crate::embeddings::{Embedder, EmbeddingCache, EmbeddingProviderKind};
use crate::eval::{evaluate_corpus, score_document, DocumentPair, EvalReport};
use crate::markov::validate_row_stochastic;
use crate::numfmt::compact;
use crate::pathfinding::DEFAULT_DP_CAP;
use crate::summarize::{LlmProviderKind, Mode, Pipeline};

pub const ARTIFACT_FILE: &str = "artifact.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CACHE_FILE: &str = "embeddings.cache";
pub const REPORT_JSON_FILE: &str = "eval_report.json";
pub const REPORT_TABLE_FILE: &str = "eval_report.txt";

#[derive(Debug, Parser)]
#[command(
    name = "chainsum",
    version,
    about = "Cluster, order and summarize long documents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderChoice {
    /// Remote embedding and chat endpoints from the config.
    Remote,
    /// Offline deterministic embedder and extractive mock LLM.
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InspectTarget {
    Matrix,
    Path,
    Clusters,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// Config file (flat TOML keys, `${VAR}` interpolation).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the provider kinds from the config.
    #[arg(long, value_enum)]
    pub provider: Option<ProviderChoice>,
    /// Output directory.
    #[arg(long, default_value = "run")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a UTF-8 text file.
    Summarize {
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Number of clusters.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reference summary to score the result against.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Record wall-clock stage timings in the artifact.
        #[arg(long)]
        timings: bool,
        /// Do not read or write the embedding cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Score candidate summaries listed in a manifest (or a directory of
    /// `<name>.candidate.txt` / `<name>.reference.txt` pairs).
    Evaluate {
        manifest: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print part of a run artifact.
    Inspect {
        artifact: PathBuf,
        #[arg(value_enum)]
        what: InspectTarget,
    },
    /// Time the exact path solver for k = 2..=max-k and print CSV.
    Bench {
        #[arg(long, default_value_t = 20)]
        max_k: usize,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Summarize {
            input,
            common,
            mode,
            k,
            seed,
            reference,
            timings,
            no_cache,
        } => cmd_summarize(
            &input,
            &common,
            SummarizeFlags {
                mode,
                k,
                seed,
                reference,
                timings,
                no_cache,
            },
            out,
        ),
        Command::Evaluate { manifest, common } => cmd_evaluate(&manifest, &common, out),
        Command::Inspect { artifact, what } => cmd_inspect(&artifact, what, out),
        Command::Bench {
            max_k,
            trials,
            seed,
            out: csv_path,
        } => cmd_bench(max_k, trials, seed, csv_path.as_deref(), out),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    match common.provider {
        Some(ProviderChoice::Mock) => {
            cfg.embedding.kind = EmbeddingProviderKind::DeterministicTest;
            cfg.llm.kind = LlmProviderKind::MockExtractive;
        }
        Some(ProviderChoice::Remote) => {
            cfg.embedding.kind = EmbeddingProviderKind::Remote;
            cfg.llm.kind = LlmProviderKind::RemoteChat;
        }
        None => {}
    }
    Ok(cfg)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub struct SummarizeFlags {
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub reference: Option<PathBuf>,
    pub timings: bool,
    pub no_cache: bool,
}

pub fn cmd_summarize(
    input: &Path,
    common: &CommonArgs,
    flags: SummarizeFlags,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let document = read_text(input)?;
    let reference = flags.reference.as_deref().map(read_text).transpose()?;
    let mut cfg = load_config(common)?;
    if let Some(mode) = flags.mode {
        cfg.mode = mode;
    }
    if flags.k.is_some() {
        cfg.k = flags.k;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    cfg.record_timings |= flags.timings;
    cfg.validate().map_err(usage)?;

    fs::create_dir_all(&common.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", common.out_dir.display())))?;
    let mut pipeline = Pipeline::from_config(cfg).map_err(usage)?;
    if !flags.no_cache {
        let cache = EmbeddingCache::open(common.out_dir.join(CACHE_FILE)).map_err(internal)?;
        pipeline = pipeline.with_cache(Arc::new(cache));
    }

    let _ = writeln!(
        out,
        "summarizing {} ({})",
        input.display(),
        pipeline.config().mode
    );
    let run = pipeline
        .run_with_progress(&document, &mut |stage, ms| {
            let _ = writeln!(out, "  {stage:<9} done in {ms:.1} ms");
        })
        .map_err(internal)?;

    let mut artifact = RunArtifact::new(run);
    if let Some(reference) = reference {
        let pair = DocumentPair::new(
            input.display().to_string(),
            artifact.run.mode.to_string(),
            &artifact.run.final_text,
            &reference,
        );
        artifact.eval = Some(score_document(&pair, pipeline.embedder()));
    }

    let artifact_path = common.out_dir.join(ARTIFACT_FILE);
    let summary_path = common.out_dir.join(SUMMARY_FILE);
    artifact.write(&artifact_path).map_err(internal)?;
    let mut summary = artifact.run.final_text.clone();
    summary.push('\n');
    write_atomic(&summary_path, summary.as_bytes()).map_err(internal)?;
    let _ = writeln!(out, "artifact: {}", artifact_path.display());
    let _ = writeln!(out, "summary:  {}", summary_path.display());
    Ok(())
}

/// `(id, mode, error)` for a manifest entry that could not be loaded.
pub type ManifestFailure = (String, String, String);

/// Reads an evaluation manifest. Each non-empty, non-`#` line is
/// `candidate<TAB>reference[<TAB>mode][<TAB>name=value...]`, paths relative
/// to the manifest. A candidate ending in `.json` is read as a run artifact:
/// its final summary is scored and its mode is used unless one is given.
/// A directory is read as `<name>.candidate.txt` / `<name>.reference.txt`
/// pairs. Entries that cannot be loaded are returned as failures.
pub fn load_manifest(path: &Path) -> Result<(Vec<DocumentPair>, Vec<ManifestFailure>), CliError> {
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    if path.is_dir() {
        let mut names: Vec<String> = fs::read_dir(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                e.file_name()
                    .to_str()
                    .and_then(|n| n.strip_suffix(".candidate.txt"))
                    .map(str::to_string)
            })
            .collect();
        names.sort();
        for name in names {
            let cand = path.join(format!("{name}.candidate.txt"));
            let refp = path.join(format!("{name}.reference.txt"));
            match (fs::read_to_string(&cand), fs::read_to_string(&refp)) {
                (Ok(c), Ok(r)) => pairs.push(DocumentPair::new(name, "default", &c, &r)),
                (Err(e), _) | (_, Err(e)) => failures.push((name, "default".into(), e.to_string())),
            }
        }
        return Ok((pairs, failures));
    }

    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() < 2 {
            return Err(usage(format!(
                "{}:{}: expected candidate and reference paths",
                path.display(),
                lineno + 1
            )));
        }
        let mut mode = None;
        let mut external = BTreeMap::new();
        for field in &fields[2..] {
            match field.split_once('=') {
                Some((name, value)) => {
                    let v: f64 = value.parse().map_err(|_| {
                        usage(format!(
                            "{}:{}: bad score {field}",
                            path.display(),
                            lineno + 1
                        ))
                    })?;
                    external.insert(name.to_string(), v);
                }
                None => mode = Some(field.to_string()),
            }
        }
        let cand_path = base.join(fields[0]);
        let ref_path = base.join(fields[1]);
        let id = fields[0].to_string();
        let loaded = (|| -> Result<DocumentPair, String> {
            let reference = fs::read_to_string(&ref_path)
                .map_err(|e| format!("{}: {e}", ref_path.display()))?;
            let (candidate, artifact_mode) = if fields[0].ends_with(".json") {
                let a = RunArtifact::read(&cand_path).map_err(|e| e.to_string())?;
                (a.run.final_text, Some(a.run.mode.to_string()))
            } else {
                let c = fs::read_to_string(&cand_path)
                    .map_err(|e| format!("{}: {e}", cand_path.display()))?;
                (c, None)
            };
            let mode = mode
                .clone()
                .or(artifact_mode)
                .unwrap_or_else(|| "default".into());
            let mut pair = DocumentPair::new(id.clone(), mode, &candidate, &reference);
            pair.external = external;
            Ok(pair)
        })();
        match loaded {
            Ok(pair) => pairs.push(pair),
            Err(e) => failures.push((id, mode.unwrap_or_else(|| "default".into()), e)),
        }
    }
    Ok((pairs, failures))
}

pub fn cmd_evaluate(
    manifest: &Path,
    common: &CommonArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (pairs, failures) = load_manifest(manifest)?;
    if pairs.is_empty() && failures.is_empty() {
        return Err(usage(format!(
            "manifest {} lists no documents",
            manifest.display()
        )));
    }
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", common.out_dir.display())))?;
    let cache = EmbeddingCache::open(common.out_dir.join(CACHE_FILE)).map_err(internal)?;
    let embedder = Embedder::from_config(&cfg.embedding)
        .map_err(usage)?
        .with_cache(Arc::new(cache));

    let mut report = evaluate_corpus(&pairs, &embedder);
    for (id, mode, e) in failures {
        report.push_failure(&id, &mode, e);
    }
    write_report(&report, &common.out_dir)?;
    let _ = write!(out, "{}", report.to_table());
    Ok(())
}

fn write_report(report: &EvalReport, dir: &Path) -> Result<(), CliError> {
    write_atomic(&dir.join(REPORT_JSON_FILE), report.to_json().as_bytes()).map_err(internal)?;
    write_atomic(&dir.join(REPORT_TABLE_FILE), report.to_table().as_bytes()).map_err(internal)
}

/// Renders one view of an artifact.
pub fn render_inspect(artifact: &RunArtifact, what: InspectTarget) -> Result<String, CliError> {
    let run = &artifact.run;
    let mut s = String::new();
    match what {
        InspectTarget::Matrix => {
            let t = run
                .transition_matrix
                .as_ref()
                .ok_or_else(|| usage(format!("no transition matrix in a {} artifact", run.mode)))?;
            s.push_str(&format!(
                "transition matrix ({k} x {k}), row-stochastic: {}\n",
                if validate_row_stochastic(t) {
                    "yes"
                } else {
                    "NO"
                },
                k = t.k
            ));
            for (i, row) in t.probs.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|&p| compact(p)).collect();
                let note = if t.zero_rows.contains(&i) {
                    "no outgoing transitions".to_string()
                } else {
                    format!("sum {}", compact(row.iter().sum()))
                };
                s.push_str(&format!("{i}: [{}]  ({note})\n", cells.join(", ")));
            }
        }
        InspectTarget::Path => {
            let path = run
                .path
                .as_ref()
                .ok_or_else(|| usage(format!("no path in a {} artifact", run.mode)))?;
            let t = run
                .transition_matrix
                .as_ref()
                .ok_or_else(|| usage("artifact has a path but no transition matrix"))?;
            let nodes: Vec<String> = path.order.iter().map(|n| n.to_string()).collect();
            s.push_str(&format!(
                "{}, p = {}\n",
                nodes.join(" → "),
                compact(path.probability())
            ));
            s.push_str(&format!(
                "method: {}, log p = {}\n",
                path.method, path.log_prob
            ));
            for edge in path.order.windows(2) {
                s.push_str(&format!(
                    "  {} → {}: {}\n",
                    edge[0],
                    edge[1],
                    compact(t.get(edge[0], edge[1]))
                ));
            }
        }
        InspectTarget::Clusters => {
            let c = run
                .clustering
                .as_ref()
                .ok_or_else(|| usage(format!("no clustering in a {} artifact", run.mode)))?;
            s.push_str(&format!(
                "k = {}, inertia = {}, iterations = {}, seed = {}\n",
                c.k, c.inertia, c.iterations, c.seed
            ));
            for id in 0..c.k {
                let reps: Vec<String> = c
                    .representatives
                    .for_cluster(id)
                    .iter()
                    .map(|i| i.to_string())
                    .collect();
                s.push_str(&format!(
                    "cluster {id}: size {}, representatives [{}]\n",
                    c.cluster_sizes[id],
                    reps.join(", ")
                ));
            }
            let order: Vec<String> = run.summary_order.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!("summary order: {}\n", order.join(" → ")));
        }
    }
    Ok(s)
}

pub fn cmd_inspect(path: &Path, what: InspectTarget, out: &mut dyn Write) -> Result<(), CliError> {
    let artifact =
        RunArtifact::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let _ = write!(out, "{}", render_inspect(&artifact, what)?);
    Ok(())
}

pub fn cmd_bench(
    max_k: usize,
    trials: usize,
    seed: u64,
    csv_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(2..=DEFAULT_DP_CAP).contains(&max_k) {
        return Err(usage(format!(
            "--max-k must be between 2 and {DEFAULT_DP_CAP}"
        )));
    }
    let csv = to_csv(&bench_dp(max_k, trials, seed));
    if let Some(p) = csv_path {
        write_atomic(p, csv.as_bytes()).map_err(internal)?;
    }
    let _ = write!(out, "{csv}");
    Ok(())
}
