//! End-to-end runs of the `chainsum` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use chainsum::artifact::RunArtifact;
use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(rel)
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn chainsum(args: &[&str], cwd: Option<&Path>) -> Out {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chainsum"));
    cmd.args(args).env("CHAINSUM_TEST_MODEL", "unused-model");
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    let out = cmd.output().expect("binary runs");
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!(
            "{}: {e} (run with UPDATE_GOLDEN=1 to create)",
            path.display()
        )
    });
    assert_eq!(actual, expected, "{name} differs from the golden copy");
}

fn summarize(out_dir: &Path, extra: &[&str]) -> Out {
    let input = data("harbor.txt");
    let config = data("small_chunks.toml");
    let mut args = vec![
        "summarize",
        input.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    chainsum(&args, None)
}

#[test]
fn summarize_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = summarize(dir.path(), &[]);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert!(first.stdout.contains("cluster"), "{}", first.stdout);
    let artifact = fs::read_to_string(dir.path().join("artifact.json")).unwrap();
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(dir.path().join("embeddings.cache").exists());

    // Second run reads every vector from the cache.
    let second = summarize(dir.path(), &[]);
    assert_eq!(second.code, 0, "{}", second.stderr);
    assert_eq!(
        fs::read_to_string(dir.path().join("artifact.json")).unwrap(),
        artifact
    );

    let fresh = tempfile::tempdir().unwrap();
    assert_eq!(summarize(fresh.path(), &["--no-cache"]).code, 0);
    assert_eq!(
        fs::read_to_string(fresh.path().join("artifact.json")).unwrap(),
        artifact
    );
    assert!(!fresh.path().join("embeddings.cache").exists());

    let parsed = RunArtifact::from_json(&artifact).unwrap();
    assert_eq!(parsed.run.final_text + "\n", summary);
    assert_eq!(parsed.run.summary_order, parsed.run.path.unwrap().order);
    assert_eq!(parsed.run.config.llm.model_name, "unused-model");
    golden("harbor_markov_cluster.json", &artifact);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = summarize(
        dir.path(),
        &[
            "--mode",
            "cluster-sum",
            "--k",
            "2",
            "--seed",
            "5",
            "--timings",
        ],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let a = RunArtifact::read(&dir.path().join("artifact.json")).unwrap();
    assert_eq!(a.run.clustering.as_ref().unwrap().k, 2);
    assert_eq!(a.run.clustering.as_ref().unwrap().seed, 5);
    assert!(a.run.path.is_none());
    assert_eq!(
        a.run.summary_order,
        a.run.clustering.unwrap().first_appearance_order()
    );
    assert!(a.run.timings_ms.contains_key("cluster"));
}

#[test]
fn llm_full_mode_and_reference_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let reference = data("eval/ref.txt");
    let out = summarize(
        dir.path(),
        &[
            "--mode",
            "llm-full",
            "--reference",
            reference.to_str().unwrap(),
        ],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let a = RunArtifact::read(&dir.path().join("artifact.json")).unwrap();
    assert_eq!(a.run.final_text, "The harbor town woke before dawn.");
    assert!(a.run.chunks.is_empty() && a.run.clustering.is_none());
    let scores = a.eval.expect("scored against the reference");
    assert!(scores.rouge1.unwrap().f1 > 0.0);
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = chainsum(
        &[
            "summarize",
            "/no/such/document.txt",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.code, 2);
    assert!(
        out.stderr.contains("/no/such/document.txt"),
        "{}",
        out.stderr
    );
}

#[test]
fn unset_config_variable_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "llm.endpoint = \"${CHAINSUM_TEST_NEVER_SET}\"\n").unwrap();
    let input = data("harbor.txt");
    let out = chainsum(
        &[
            "summarize",
            input.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.code, 2);
    assert!(
        out.stderr.contains("CHAINSUM_TEST_NEVER_SET"),
        "{}",
        out.stderr
    );
}

#[test]
fn inspect_views() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(summarize(dir.path(), &[]).code, 0);
    let artifact = dir.path().join("artifact.json");
    let a = artifact.to_str().unwrap();

    let path = chainsum(&["inspect", a, "path"], None);
    assert_eq!(path.code, 0, "{}", path.stderr);
    let first = path.stdout.lines().next().unwrap();
    assert!(first.contains(" → ") && first.contains(", p = "), "{first}");

    let matrix = chainsum(&["inspect", a, "matrix"], None);
    assert_eq!(matrix.code, 0);
    assert!(
        matrix.stdout.contains("row-stochastic: yes"),
        "{}",
        matrix.stdout
    );

    let clusters = chainsum(&["inspect", a, "clusters"], None);
    assert_eq!(clusters.code, 0);
    assert_eq!(
        clusters.stdout.matches("cluster ").count(),
        3,
        "{}",
        clusters.stdout
    );

    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, "{\"format_version\": 1, \"run\": ").unwrap();
    assert_eq!(
        chainsum(&["inspect", corrupt.to_str().unwrap(), "path"], None).code,
        2
    );
}

#[test]
fn inspect_path_needs_a_markov_artifact() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(summarize(dir.path(), &["--mode", "cluster-sum"]).code, 0);
    let artifact = dir.path().join("artifact.json");
    let out = chainsum(&["inspect", artifact.to_str().unwrap(), "path"], None);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("cluster-sum"), "{}", out.stderr);
}

#[test]
fn evaluate_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = chainsum(
        &[
            "evaluate",
            "manifest.tsv",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        Some(&data("eval")),
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = fs::read_to_string(dir.path().join("eval_report.json")).unwrap();
    let table = fs::read_to_string(dir.path().join("eval_report.txt")).unwrap();
    assert_eq!(out.stdout, table);
    let report: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(report["documents"].as_array().unwrap().len(), 3);
    assert_eq!(report["failures"], 1);
    assert!(table.contains("0.9100"), "{table}");
    golden("eval_report.json", &json);
    golden("eval_report.txt", &table);
}

#[test]
fn evaluate_directory_of_pairs() {
    let pairs = tempfile::tempdir().unwrap();
    fs::write(pairs.path().join("a.candidate.txt"), "One fish. Two fish.").unwrap();
    fs::write(pairs.path().join("a.reference.txt"), "One fish. Red fish.").unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = chainsum(
        &[
            "evaluate",
            pairs.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.path().join("eval_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["documents"][0]["id"], "a");
}

#[test]
fn evaluate_artifact_candidates() {
    let run_dir = tempfile::tempdir().unwrap();
    assert_eq!(summarize(run_dir.path(), &[]).code, 0);
    fs::copy(data("eval/ref.txt"), run_dir.path().join("ref.txt")).unwrap();
    fs::write(run_dir.path().join("m.tsv"), "artifact.json\tref.txt\n").unwrap();
    let out = chainsum(
        &["evaluate", "m.tsv", "--out-dir", "report"],
        Some(run_dir.path()),
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: Value = serde_json::from_str(
        &fs::read_to_string(run_dir.path().join("report/eval_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["documents"][0]["mode"], "markov-cluster");
}

#[test]
fn empty_manifest_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("empty.tsv");
    fs::write(&manifest, "# nothing here\n\n").unwrap();
    let out = chainsum(
        &[
            "evaluate",
            manifest.to_str().unwrap(),
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.code, 2);
}

#[test]
fn bench_prints_csv() {
    let out = chainsum(&["bench", "--max-k", "6", "--trials", "1"], None);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "k,median_ms");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("2,"));
    assert_eq!(chainsum(&["bench", "--max-k", "30"], None).code, 2);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(chainsum(&["frobnicate"], None).code, 2);
}
