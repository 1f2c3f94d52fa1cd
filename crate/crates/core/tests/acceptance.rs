//! Acceptance checks. Runs without the libtest harness so every check prints
//! exactly one PASS/FAIL line; the process fails if any check fails.

use std::collections::HashMap;
use std::time::Instant;

use chainsum::artifact::RunArtifact;
use chainsum::bench::bench_dp_sizes;
use chainsum::chunker::{chunk_document, tokenize, ChunkerConfig};
use chainsum::clustering::{
    kmeans, kmeans_with_restarts, squared_distance, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use chainsum::config::RunConfig;
use chainsum::embeddings::{Embedder, EmbeddingProviderConfig};
use chainsum::eval::{coherence, rouge_n};
use chainsum::markov::{build_transition_matrix, validate_row_stochastic, TransitionMatrix};
use chainsum::pathfinding::{random_transition_matrix, solve_brute_force, solve_dp};
use chainsum::summarize::{run_pipeline, Mode};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dp_matches_brute_force() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..200u64 {
        let k = 2 + below(&mut rng, 7);
        let t = random_transition_matrix(k, 1000 + i);
        let dp = solve_dp(&t).map_err(|e| e.to_string())?;
        let bf = solve_brute_force(&t).map_err(|e| e.to_string())?;
        ensure((dp.log_prob - bf.log_prob).abs() <= 1e-9, || {
            format!(
                "instance {i} (k={k}): dp {} vs brute {}",
                dp.log_prob, bf.log_prob
            )
        })?;
        ensure(dp.order == bf.order, || {
            format!(
                "instance {i} (k={k}): order {:?} vs {:?}",
                dp.order, bf.order
            )
        })?;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("200 matrices, k in [2,8], {secs:.2} s"))
}

fn three_node_fixture() -> Outcome {
    let t = TransitionMatrix::from_rows(vec![
        vec![0.1, 0.2, 0.7],
        vec![0.3, 0.3, 0.4],
        vec![0.2, 0.8, 0.0],
    ]);
    let dp = solve_dp(&t).map_err(|e| e.to_string())?;
    let bf = solve_brute_force(&t).map_err(|e| e.to_string())?;
    // Independent check: enumerate all six orders by hand.
    let orders = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let best = orders
        .iter()
        .map(|o| (t.get(o[0], o[1]) * t.get(o[1], o[2]), o.to_vec()))
        .fold((f64::NEG_INFINITY, vec![]), |acc, x| {
            if x.0 > acc.0 {
                x
            } else {
                acc
            }
        });
    ensure(dp.order == vec![0, 2, 1], || {
        format!("dp order {:?}", dp.order)
    })?;
    ensure(bf.order == dp.order && best.1 == dp.order, || {
        "oracles disagree".into()
    })?;
    let p = dp.probability();
    ensure((p - 0.56).abs() <= 1e-12, || format!("p = {p}"))?;
    ensure((best.0 - 0.56).abs() <= 1e-12, || {
        format!("enumerated p = {}", best.0)
    })?;
    Ok(format!("order {:?}, p = {p}", dp.order))
}

fn transition_matrix_exact_and_fuzzed() -> Outcome {
    let t = build_transition_matrix(&[0, 0, 1, 2, 1], 3).map_err(|e| e.to_string())?;
    let expected = vec![
        vec![0.5, 0.5, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
    ];
    ensure(t.probs == expected, || format!("got {:?}", t.probs))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..1000 {
        let k = 1 + below(&mut rng, 12);
        let len = 1 + below(&mut rng, 60);
        let labels: Vec<usize> = (0..len).map(|_| below(&mut rng, k)).collect();
        let t = build_transition_matrix(&labels, k).map_err(|e| e.to_string())?;
        ensure(validate_row_stochastic(&t), || {
            format!("case {i}: {labels:?} k={k}")
        })?;
    }
    Ok("exact on [0,0,1,2,1]; 1000 random sequences row-stochastic".into())
}

fn dp_timing() -> Outcome {
    let rows = bench_dp_sizes([16, 20], 3, 0);
    let (k16, k20) = (rows[0].median_ms, rows[1].median_ms);
    ensure(k16 < 1000.0, || format!("k=16 median {k16:.1} ms"))?;
    ensure(k20 < 10_000.0, || format!("k=20 median {k20:.1} ms"))?;
    Ok(format!("k=16 median {k16:.1} ms, k=20 median {k20:.1} ms"))
}

fn chunker_contract() -> Outcome {
    let doc: Vec<String> = (0..980).map(|i| format!("w{i}")).collect();
    let doc = doc.join(" ");
    let cfg = ChunkerConfig::default();
    let chunks = chunk_document(&doc, &cfg).map_err(|e| e.to_string())?;
    let ranges: Vec<_> = chunks.iter().map(|c| c.token_range()).collect();
    ensure(ranges == vec![0..500, 480..980], || {
        format!("ranges {ranges:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..300 {
        let size = 1 + below(&mut rng, 40);
        let overlap = below(&mut rng, size);
        let n = 1 + below(&mut rng, 400);
        let text: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let cfg = ChunkerConfig::new(size, overlap).map_err(|e| e.to_string())?;
        let chunks = chunk_document(&text.join(" "), &cfg).map_err(|e| e.to_string())?;
        let stride = size - overlap;
        let bad =
            |what: &str| format!("case {case} (n={n}, size={size}, overlap={overlap}): {what}");
        for (i, c) in chunks.iter().enumerate() {
            ensure(c.token_start == i * stride, || bad("stride"))?;
            ensure(c.token_count <= size && c.token_count > 0, || bad("length"))?;
        }
        ensure(
            chunks.last().map(|c| c.token_range().end) == Some(n),
            || bad("coverage"),
        )?;
        for w in chunks.windows(2) {
            let shared = w[0].token_range().end.saturating_sub(w[1].token_start);
            ensure(shared == overlap, || bad("overlap"))?;
        }
    }
    Ok("980 tokens -> [0,500) [480,980); 300 random layouts hold".into())
}

fn brute_force_two_means(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    // Fix point 0 in group A to skip mirrored partitions.
    for mask in 0u32..(1 << (n - 1)) {
        let in_b = |i: usize| i > 0 && mask & (1 << (i - 1)) != 0;
        let cost: f64 = [false, true]
            .iter()
            .map(|&side| {
                let members: Vec<&Vec<f64>> = (0..n)
                    .filter(|&i| in_b(i) == side)
                    .map(|i| &points[i])
                    .collect();
                if members.is_empty() {
                    return 0.0;
                }
                let dim = members[0].len();
                let centroid: Vec<f64> = (0..dim)
                    .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
                    .collect();
                members.iter().map(|p| squared_distance(p, &centroid)).sum()
            })
            .sum();
        if mask != 0 && cost < best {
            best = cost;
        }
    }
    best
}

fn kmeans_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..100u64 {
        let n = 10 + below(&mut rng, 40);
        let k = 2 + below(&mut rng, 5);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| uniform(&mut rng)).collect())
            .collect();
        // Single runs, so every Lloyd trajectory is checked.
        let a = kmeans_with_restarts(&pts, k, seed, DEFAULT_MAX_ITERS, DEFAULT_TOL, 1)
            .map_err(|e| e.to_string())?;
        for w in a.inertia_history.windows(2) {
            ensure(w[1] <= w[0] + 1e-12 * w[0].max(1.0), || {
                format!("seed {seed}: inertia rose {} -> {}", w[0], w[1])
            })?;
        }
    }

    let line: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 10.0, 10.1, 10.2]
        .iter()
        .map(|&x| vec![x])
        .collect();
    let a = kmeans(&line, 2, 0, DEFAULT_MAX_ITERS, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let l = &a.labels;
    ensure(
        l[0] == l[1] && l[1] == l[2] && l[3] == l[4] && l[4] == l[5] && l[0] != l[3],
        || format!("line fixture labels {l:?}"),
    )?;

    let mut within = 0;
    for seed in 0..100u64 {
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..2).map(|_| uniform(&mut rng)).collect())
            .collect();
        let a = kmeans(&pts, 2, seed, DEFAULT_MAX_ITERS, DEFAULT_TOL).map_err(|e| e.to_string())?;
        if a.inertia <= 1.05 * brute_force_two_means(&pts) + 1e-12 {
            within += 1;
        }
    }
    ensure(within >= 90, || {
        format!("only {within}/100 within 1.05x of optimum")
    })?;
    Ok(format!(
        "monotone over 100 runs; line split ok; {within}/100 within 1.05x"
    ))
}

fn sample_document() -> String {
    let topics = [
        "River barges carry grain downstream every autumn.",
        "Orbital telescopes measure faint infrared galaxies.",
        "Bakers knead sourdough before the ovens warm.",
        "Glaciers carve valleys over thousands of years.",
    ];
    let mut doc = String::new();
    for round in 0..3 {
        for (i, t) in topics.iter().enumerate() {
            for rep in 0..4 {
                doc.push_str(&format!("{t} Note {round} {i} {rep}. "));
            }
        }
    }
    doc
}

fn mock_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        seed,
        ..RunConfig::default()
    };
    cfg.chunker = ChunkerConfig::new(30, 5).expect("valid chunker");
    cfg
}

fn end_to_end_determinism() -> Outcome {
    let doc = sample_document();
    let cfg = mock_config(11);
    let run = |mode| run_pipeline(&doc, mode, &cfg).map_err(|e| e.to_string());
    let a = RunArtifact::new(run(Mode::MarkovCluster)?).to_json();
    let b = RunArtifact::new(run(Mode::MarkovCluster)?).to_json();
    ensure(a == b, || "artifacts differ between runs".into())?;
    let parsed = RunArtifact::from_json(&a).map_err(|e| e.to_string())?;
    ensure(parsed.to_json() == a, || {
        "artifact does not round-trip".into()
    })?;

    let run_mc = parsed.run;
    let path = run_mc.path.as_ref().ok_or("no path")?;
    ensure(run_mc.summary_order == path.order, || {
        "summary order is not the path".into()
    })?;
    let ids: Vec<usize> = run_mc
        .cluster_summaries
        .iter()
        .map(|s| s.cluster_id)
        .collect();
    ensure(ids == path.order, || {
        format!("summaries aggregated as {ids:?}")
    })?;
    let joined: Vec<&str> = run_mc
        .cluster_summaries
        .iter()
        .map(|s| s.summary_text.trim())
        .collect();
    ensure(run_mc.final_text == joined.join("\n\n"), || {
        "final text not in path order".into()
    })?;

    let cs = run(Mode::ClusterSum)?;
    let labels = &cs.clustering.as_ref().ok_or("no clustering")?.labels;
    let mut first_seen = Vec::new();
    for &l in labels {
        if !first_seen.contains(&l) {
            first_seen.push(l);
        }
    }
    ensure(cs.summary_order == first_seen, || {
        format!(
            "cluster-sum order {:?} vs first appearance {first_seen:?}",
            cs.summary_order
        )
    })?;
    Ok(format!(
        "{} byte artifact identical twice; path {:?}; cluster-sum {:?}",
        a.len(),
        path.order,
        cs.summary_order
    ))
}

fn rouge_suite() -> Outcome {
    let r = |c: &str, r: &str, n| rouge_n(c, r, n).map_err(|e| e.to_string());
    let id = r("the quick brown fox", "the quick brown fox", 1)?;
    ensure(id.f1 == 1.0, || format!("identity f1 {}", id.f1))?;
    let dis = r("alpha beta", "gamma delta", 1)?;
    ensure(dis.f1 == 0.0, || format!("disjoint f1 {}", dis.f1))?;
    let bi = r("a b c", "a b d", 2)?;
    ensure((bi.f1 - 0.5).abs() < 1e-12, || {
        format!("bigram f1 {}", bi.f1)
    })?;

    let vocab = ["a", "b", "c", "d", "e", "the", "of", "."];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let text = |rng: &mut ChaCha8Rng| -> String {
        let len = 2 + below(rng, 20);
        let words: Vec<&str> = (0..len)
            .map(|_| vocab[below(rng, vocab.len() - 1)])
            .collect();
        words.join(" ")
    };
    for _ in 0..1000 {
        let (c, rf) = (text(&mut rng), text(&mut rng));
        for n in 1..=2 {
            let s = r(&c, &rf, n)?;
            for v in [s.precision, s.recall, s.f1] {
                ensure((0.0..=1.0).contains(&v), || {
                    format!("{v} out of range for {c:?} / {rf:?}")
                })?;
            }
        }
    }
    Ok("identity 1, disjoint 0, bigram 0.5, 1000 fuzz pairs bounded".into())
}

fn coherence_suite() -> Outcome {
    let embedder = Embedder::from_config(&EmbeddingProviderConfig::deterministic())
        .map_err(|e| e.to_string())?;
    let text = "The lighthouse keeper trims the wick. ".repeat(5);
    let c = coherence(&text, &embedder).map_err(|e| e.to_string())?;
    let one = c.first_order.ok_or("first order undefined")?;
    let two = c.second_order.ok_or("second order undefined")?;
    ensure((one - 1.0).abs() < 1e-6 && (two - 1.0).abs() < 1e-6, || {
        format!("{one} {two}")
    })?;
    let single = coherence("Just one sentence here.", &embedder).map_err(|e| e.to_string())?;
    ensure(
        single.first_order.is_none() && single.second_order.is_none(),
        || "single sentence was scored".into(),
    )?;
    Ok(format!(
        "repeated text {one:.6}/{two:.6}; single sentence undefined"
    ))
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ru", "sen", "tav", "pe", "dor", "qua", "zin", "bel", "fo", "gri", "hu",
    "jex", "wy",
];

/// Builds a document whose topics appear in a shuffled planted order and
/// returns it with that order and a word -> topic lookup.
fn planted_document(seed: u64, topics: usize) -> (String, Vec<usize>, HashMap<String, usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vec::new();
    let mut owner = HashMap::new();
    for t in 0..topics {
        let mut words = Vec::new();
        while words.len() < 10 {
            let w: String = (0..3)
                .map(|_| SYLLABLES[below(&mut rng, SYLLABLES.len())])
                .collect();
            if !owner.contains_key(&w) {
                owner.insert(w.clone(), t);
                words.push(w);
            }
        }
        vocab.push(words);
    }
    let mut order: Vec<usize> = (0..topics).collect();
    for i in (1..topics).rev() {
        order.swap(i, below(&mut rng, i + 1));
    }
    let sentence = |rng: &mut ChaCha8Rng, t: usize| -> String {
        let words: Vec<&str> = (0..8).map(|_| vocab[t][below(rng, 10)].as_str()).collect();
        format!("{}. ", words.join(" "))
    };
    let mut doc = String::new();
    for (pos, &t) in order.iter().enumerate() {
        let digress_at = (pos > 0).then(|| 4 + below(&mut rng, 10));
        for s in 0..18 {
            if Some(s) == digress_at {
                // One off-topic sentence from an earlier topic.
                let other = order[below(&mut rng, pos)];
                doc.push_str(&sentence(&mut rng, other));
            }
            doc.push_str(&sentence(&mut rng, t));
        }
    }
    (doc, order, owner)
}

fn planted_order_recovered() -> Outcome {
    let topics = 5;
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..10u64 {
        let (doc, planted, owner) = planted_document(100 + seed, topics);
        let mut cfg = mock_config(seed);
        cfg.k = Some(topics);
        let run = run_pipeline(&doc, Mode::MarkovCluster, &cfg).map_err(|e| e.to_string())?;
        let labels = &run.clustering.as_ref().ok_or("no clustering")?.labels;
        // cluster -> majority planted topic over its chunks' words
        let mut votes = vec![vec![0usize; topics]; topics];
        for (chunk, &label) in run.chunks.iter().zip(labels) {
            for (tok, _) in tokenize(&chunk.text).iter() {
                if let Some(&t) = owner.get(tok) {
                    votes[label][t] += 1;
                }
            }
        }
        let topic_of: Vec<usize> = votes
            .iter()
            .map(|v| {
                (0..topics)
                    .max_by_key(|&t| (v[t], std::cmp::Reverse(t)))
                    .unwrap_or(0)
            })
            .collect();
        let recovered: Vec<usize> = run
            .path
            .as_ref()
            .ok_or("no path")?
            .order
            .iter()
            .map(|&c| topic_of[c])
            .collect();
        if recovered == planted {
            hits += 1;
        } else {
            misses.push(seed);
        }
    }
    ensure(hits >= 9, || {
        format!("{hits}/10 recovered; missed seeds {misses:?}")
    })?;
    Ok(format!(
        "{hits}/10 planted orders recovered with {topics} topics"
    ))
}

fn main() {
    let checks: [Check; 10] = [
        ("01 dp equals brute force", dp_matches_brute_force),
        ("02 three-node path fixture", three_node_fixture),
        ("03 transition matrix", transition_matrix_exact_and_fuzzed),
        ("04 dp timing", dp_timing),
        ("05 chunker contract", chunker_contract),
        ("06 k-means++ properties", kmeans_properties),
        ("07 end-to-end determinism", end_to_end_determinism),
        ("08 rouge", rouge_suite),
        ("09 coherence", coherence_suite),
        ("10 planted topic order", planted_order_recovered),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{}/{} acceptance checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
