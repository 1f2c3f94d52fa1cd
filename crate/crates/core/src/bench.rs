//! Timing of the exact path solver on random transition matrices.

use std::time::Instant;

use crate::pathfinding::{random_transition_matrix, solve_dp_with_cap, DEFAULT_DP_CAP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    pub median_ms: f64,
}

/// Median DP solve time for each `k` in `2..=max_k`, over `trials` random
/// matrices per size (matrix `t` of size `k` uses seed `seed + t`).
pub fn bench_dp(max_k: usize, trials: usize, seed: u64) -> Vec<BenchRow> {
    bench_dp_sizes(2..=max_k.min(DEFAULT_DP_CAP), trials, seed)
}

pub fn bench_dp_sizes(
    sizes: impl IntoIterator<Item = usize>,
    trials: usize,
    seed: u64,
) -> Vec<BenchRow> {
    let trials = trials.max(1);
    sizes
        .into_iter()
        .map(|k| {
            let mut times: Vec<f64> = (0..trials)
                .map(|t| {
                    let matrix = random_transition_matrix(k, seed.wrapping_add(t as u64));
                    let started = Instant::now();
                    let path = solve_dp_with_cap(&matrix, DEFAULT_DP_CAP).expect("k within cap");
                    let ms = started.elapsed().as_secs_f64() * 1e3;
                    std::hint::black_box(path);
                    ms
                })
                .collect();
            times.sort_by(f64::total_cmp);
            let mid = times.len() / 2;
            let median_ms = if times.len() % 2 == 1 {
                times[mid]
            } else {
                (times[mid - 1] + times[mid]) / 2.0
            };
            BenchRow { k, median_ms }
        })
        .collect()
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("k,median_ms\n");
    for row in rows {
        out.push_str(&format!("{},{:.3}\n", row.k, row.median_ms));
    }
    out
}
