//! k-means++ seeding, Lloyd iterations and centroid-nearest representatives.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Only raw
//! `next_u64` outputs are consumed, converted to a uniform double in [0, 1)
//! as `(x >> 11) * 2^-53`, so the draws do not depend on `rand`'s sampling
//! helpers.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_N_INIT: usize = 10;
pub const DEFAULT_TOP_K: usize = 5;
pub const MAX_AUTO_K: usize = 22;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("cannot form {k} clusters from {distinct} distinct vectors")]
    Infeasible { k: usize, distinct: usize },
    #[error("vectors have inconsistent dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id of each chunk, in document order.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Inertia after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Cluster ids in order of first appearance in the label sequence.
    pub fn first_appearance_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.k];
        let mut order = Vec::with_capacity(self.k);
        for &l in &self.labels {
            if !seen[l] {
                seen[l] = true;
                order.push(l);
            }
        }
        order
    }
}

/// Per cluster, chunk indices ordered by distance to the centroid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterRepresentatives(pub Vec<Vec<usize>>);

impl ClusterRepresentatives {
    pub fn for_cluster(&self, id: usize) -> &[usize] {
        &self.0[id]
    }
}

pub(crate) struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub(crate) fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub(crate) fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims<V: AsRef<[f64]>>(vectors: &[V]) -> Result<(), ClusterError> {
    if let Some(first) = vectors.first() {
        let d = first.as_ref().len();
        if let Some(bad) = vectors.iter().find(|v| v.as_ref().len() != d) {
            return Err(ClusterError::DimensionMismatch(d, bad.as_ref().len()));
        }
    }
    Ok(())
}

/// Number of distinct vectors (bitwise, with -0.0 folded into 0.0).
pub fn distinct_count<V: AsRef<[f64]>>(vectors: &[V]) -> usize {
    let mut keys: Vec<Vec<u64>> = vectors
        .iter()
        .map(|v| v.as_ref().iter().map(|x| (x + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn check_feasible<V: AsRef<[f64]>>(vectors: &[V], k: usize) -> Result<(), ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    check_dims(vectors)?;
    let distinct = distinct_count(vectors);
    if k > distinct {
        return Err(ClusterError::Infeasible { k, distinct });
    }
    Ok(())
}

/// k-means++ seeding: first centroid uniform, the rest drawn with
/// probability proportional to squared distance to the nearest chosen one.
pub fn kmeanspp_seed<V: AsRef<[f64]>>(
    vectors: &[V],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ClusterError> {
    check_feasible(vectors, k)?;
    let mut rng = SeededRng::new(seed);
    Ok(seed_with(vectors, k, &mut rng))
}

fn seed_with<V: AsRef<[f64]>>(vectors: &[V], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let first = rng.below(n);
    let mut centroids = vec![vectors[first].as_ref().to_vec()];
    let mut nearest: Vec<f64> = vectors
        .iter()
        .map(|v| squared_distance(v.as_ref(), &centroids[0]))
        .collect();

    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let target = rng.next_f64() * total;
        let mut cumulative = 0.0;
        let mut pick = None;
        for (i, &w) in nearest.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            cumulative += w;
            pick = Some(i);
            if cumulative > target {
                break;
            }
        }
        let pick = pick.expect("k <= distinct vectors leaves positive mass");
        let chosen = vectors[pick].as_ref().to_vec();
        for (d, v) in nearest.iter_mut().zip(vectors) {
            *d = d.min(squared_distance(v.as_ref(), &chosen));
        }
        centroids.push(chosen);
    }
    centroids
}

/// Nearest centroid, lowest id on ties.
fn nearest_centroid(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(v, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia_of<V: AsRef<[f64]>>(vectors: &[V], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    vectors
        .iter()
        .zip(labels)
        .map(|(v, &l)| squared_distance(v.as_ref(), &centroids[l]))
        .sum()
}

/// Moves the point farthest from its current centroid (taken from a cluster
/// with more than one member) into each empty cluster.
fn repair_empty<V: AsRef<[f64]>>(vectors: &[V], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, v) in vectors.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = squared_distance(v.as_ref(), &centroids[labels[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("n >= k guarantees a cluster with two members");
        labels[i] = empty;
        centroids[empty] = vectors[i].as_ref().to_vec();
    }
}

fn update_centroids<V: AsRef<[f64]>>(vectors: &[V], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = vectors[0].as_ref().len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &l) in vectors.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(v.as_ref()) {
            *s += x;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        for s in sum.iter_mut() {
            *s /= count as f64;
        }
    }
    sums
}

/// [`kmeans_with_restarts`] with [`DEFAULT_N_INIT`] restarts.
pub fn kmeans<V: AsRef<[f64]>>(
    vectors: &[V],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<ClusterAssignment, ClusterError> {
    kmeans_with_restarts(vectors, k, seed, max_iters, tol, DEFAULT_N_INIT)
}

/// Runs Lloyd's algorithm from `n_init` successive k-means++ seedings (one
/// RNG stream) and keeps the lowest final inertia, earliest run on ties.
/// Each run stops once every centroid moves less than `tol` or after
/// `max_iters` iterations.
pub fn kmeans_with_restarts<V: AsRef<[f64]>>(
    vectors: &[V],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
    n_init: usize,
) -> Result<ClusterAssignment, ClusterError> {
    check_feasible(vectors, k)?;
    let mut rng = SeededRng::new(seed);
    let mut best: Option<ClusterAssignment> = None;
    for _ in 0..n_init.max(1) {
        let run = lloyd(vectors, k, seed, max_iters, tol, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

fn lloyd<V: AsRef<[f64]>>(
    vectors: &[V],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
    rng: &mut SeededRng,
) -> ClusterAssignment {
    let mut centroids = seed_with(vectors, k, rng);
    let mut labels = vec![0usize; vectors.len()];
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iters.max(1) {
        iterations += 1;
        for (label, v) in labels.iter_mut().zip(vectors) {
            *label = nearest_centroid(v.as_ref(), &centroids).0;
        }
        repair_empty(vectors, &mut labels, &mut centroids);
        let updated = update_centroids(vectors, &labels, k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;

        let inertia = inertia_of(vectors, &labels, &centroids);
        if let Some(&prev) = history.last() {
            debug_assert!(
                inertia <= prev + 1e-12 * prev.max(1.0),
                "inertia increased from {prev} to {inertia}"
            );
        }
        history.push(inertia);
        if shift < tol {
            break;
        }
    }

    ClusterAssignment {
        inertia: *history.last().expect("at least one iteration"),
        labels,
        centroids,
        k,
        seed,
        iterations,
        inertia_history: history,
    }
}

/// The `top_k` members of each cluster closest to its centroid, ties broken
/// by lower chunk index.
pub fn representatives<V: AsRef<[f64]>>(
    assignment: &ClusterAssignment,
    vectors: &[V],
    top_k: usize,
) -> ClusterRepresentatives {
    let mut members: Vec<Vec<(f64, usize)>> = vec![Vec::new(); assignment.k];
    for (i, (v, &l)) in vectors.iter().zip(&assignment.labels).enumerate() {
        members[l].push((squared_distance(v.as_ref(), &assignment.centroids[l]), i));
    }
    ClusterRepresentatives(
        members
            .into_iter()
            .map(|mut m| {
                m.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                m.into_iter().take(top_k).map(|(_, i)| i).collect()
            })
            .collect(),
    )
}

/// The explicit `k` when given, else `clamp(round(sqrt(n / 2)), 2, 22)`;
/// never more than `num_chunks`.
pub fn choose_k(num_chunks: usize, explicit_k: Option<usize>) -> usize {
    let k = match explicit_k {
        Some(k) => k,
        None => ((num_chunks as f64 / 2.0).sqrt().round() as usize).clamp(2, MAX_AUTO_K),
    };
    k.min(num_chunks)
}

/// Orders two partitions' labelings by canonical form; used to compare
/// clusterings up to label renaming.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map.len() <= l {
                map.resize(l + 1, None);
            }
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}
