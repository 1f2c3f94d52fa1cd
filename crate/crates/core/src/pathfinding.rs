//! Most probable Hamiltonian path over a transition matrix.
//!
//! A path visits every state exactly once, with free start and end, and is
//! scored by the product of its edge probabilities. All solvers work in log
//! space (`ln 0 = -inf`), so long paths do not underflow and zero edges stay
//! comparable. Equal scores are broken in favour of the lexicographically
//! smaller order.
//!
//! Three solvers share that contract:
//!
//! * [`solve_dp`]: exact subset DP (Held-Karp style), `O(k^2 2^k)` time and
//!   `O(k 2^k)` space, capped at 22 states by default.
//! * [`solve_brute_force`]: exhaustive enumeration of all `k!` orders, used as
//!   the oracle; refuses `k > 10`.
//! * [`solve_greedy`]: best of `k` nearest-neighbour walks, one per start.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::SeededRng;
use crate::markov::TransitionMatrix;

pub const DEFAULT_DP_CAP: usize = 22;
pub const BRUTE_FORCE_CAP: usize = 10;
const NO_PARENT: u8 = u8::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("transition matrix has no states")]
    Empty,
    #[error("transition matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error(
        "{k} states exceed the exact solver cap of {cap}; use the greedy solver \
         (or raise the cap, memory grows as k * 2^k)"
    )]
    TooLarge { k: usize, cap: usize },
    #[error("brute force refuses {k} states (limit {limit})")]
    BruteForceRefused { k: usize, limit: usize },
    #[error("{0:?} is not a permutation of 0..{1}")]
    NotPermutation(Vec<usize>, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Dp,
    Brute,
    Greedy,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Dp => "dp",
            SolveMethod::Brute => "brute",
            SolveMethod::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianPath {
    pub order: Vec<usize>,
    #[serde(with = "crate::numfmt")]
    pub log_prob: f64,
    pub method: SolveMethod,
}

impl HamiltonianPath {
    pub fn probability(&self) -> f64 {
        self.log_prob.exp()
    }
}

fn check_square(t: &TransitionMatrix) -> Result<usize, PathError> {
    let k = t.probs.len();
    if k == 0 {
        return Err(PathError::Empty);
    }
    if let Some((row, r)) = t.probs.iter().enumerate().find(|(_, r)| r.len() != k) {
        return Err(PathError::NotSquare {
            rows: k,
            row,
            len: r.len(),
        });
    }
    Ok(k)
}

/// Natural log of every entry, `-inf` for zeros.
pub fn log_weights(t: &TransitionMatrix) -> Vec<Vec<f64>> {
    t.probs
        .iter()
        .map(|row| {
            row.iter()
                .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
                .collect()
        })
        .collect()
}

/// Sums edge weights from the last edge back to the first. The DP builds
/// its values in this association, so identical paths score bit-identically
/// across all solvers.
fn score(weights: &[Vec<f64>], order: &[usize]) -> f64 {
    order
        .windows(2)
        .rev()
        .fold(0.0, |acc, e| acc + weights[e[0]][e[1]])
}

pub fn path_probability(t: &TransitionMatrix, order: &[usize]) -> Result<f64, PathError> {
    let k = check_square(t)?;
    let mut seen = vec![false; k];
    let is_perm = order.len() == k
        && order
            .iter()
            .all(|&i| i < k && !std::mem::replace(&mut seen[i], true));
    if !is_perm {
        return Err(PathError::NotPermutation(order.to_vec(), k));
    }
    Ok(score(&log_weights(t), order))
}

/// Subset DP table: `value(mask, i)` is the best total weight of a path that
/// visits exactly the nodes in `mask` and ends at `i`; `parent(mask, i)` is
/// the predecessor of `i` on that path. Predecessors are scanned in
/// ascending order and only replaced on strict improvement, so the stored
/// parent is the lowest-numbered optimal one.
pub struct SubsetTable {
    n: usize,
    values: Vec<f64>,
    parents: Vec<u8>,
}

impl SubsetTable {
    /// Fills the table for edge weights `weights[from][to]` (log space).
    pub fn build(weights: &[Vec<f64>]) -> Self {
        let n = weights.len();
        assert!(
            n <= 32 && n < NO_PARENT as usize,
            "subset table supports up to 32 nodes"
        );
        let size = 1usize << n;
        let mut values = vec![f64::NEG_INFINITY; size * n];
        let mut parents = vec![NO_PARENT; size * n];
        for i in 0..n {
            values[(1 << i) * n + i] = 0.0;
        }
        // Removing a bit always yields a smaller integer, so ascending mask
        // order visits every predecessor subset first.
        for mask in 1..size {
            if mask.is_power_of_two() {
                continue;
            }
            let mut ends = mask;
            while ends != 0 {
                let i = ends.trailing_zeros() as usize;
                ends &= ends - 1;
                let prev = mask ^ (1 << i);
                let prev_row = &values[prev * n..prev * n + n];
                let mut best = f64::NEG_INFINITY;
                let mut parent = NO_PARENT;
                let mut preds = prev;
                while preds != 0 {
                    let j = preds.trailing_zeros() as usize;
                    preds &= preds - 1;
                    let cand = prev_row[j] + weights[j][i];
                    if cand > best {
                        best = cand;
                        parent = j as u8;
                    }
                }
                values[mask * n + i] = best;
                parents[mask * n + i] = parent;
            }
        }
        Self { n, values, parents }
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn value(&self, mask: usize, end: usize) -> f64 {
        self.values[mask * self.n + end]
    }

    pub fn parent(&self, mask: usize, end: usize) -> Option<usize> {
        match self.parents[mask * self.n + end] {
            NO_PARENT => None,
            p => Some(p as usize),
        }
    }
}

pub fn solve_dp(t: &TransitionMatrix) -> Result<HamiltonianPath, PathError> {
    solve_dp_with_cap(t, DEFAULT_DP_CAP)
}

pub fn solve_dp_with_cap(t: &TransitionMatrix, cap: usize) -> Result<HamiltonianPath, PathError> {
    let k = check_square(t)?;
    if k > cap || k > 30 {
        return Err(PathError::TooLarge {
            k,
            cap: cap.min(30),
        });
    }
    let weights = log_weights(t);
    // The table is built on the transposed weights: a best path ending at i
    // there is, read backwards, a best path of the original matrix starting
    // at i. Reconstruction then runs front to back, and taking the lowest
    // optimal node at every step yields the lexicographically smallest
    // optimal order.
    let transposed: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| weights[j][i]).collect())
        .collect();
    let table = SubsetTable::build(&transposed);

    let full = (1usize << k) - 1;
    let mut start = 0;
    for i in 1..k {
        if table.value(full, i) > table.value(full, start) {
            start = i;
        }
    }
    let log_prob = table.value(full, start);

    let mut order = Vec::with_capacity(k);
    let mut mask = full;
    let mut cur = start;
    order.push(cur);
    while mask != 1 << cur {
        let rest = mask ^ (1 << cur);
        // No parent means every continuation scores -inf; all tie, so the
        // lowest remaining node is next.
        let next = table
            .parent(mask, cur)
            .unwrap_or_else(|| rest.trailing_zeros() as usize);
        order.push(next);
        mask = rest;
        cur = next;
    }

    Ok(HamiltonianPath {
        order,
        log_prob,
        method: SolveMethod::Dp,
    })
}

/// Rearranges `v` into its lexicographic successor; false once `v` is the
/// last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

pub fn solve_brute_force(t: &TransitionMatrix) -> Result<HamiltonianPath, PathError> {
    let k = check_square(t)?;
    if k > BRUTE_FORCE_CAP {
        return Err(PathError::BruteForceRefused {
            k,
            limit: BRUTE_FORCE_CAP,
        });
    }
    let weights = log_weights(t);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_order = perm.clone();
    let mut best = score(&weights, &perm);
    while next_permutation(&mut perm) {
        let s = score(&weights, &perm);
        if s > best {
            best = s;
            best_order.copy_from_slice(&perm);
        }
    }
    Ok(HamiltonianPath {
        order: best_order,
        log_prob: best,
        method: SolveMethod::Brute,
    })
}

pub fn solve_greedy(t: &TransitionMatrix) -> Result<HamiltonianPath, PathError> {
    let k = check_square(t)?;
    let weights = log_weights(t);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in 0..k {
        let mut visited = vec![false; k];
        let mut order = vec![start];
        visited[start] = true;
        let mut cur = start;
        while order.len() < k {
            let mut next = None;
            for j in (0..k).filter(|&j| !visited[j]) {
                if next.is_none_or(|n: usize| weights[cur][j] > weights[cur][n]) {
                    next = Some(j);
                }
            }
            let next = next.expect("unvisited node remains");
            visited[next] = true;
            order.push(next);
            cur = next;
        }
        let s = score(&weights, &order);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, order));
        }
    }
    let (log_prob, order) = best.expect("k >= 1");
    Ok(HamiltonianPath {
        order,
        log_prob,
        method: SolveMethod::Greedy,
    })
}

/// Exact DP when `k <= cap`, greedy otherwise.
pub fn solve(t: &TransitionMatrix, cap: usize) -> Result<HamiltonianPath, PathError> {
    match solve_dp_with_cap(t, cap) {
        Err(PathError::TooLarge { .. }) => solve_greedy(t),
        other => other,
    }
}

/// A random row-stochastic matrix with strictly positive entries.
pub fn random_transition_matrix(k: usize, seed: u64) -> TransitionMatrix {
    let mut rng = SeededRng::new(seed);
    let probs = (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
        .collect();
    TransitionMatrix::from_rows(probs)
}
