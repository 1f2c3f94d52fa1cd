//! First-order transition matrix between clusters, estimated from the
//! document-order sequence of chunk labels.
//!
//! `probs[i][j]` is the number of adjacent pairs `(i, j)` in the sequence
//! divided by the number of pairs starting at `i`. Self-transitions count.
//! A state with no outgoing pair keeps an all-zero row and is listed in
//! `zero_rows`; it is never smoothed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarkovError {
    #[error("label sequence is empty")]
    EmptySequence,
    #[error("label {label} at position {position} is out of range for k = {k}")]
    LabelOutOfRange {
        label: usize,
        position: usize,
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub k: usize,
    /// Row-major k x k probabilities.
    pub probs: Vec<Vec<f64>>,
    pub zero_rows: BTreeSet<usize>,
}

impl TransitionMatrix {
    /// Wraps an explicit matrix, deriving `zero_rows` from all-zero rows.
    pub fn from_rows(probs: Vec<Vec<f64>>) -> Self {
        let zero_rows = probs
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().all(|&p| p == 0.0))
            .map(|(i, _)| i)
            .collect();
        Self {
            k: probs.len(),
            probs,
            zero_rows,
        }
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.probs[from][to]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }
}

/// Raw pair counts `counts[i][j]` over adjacent labels.
pub fn transition_counts(labels: &[usize], k: usize) -> Result<Vec<Vec<u64>>, MarkovError> {
    if let Some((position, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(MarkovError::LabelOutOfRange { label, position, k });
    }
    let mut counts = vec![vec![0u64; k]; k];
    for pair in labels.windows(2) {
        counts[pair[0]][pair[1]] += 1;
    }
    Ok(counts)
}

/// Drops consecutive repeats, e.g. `[0, 0, 1, 1, 0]` becomes `[0, 1, 0]`.
pub fn collapse_runs(labels: &[usize]) -> Vec<usize> {
    let mut out = labels.to_vec();
    out.dedup();
    out
}

pub fn build_transition_matrix(
    labels: &[usize],
    k: usize,
) -> Result<TransitionMatrix, MarkovError> {
    if labels.is_empty() {
        return Err(MarkovError::EmptySequence);
    }
    let counts = transition_counts(labels, k)?;
    let mut zero_rows = BTreeSet::new();
    let probs = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                zero_rows.insert(i);
                vec![0.0; k]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(TransitionMatrix {
        k,
        probs,
        zero_rows,
    })
}

/// Checks shape, entry range, row sums (within 1e-9) and that `zero_rows`
/// lists exactly the all-zero rows.
pub fn validate_row_stochastic(t: &TransitionMatrix) -> bool {
    if t.probs.len() != t.k || t.zero_rows.iter().any(|&r| r >= t.k) {
        return false;
    }
    t.probs.iter().enumerate().all(|(i, row)| {
        if row.len() != t.k || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return false;
        }
        if t.zero_rows.contains(&i) {
            row.iter().all(|&p| p == 0.0)
        } else {
            (row.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_label_has_no_transitions() {
        let t = build_transition_matrix(&[0], 1).unwrap();
        assert_eq!(t.probs, vec![vec![0.0]]);
        assert_eq!(t.zero_rows, BTreeSet::from([0]));
        assert!(validate_row_stochastic(&t));
    }

    #[test]
    fn hand_counted_sequence() {
        let t = build_transition_matrix(&[0, 0, 1, 2, 1], 3).unwrap();
        assert_eq!(
            t.probs,
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0]
            ]
        );
        assert!(t.zero_rows.is_empty());
    }

    #[test]
    fn alternating_sequence() {
        let t = build_transition_matrix(&[0, 1, 0, 1], 2).unwrap();
        assert_eq!(t.probs, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn final_only_cluster_is_zero_row() {
        let t = build_transition_matrix(&[0, 1, 0, 2], 3).unwrap();
        assert_eq!(t.zero_rows, BTreeSet::from([2]));
        assert!(validate_row_stochastic(&t));
    }

    #[test]
    fn out_of_range_label() {
        assert_eq!(
            build_transition_matrix(&[0, 3], 3),
            Err(MarkovError::LabelOutOfRange {
                label: 3,
                position: 1,
                k: 3
            })
        );
        assert_eq!(
            build_transition_matrix(&[], 2),
            Err(MarkovError::EmptySequence)
        );
    }

    #[test]
    fn validation_cases() {
        let mut bad = TransitionMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.0, 1.0]]);
        assert!(!validate_row_stochastic(&bad));
        bad.probs[0][1] = 0.5;
        assert!(validate_row_stochastic(&bad));
        assert!(validate_row_stochastic(&TransitionMatrix::from_rows(vec![
            vec![1.0]
        ])));

        let mut mislabeled = TransitionMatrix::from_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
        mislabeled.zero_rows.clear();
        assert!(!validate_row_stochastic(&mislabeled));
    }

    #[test]
    fn collapse() {
        assert_eq!(collapse_runs(&[0, 0, 1, 1, 1, 0, 2, 2]), vec![0, 1, 0, 2]);
        assert_eq!(collapse_runs(&[]), Vec::<usize>::new());
    }
}
