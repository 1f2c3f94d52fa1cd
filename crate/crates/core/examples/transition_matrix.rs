//! Estimate a cluster-to-cluster Markov chain from a label sequence.
//!
//! cargo run --example transition_matrix -- 0 0 1 2 1

use chainsum::markov::{
    build_transition_matrix, collapse_runs, transition_counts, validate_row_stochastic,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut labels: Vec<usize> = std::env::args()
        .skip(1)
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    if labels.is_empty() {
        labels = vec![0, 0, 1, 2, 1, 3, 3, 1, 2];
    }
    let k = labels.iter().max().unwrap() + 1;

    println!("sequence: {labels:?}");
    println!("counts:   {:?}", transition_counts(&labels, k)?);
    let t = build_transition_matrix(&labels, k)?;
    for (i, row) in t.probs.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        println!("  {i}: [{}]", cells.join(", "));
    }
    println!("rows without outgoing transitions: {:?}", t.zero_rows);
    println!("row-stochastic: {}", validate_row_stochastic(&t));
    println!("collapsed runs: {:?}", collapse_runs(&labels));
    Ok(())
}
