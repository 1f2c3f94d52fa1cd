//! Most probable visiting order of all clusters: exact bitmask DP, checked
//! against brute force and compared with the greedy heuristic.
//!
//! cargo run --release --example hamiltonian_path -- [k] [seed]

use std::time::Instant;

use chainsum::markov::TransitionMatrix;
use chainsum::numfmt::compact;
use chainsum::pathfinding::{
    random_transition_matrix, solve_brute_force, solve_dp, solve_greedy, BRUTE_FORCE_CAP,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = TransitionMatrix::from_rows(vec![
        vec![0.1, 0.2, 0.7],
        vec![0.3, 0.3, 0.4],
        vec![0.2, 0.8, 0.0],
    ]);
    let best = solve_dp(&t)?;
    println!(
        "3 clusters: order {:?}, p = {}",
        best.order,
        compact(best.probability())
    );

    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(9);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let t = random_transition_matrix(k, seed);

    let started = Instant::now();
    let dp = solve_dp(&t)?;
    println!(
        "k = {k}: dp {:?} log p = {:.6} in {:?}",
        dp.order,
        dp.log_prob,
        started.elapsed()
    );
    let greedy = solve_greedy(&t)?;
    println!(
        "k = {k}: greedy {:?} log p = {:.6}",
        greedy.order, greedy.log_prob
    );
    if k <= BRUTE_FORCE_CAP {
        let bf = solve_brute_force(&t)?;
        println!("brute force agrees: {}", bf.order == dp.order);
    }
    Ok(())
}
