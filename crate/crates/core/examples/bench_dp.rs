//! Median exact-solver time per cluster count, as CSV.
//!
//! cargo run --release --example bench_dp -- [max_k] [trials]

use chainsum::bench::{bench_dp, to_csv};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let max_k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(18);
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    print!("{}", to_csv(&bench_dp(max_k, trials, 0)));
    Ok(())
}
