//! Criterion benchmarks for the commitment LPs and the repeated-game loop.
//! See `benches/`; run with `cargo bench -p pricelab-bench`.

use pricelab::learners::AlgorithmConfig;
use pricelab::simulator::{Job, RunOptions};
use pricelab::MarketModel;

/// A Bertrand run of `rounds` rounds between two learners, summary-only.
pub fn duel(k: usize, rounds: usize, a: AlgorithmConfig, b: AlgorithmConfig) -> Job {
    let model = MarketModel::bertrand(k).expect("k >= 2");
    Job::new(model, rounds, a.with_seed(1), b.with_seed(2))
        .with_options(RunOptions::with_stride(rounds))
}
