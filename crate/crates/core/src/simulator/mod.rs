//! The T-round repeated game between two algorithms.
//!
//! Play uses expected payoffs throughout: no prices are sampled, so a run is
//! a deterministic function of the two configurations. Regret and frequency
//! statistics are accumulated while the game runs, which lets long runs keep
//! only every m-th round on disk.

mod audit;
mod summary;
mod transcript;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{AlgorithmConfig, Feedback, Gamma, PricingAlgorithm};
use crate::stage_game::{payoff_matrices, MarketModel, PriceDistribution};

pub use audit::{
    algorithm_space_gaps, audit, average_buyer_price, convergence_profile, cumulative_payoffs,
    external_regret, frequency_above, swap_regret, AlgorithmSpaceGaps, AuditReport, Check,
    ConvergenceProfile, PlayerAudit, Relation, ACCOUNTING_TOLERANCE,
};
pub use summary::{tail_start, PlayerStats, RunSummary};
pub use transcript::{RoundRecord, Transcript, TranscriptHeader, FORMAT_VERSION, ROUND_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Keep every `stride`-th round; 1 keeps all of them.
    pub stride: usize,
    /// Threshold used by the streaming mean-based check.
    pub gamma: Gamma,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            stride: 1,
            gamma: Gamma::default(),
        }
    }
}

impl RunOptions {
    pub fn with_stride(stride: usize) -> Self {
        RunOptions {
            stride,
            ..Default::default()
        }
    }
}

fn invalid(round: usize, player: usize, reason: impl Into<String>) -> Error {
    Error::InvalidRound {
        round,
        player,
        reason: reason.into(),
    }
}

fn check_weights(w: &[f64], k: usize, round: usize, player: usize) -> Result<()> {
    if w.len() != k {
        return Err(invalid(
            round,
            player,
            format!("emitted {} weights for {k} prices", w.len()),
        ));
    }
    PriceDistribution::validate(w).map_err(|e| invalid(round, player, e.to_string()))
}

/// Plays `rounds` rounds. Player 1 is seller one (payoff matrix A).
pub fn run(
    alg1: &mut dyn PricingAlgorithm,
    alg2: &mut dyn PricingAlgorithm,
    model: &MarketModel,
    rounds: usize,
    options: &RunOptions,
) -> Result<Transcript> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("a run needs T >= 1".into()));
    }
    if options.stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let k = model.k();
    let m = payoff_matrices(model)?;
    let header = TranscriptHeader {
        format_version: FORMAT_VERSION,
        model: *model,
        k,
        tau: model.tau(),
        rounds,
        stride: options.stride,
        players: [alg1.config().clone(), alg2.config().clone()],
        seeds: [alg1.config().seed, alg2.config().seed],
    };
    let mut summary = RunSummary::new(k, rounds, options.gamma);
    let mut records = Vec::with_capacity(if options.stride == 1 {
        rounds
    } else {
        rounds / options.stride + 2
    });
    let mut p1 = vec![0.0; k];
    let mut p2 = vec![0.0; k];
    for t in 1..=rounds {
        let keep = t == 1
            || t == rounds
            || t % options.stride == 0
            || alg1.is_phase_boundary(t)
            || alg2.is_phase_boundary(t);
        let w1 = alg1.next(t);
        check_weights(&w1, k, t, 1)?;
        let w2 = alg2.next(t);
        check_weights(&w2, k, t, 2)?;
        m.seller1_payoffs_into(&w2, &mut p1);
        m.seller2_payoffs_into(&w1, &mut p2);
        let u1: f64 = w1.iter().zip(&p1).map(|(x, p)| x * p).sum();
        let u2: f64 = w2.iter().zip(&p2).map(|(x, p)| x * p).sum();
        summary.record(t, &w1, &w2, &p1, &p2, u1, u2);
        alg1.observe(&Feedback {
            round: t,
            own: &w1,
            opponent: &w2,
            payoffs: &p1,
        });
        alg2.observe(&Feedback {
            round: t,
            own: &w2,
            opponent: &w1,
            payoffs: &p2,
        });
        if keep {
            records.push(RoundRecord {
                round: t,
                d1: w1,
                d2: w2,
                u1,
                u2,
                buyer_price: u1 + u2,
            });
        }
    }
    Ok(Transcript {
        header,
        records,
        summary,
    })
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub model: MarketModel,
    pub rounds: usize,
    pub players: [AlgorithmConfig; 2],
    #[serde(default)]
    pub options: RunOptions,
}

impl Job {
    pub fn new(
        model: MarketModel,
        rounds: usize,
        p1: AlgorithmConfig,
        p2: AlgorithmConfig,
    ) -> Self {
        Job {
            model,
            rounds,
            players: [p1, p2],
            options: RunOptions::default(),
        }
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    pub fn run(&self) -> Result<Transcript> {
        let mut a = self.players[0].build(&self.model, self.rounds)?;
        let mut b = self.players[1].build(&self.model, self.rounds)?;
        run(
            a.as_mut(),
            b.as_mut(),
            &self.model,
            self.rounds,
            &self.options,
        )
    }
}

/// Runs independent jobs in parallel; results come back in input order.
pub fn run_batch(jobs: &[Job]) -> Vec<Result<Transcript>> {
    jobs.par_iter().map(Job::run).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{hedge, static_algorithm, AlgorithmKind, Rate};
    use crate::stage_game::Price;

    struct Broken;

    impl PricingAlgorithm for Broken {
        fn config(&self) -> &AlgorithmConfig {
            static C: std::sync::OnceLock<AlgorithmConfig> = std::sync::OnceLock::new();
            C.get_or_init(|| AlgorithmConfig::new(AlgorithmKind::Uniform))
        }

        fn next(&mut self, round: usize) -> Vec<f64> {
            if round < 3 {
                vec![0.5, 0.5]
            } else {
                vec![0.7, 0.7]
            }
        }

        fn observe(&mut self, _feedback: &Feedback<'_>) {}
    }

    #[test]
    fn invalid_output_aborts_with_round_and_player() {
        let model = MarketModel::bertrand(2).unwrap();
        let mut other = static_algorithm(PriceDistribution::uniform(2));
        let err = run(&mut other, &mut Broken, &model, 10, &RunOptions::default()).unwrap_err();
        match err {
            Error::InvalidRound { round, player, .. } => assert_eq!((round, player), (3, 2)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn stride_keeps_ends_and_multiples() {
        let model = MarketModel::bertrand(5).unwrap();
        let mut a = hedge(5, 25, None);
        let mut b = static_algorithm(PriceDistribution::point_mass(5, Price::from_index(2)));
        let t = run(&mut a, &mut b, &model, 25, &RunOptions::with_stride(10)).unwrap();
        let kept: Vec<usize> = t.records.iter().map(|r| r.round).collect();
        assert_eq!(kept, vec![1, 10, 20, 25]);
        assert!(!t.is_complete());
    }

    #[test]
    fn zero_rounds_is_rejected() {
        let model = MarketModel::bertrand(2).unwrap();
        let mut a = static_algorithm(PriceDistribution::uniform(2));
        let mut b = static_algorithm(PriceDistribution::uniform(2));
        assert!(run(&mut a, &mut b, &model, 0, &RunOptions::default()).is_err());
    }

    #[test]
    fn batch_preserves_order() {
        let model = MarketModel::bertrand(4).unwrap();
        let jobs: Vec<Job> = (1..=4)
            .map(|lvl| {
                let p = lvl as f64 / 4.0;
                Job::new(
                    model,
                    10,
                    AlgorithmConfig::static_price(p),
                    AlgorithmConfig::static_price(p),
                )
            })
            .collect();
        let out = run_batch(&jobs);
        for (lvl, t) in (1..=4).zip(out) {
            let t = t.unwrap();
            assert!((t.summary.average_buyer_price() - lvl as f64 / 4.0).abs() < 1e-15);
        }
        let bad = Job::new(
            model,
            10,
            AlgorithmConfig::new(AlgorithmKind::Hedge {
                eta: Rate::Fixed(-1.0),
            }),
            AlgorithmConfig::hedge(),
        );
        assert!(run_batch(&[bad]).pop().unwrap().is_err());
    }
}
