use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{AlgorithmConfig, AlgorithmKind, Feedback, PricingAlgorithm, Rate};

/// Follow the perturbed leader with one exponential perturbation per price,
/// drawn at construction and scaled by `scale`. Plays point masses.
pub struct Ftpl {
    config: AlgorithmConfig,
    perturbation: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Ftpl {
    pub fn with_config(k: usize, scale: f64, config: AlgorithmConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let perturbation = (0..k)
            .map(|_| {
                let z: f64 = Exp1.sample(&mut rng);
                scale * z
            })
            .collect::<Vec<f64>>();
        Ftpl {
            config,
            perturbation,
            cumulative: vec![0.0; k],
        }
    }

    pub fn perturbation(&self) -> &[f64] {
        &self.perturbation
    }

    /// Current leader, lowest index on ties.
    pub fn leader(&self) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, (s, z)) in self.cumulative.iter().zip(&self.perturbation).enumerate() {
            if s + z > best_v {
                best_v = s + z;
                best = i;
            }
        }
        best
    }
}

/// FTPL on `k` prices; `scale` defaults to `sqrt(T)`.
pub fn ftpl(k: usize, rounds: usize, scale: Option<f64>, seed: u64) -> Ftpl {
    let scale = scale.unwrap_or_else(|| (rounds as f64).sqrt());
    let config = AlgorithmConfig::new(AlgorithmKind::Ftpl {
        scale: Rate::Fixed(scale),
    })
    .with_seed(seed);
    Ftpl::with_config(k, scale, config)
}

impl PricingAlgorithm for Ftpl {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, _round: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.cumulative.len()];
        w[self.leader()] = 1.0;
        w
    }

    fn observe(&mut self, feedback: &Feedback<'_>) {
        for (s, p) in self.cumulative.iter_mut().zip(feedback.payoffs) {
            *s += p;
        }
    }
}
