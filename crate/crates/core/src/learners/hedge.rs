use super::{AlgorithmConfig, AlgorithmKind, Feedback, PricingAlgorithm, Rate};

/// `sqrt(ln k / T)`; any positive rate works for k = 1.
pub fn default_hedge_rate(k: usize, rounds: usize) -> f64 {
    if k < 2 {
        return 1.0;
    }
    ((k as f64).ln() / rounds.max(1) as f64).sqrt()
}

/// Exponential weights over cumulative payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    eta: f64,
    cumulative: Vec<f64>,
}

impl HedgeState {
    pub fn new(k: usize, eta: f64) -> Self {
        HedgeState {
            eta,
            cumulative: vec![0.0; k],
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn distribution_into(&self, out: &mut [f64]) {
        let top = self
            .cumulative
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (o, s) in out.iter_mut().zip(&self.cumulative) {
            *o = (self.eta * (s - top)).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    pub fn distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cumulative.len()];
        self.distribution_into(&mut out);
        out
    }

    pub fn update(&mut self, payoffs: &[f64], scale: f64) {
        for (s, p) in self.cumulative.iter_mut().zip(payoffs) {
            *s += scale * p;
        }
    }
}

pub struct Hedge {
    config: AlgorithmConfig,
    state: HedgeState,
}

impl Hedge {
    pub fn with_config(k: usize, eta: f64, config: AlgorithmConfig) -> Self {
        Hedge {
            config,
            state: HedgeState::new(k, eta),
        }
    }

    pub fn state(&self) -> &HedgeState {
        &self.state
    }
}

/// Hedge on `k` prices; `eta` defaults to [`default_hedge_rate`].
pub fn hedge(k: usize, rounds: usize, eta: Option<f64>) -> Hedge {
    let eta = eta.unwrap_or_else(|| default_hedge_rate(k, rounds));
    let config = AlgorithmConfig::new(AlgorithmKind::Hedge {
        eta: Rate::Fixed(eta),
    });
    Hedge::with_config(k, eta, config)
}

impl PricingAlgorithm for Hedge {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, _round: usize) -> Vec<f64> {
        self.state.distribution()
    }

    fn observe(&mut self, feedback: &Feedback<'_>) {
        self.state.update(feedback.payoffs, 1.0);
    }
}
