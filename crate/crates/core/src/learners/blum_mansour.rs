use nalgebra::{DMatrix, DVector};

use super::hedge::HedgeState;
use super::{AlgorithmConfig, AlgorithmKind, Feedback, PricingAlgorithm, Rate};

/// Residual `max |xQ - x|` accepted for a stationary distribution.
pub const STATIONARY_RESIDUAL: f64 = 1e-12;

/// Weight of the uniform matrix mixed into `Q` when the direct solve fails.
pub const DAMPING: f64 = 1e-9;

const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// `sqrt(k ln k / T)`, balancing the k internal Hedge instances.
pub fn default_swap_rate(k: usize, rounds: usize) -> f64 {
    if k < 2 {
        return 1.0;
    }
    let kf = k as f64;
    (kf * kf.ln() / rounds.max(1) as f64).sqrt()
}

/// How a stationary distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stationary {
    Solved,
    /// Damped power iteration; `converged` is false if the cap was hit.
    PowerIteration {
        iterations: usize,
        converged: bool,
    },
}

fn residual(q: &[f64], x: &[f64]) -> f64 {
    let k = x.len();
    (0..k)
        .map(|j| ((0..k).map(|i| x[i] * q[i * k + j]).sum::<f64>() - x[j]).abs())
        .fold(0.0, f64::max)
}

/// Solves `x Q = x`, `sum x = 1` for a row-stochastic `q` (row-major, k x k).
pub fn stationary_distribution(q: &[f64], out: &mut [f64]) -> Stationary {
    let k = out.len();
    debug_assert_eq!(q.len(), k * k);
    // (Q^T - I) x = 0 with the last equation replaced by sum x = 1
    let a = DMatrix::from_fn(k, k, |r, c| {
        if r == k - 1 {
            1.0
        } else {
            q[c * k + r] - if r == c { 1.0 } else { 0.0 }
        }
    });
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    if let Some(x) = a.lu().solve(&b) {
        if x.iter().all(|v| v.is_finite() && *v > -STATIONARY_RESIDUAL) {
            let total: f64 = x.iter().map(|v| v.max(0.0)).sum();
            for (o, v) in out.iter_mut().zip(x.iter()) {
                *o = v.max(0.0) / total;
            }
            if residual(q, out) <= STATIONARY_RESIDUAL {
                return Stationary::Solved;
            }
        }
    }
    power_iteration(q, out)
}

fn power_iteration(q: &[f64], out: &mut [f64]) -> Stationary {
    let k = out.len();
    let flat = DAMPING / k as f64;
    out.fill(1.0 / k as f64);
    let mut next = vec![0.0; k];
    for it in 1..=MAX_POWER_ITERATIONS {
        next.fill(flat);
        for i in 0..k {
            let xi = out[i] * (1.0 - DAMPING);
            for (n, qij) in next.iter_mut().zip(&q[i * k..(i + 1) * k]) {
                *n += xi * qij;
            }
        }
        let total: f64 = next.iter().sum();
        let mut change: f64 = 0.0;
        for (o, n) in out.iter_mut().zip(&next) {
            let v = n / total;
            change = change.max((v - *o).abs());
            *o = v;
        }
        if change <= STATIONARY_RESIDUAL {
            return Stationary::PowerIteration {
                iterations: it,
                converged: true,
            };
        }
    }
    Stationary::PowerIteration {
        iterations: MAX_POWER_ITERATIONS,
        converged: false,
    }
}

/// Swap-regret minimizer: one Hedge instance per price, played through the
/// stationary distribution of their recommendations.
pub struct BlumMansour {
    config: AlgorithmConfig,
    instances: Vec<HedgeState>,
    q: Vec<f64>,
    x: Vec<f64>,
    fallbacks: usize,
}

impl BlumMansour {
    pub fn with_config(k: usize, eta: f64, config: AlgorithmConfig) -> Self {
        BlumMansour {
            config,
            instances: vec![HedgeState::new(k, eta); k],
            q: vec![0.0; k * k],
            x: vec![1.0 / k as f64; k],
            fallbacks: 0,
        }
    }

    /// Rounds in which the direct stationary solve failed.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

/// Blum–Mansour on `k` prices with `eta` = [`default_swap_rate`].
pub fn blum_mansour_nsr(k: usize, rounds: usize) -> BlumMansour {
    let eta = default_swap_rate(k, rounds);
    BlumMansour::with_config(
        k,
        eta,
        AlgorithmConfig::new(AlgorithmKind::BlumMansour {
            eta: Rate::Fixed(eta),
        }),
    )
}

impl PricingAlgorithm for BlumMansour {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, _round: usize) -> Vec<f64> {
        let k = self.x.len();
        for (row, inst) in self.q.chunks_mut(k).zip(&self.instances) {
            inst.distribution_into(row);
        }
        if stationary_distribution(&self.q, &mut self.x) != Stationary::Solved {
            self.fallbacks += 1;
        }
        self.x.clone()
    }

    fn observe(&mut self, feedback: &Feedback<'_>) {
        for (inst, xa) in self.instances.iter_mut().zip(feedback.own) {
            inst.update(feedback.payoffs, *xa);
        }
    }
}
