use serde::{Deserialize, Serialize};

use crate::learners::{Gamma, MeanBasedMonitor};
use crate::stage_game::{Price, Seller};

/// Running statistics for one player, updated in O(k) per round plus O(k)
/// per price in the support (swap table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerStats {
    /// Realized expected payoff summed over rounds.
    pub total: f64,
    /// Payoff each fixed price would have earned against the opponent's play.
    pub counterfactual: Vec<f64>,
    /// Row-major `k x k`: entry `(a, b)` sums `x_t[a] * u(b, opponent_t)`.
    pub swap: Vec<f64>,
    /// Weight on each price summed over rounds.
    pub mass: Vec<f64>,
    /// Weight on each price summed over the tail window.
    pub tail_mass: Vec<f64>,
    pub mean_based: MeanBasedMonitor,
}

impl PlayerStats {
    fn new(k: usize, gamma: Gamma, rounds: usize) -> Self {
        PlayerStats {
            total: 0.0,
            counterfactual: vec![0.0; k],
            swap: vec![0.0; k * k],
            mass: vec![0.0; k],
            tail_mass: vec![0.0; k],
            mean_based: MeanBasedMonitor::new(gamma, rounds),
        }
    }

    fn record(
        &mut self,
        round: usize,
        in_tail: bool,
        weights: &[f64],
        payoffs: &[f64],
        realized: f64,
    ) {
        let k = weights.len();
        self.mean_based.check(round, &self.counterfactual, weights);
        self.total += realized;
        for (c, p) in self.counterfactual.iter_mut().zip(payoffs) {
            *c += p;
        }
        for (a, &x) in weights.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            self.mass[a] += x;
            if in_tail {
                self.tail_mass[a] += x;
            }
            for (s, p) in self.swap[a * k..(a + 1) * k].iter_mut().zip(payoffs) {
                *s += x * p;
            }
        }
    }

    pub fn external_regret(&self) -> f64 {
        self.counterfactual
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            - self.total
    }

    /// The best swap function picks the best replacement per source price.
    /// Constant maps are swap functions too; taking them from the
    /// counterfactual vector keeps swap >= external exact in floating point.
    pub fn swap_regret(&self) -> f64 {
        let k = self.counterfactual.len();
        let best: f64 = self
            .swap
            .chunks(k)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum();
        let constant = self
            .counterfactual
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        best.max(constant) - self.total
    }
}

/// Streaming statistics of a whole run; enough for every audit without the
/// per-round records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rounds: usize,
    /// First round of the tail window (the last 10% of rounds).
    pub tail_start: usize,
    pub buyer_total: f64,
    pub tail_buyer_total: f64,
    pub players: [PlayerStats; 2],
}

/// First round of the last `ceil(T / 10)` rounds.
pub fn tail_start(rounds: usize) -> usize {
    rounds - rounds.div_ceil(10) + 1
}

impl RunSummary {
    pub fn new(k: usize, rounds: usize, gamma: Gamma) -> Self {
        RunSummary {
            rounds,
            tail_start: tail_start(rounds),
            buyer_total: 0.0,
            tail_buyer_total: 0.0,
            players: [
                PlayerStats::new(k, gamma, rounds),
                PlayerStats::new(k, gamma, rounds),
            ],
        }
    }

    /// `p1`, `p2`: each player's payoff vector against the other's weights.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn record(
        &mut self,
        round: usize,
        w1: &[f64],
        w2: &[f64],
        p1: &[f64],
        p2: &[f64],
        u1: f64,
        u2: f64,
    ) {
        let in_tail = round >= self.tail_start;
        self.players[0].record(round, in_tail, w1, p1, u1);
        self.players[1].record(round, in_tail, w2, p2, u2);
        self.buyer_total += u1 + u2;
        if in_tail {
            self.tail_buyer_total += u1 + u2;
        }
    }

    pub fn player(&self, p: Seller) -> &PlayerStats {
        &self.players[p.index()]
    }

    pub fn tail_len(&self) -> usize {
        self.rounds + 1 - self.tail_start
    }

    pub fn average_buyer_price(&self) -> f64 {
        self.buyer_total / self.rounds as f64
    }

    pub fn tail_average_buyer_price(&self) -> f64 {
        self.tail_buyer_total / self.tail_len() as f64
    }

    /// Time-averaged weight of player `p` on prices at or above `price`.
    pub fn frequency_above(&self, p: Seller, price: Price) -> f64 {
        self.player(p).mass[price.index()..].iter().sum::<f64>() / self.rounds as f64
    }

    /// Like [`RunSummary::frequency_above`] over the tail window only.
    pub fn tail_mass_above(&self, p: Seller, price: Price) -> f64 {
        self.player(p).tail_mass[price.index()..]
            .iter()
            .sum::<f64>()
            / self.tail_len() as f64
    }
}
