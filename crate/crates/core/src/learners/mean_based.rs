use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::Transcript;
use crate::stage_game::{payoff_matrices, Seller};

/// Slack for floating-point noise when comparing a weight against gamma.
const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Threshold function gamma(t) of the mean-based property.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / sqrt(T)` at every round.
    #[default]
    InverseSqrtHorizon,
    Constant {
        value: f64,
    },
    /// `W(x) / x` with `x = eta (t - 1)`: the smallest gamma that Hedge with
    /// rate `eta` provably respects, since a cumulative gap of `gamma (t-1)`
    /// caps the trailing weight at `exp(-eta gamma (t-1))`.
    HedgeEnvelope {
        eta: f64,
    },
}

impl Gamma {
    pub fn at(&self, round: usize, horizon: usize) -> f64 {
        match *self {
            Gamma::InverseSqrtHorizon => 1.0 / (horizon.max(1) as f64).sqrt(),
            Gamma::Constant { value } => value,
            Gamma::HedgeEnvelope { eta } => {
                let x = eta * round.saturating_sub(1) as f64;
                if x <= 0.0 {
                    1.0
                } else {
                    lambert_w(x) / x
                }
            }
        }
    }
}

/// Principal branch of the Lambert W function for `x >= 0` (Halley iteration).
pub fn lambert_w(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x < 3.0 {
        (1.0 + x).ln() * 0.6
    } else {
        x.ln() - x.ln().ln()
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(1e-300) {
            break;
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanBasedViolation {
    pub round: usize,
    /// 1-based price level.
    pub level: usize,
    pub weight: f64,
    /// Average historical payoff deficit of this price against the best one.
    pub gap: f64,
    pub gamma: f64,
}

/// Streaming check of the mean-based property for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanBasedMonitor {
    pub gamma: Gamma,
    pub horizon: usize,
    pub violations: usize,
    /// The first violations, capped at [`MeanBasedMonitor::KEEP`].
    pub examples: Vec<MeanBasedViolation>,
}

impl MeanBasedMonitor {
    pub const KEEP: usize = 32;

    pub fn new(gamma: Gamma, horizon: usize) -> Self {
        MeanBasedMonitor {
            gamma,
            horizon,
            violations: 0,
            examples: Vec::new(),
        }
    }

    /// Checks round `round`, where `cumulative` holds the payoff of every
    /// price summed over rounds `1..round`.
    pub fn check(&mut self, round: usize, cumulative: &[f64], weights: &[f64]) {
        for v in round_violations(
            round,
            cumulative,
            weights,
            self.gamma.at(round, self.horizon),
        ) {
            self.violations += 1;
            if self.examples.len() < Self::KEEP {
                self.examples.push(v);
            }
        }
    }
}

fn round_violations<'a>(
    round: usize,
    cumulative: &'a [f64],
    weights: &'a [f64],
    gamma: f64,
) -> impl Iterator<Item = MeanBasedViolation> + 'a {
    let past = round.saturating_sub(1) as f64;
    let best = cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    cumulative
        .iter()
        .zip(weights)
        .enumerate()
        .filter_map(move |(i, (s, w))| {
            if past == 0.0 {
                return None;
            }
            let gap = (best - s) / past;
            (gap >= gamma && *w > gamma + WEIGHT_TOLERANCE).then_some(MeanBasedViolation {
                round,
                level: i + 1,
                weight: *w,
                gap,
                gamma,
            })
        })
}

/// Every (round, price) at which `player` kept more than gamma(t) weight on a
/// price trailing another by at least gamma(t) in average historical payoff.
/// Needs a transcript that stores every round.
pub fn mean_based_audit(
    transcript: &Transcript,
    player: Seller,
    gamma: &Gamma,
) -> Result<Vec<MeanBasedViolation>> {
    if !transcript.is_complete() {
        return Err(Error::Unsupported(format!(
            "mean-based audit needs every round; transcript keeps {} of {}",
            transcript.records.len(),
            transcript.header.rounds
        )));
    }
    let model = transcript.model()?;
    let m = payoff_matrices(&model)?;
    let k = model.k();
    let horizon = transcript.header.rounds;
    let mut cumulative = vec![0.0; k];
    let mut payoffs = vec![0.0; k];
    let mut out = Vec::new();
    for r in &transcript.records {
        let (own, opp) = r.player_view(player);
        out.extend(round_violations(
            r.round,
            &cumulative,
            own,
            gamma.at(r.round, horizon),
        ));
        match player {
            Seller::One => m.seller1_payoffs_into(opp, &mut payoffs),
            Seller::Two => m.seller2_payoffs_into(opp, &mut payoffs),
        }
        for (c, p) in cumulative.iter_mut().zip(&payoffs) {
            *c += p;
        }
    }
    Ok(out)
}
