use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::summary::RunSummary;
use super::transcript::{Transcript, ROUND_TOLERANCE};
use crate::equilibrium::StageSolution;
use crate::error::{Error, Result};
use crate::learners::{mean_based_audit, Gamma, MeanBasedViolation};
use crate::stage_game::{payoff_matrices, Price, Seller};

/// Tolerance of the identity: average buyer price = (U1 + U2) / T.
pub const ACCOUNTING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

/// One claim check: measured value against a bound, allowing `slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub bound: f64,
    pub measured: f64,
    pub slack: f64,
    /// Where the slack comes from (a measured regret, a tolerance).
    pub slack_source: String,
    pub passed: bool,
}

impl Check {
    fn make(
        name: impl Into<String>,
        relation: Relation,
        measured: f64,
        bound: f64,
        slack: f64,
        source: &str,
    ) -> Self {
        let passed = match relation {
            Relation::AtMost => measured <= bound + slack,
            Relation::AtLeast => measured >= bound - slack,
            Relation::Equal => (measured - bound).abs() <= slack,
        };
        Check {
            name: name.into(),
            relation,
            bound,
            measured,
            slack,
            slack_source: source.into(),
            passed,
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::make(name, Relation::AtMost, measured, bound, 0.0, "none")
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::make(name, Relation::AtLeast, measured, bound, 0.0, "none")
    }

    pub fn equal(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::make(
            name,
            Relation::Equal,
            measured,
            target,
            tolerance,
            "tolerance",
        )
    }

    /// A yes/no property, recorded as measured 1 or 0 against bound 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::make(
            name,
            Relation::Equal,
            if ok { 1.0 } else { 0.0 },
            1.0,
            0.0,
            "none",
        )
    }

    pub fn with_slack(self, slack: f64, source: impl Into<String>) -> Self {
        let source = source.into();
        Self::make(
            self.name,
            self.relation,
            self.measured,
            self.bound,
            slack,
            &source,
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
        };
        write!(
            f,
            "[{}] {}: measured {:.9} {op} bound {:.9} (slack {:.3e} from {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound,
            self.slack,
            self.slack_source
        )
    }
}

pub fn cumulative_payoffs(t: &Transcript) -> (f64, f64) {
    (t.summary.players[0].total, t.summary.players[1].total)
}

pub fn external_regret(t: &Transcript, player: Seller) -> f64 {
    t.summary.player(player).external_regret()
}

pub fn swap_regret(t: &Transcript, player: Seller) -> f64 {
    t.summary.player(player).swap_regret()
}

/// Mean buyer price over `window` (all rounds when `None`). Windows other
/// than the full run and the tail need every round in them stored.
pub fn average_buyer_price(t: &Transcript, window: Option<RangeInclusive<usize>>) -> Result<f64> {
    let s = &t.summary;
    let Some(w) = window else {
        return Ok(s.average_buyer_price());
    };
    if w.is_empty() || *w.start() == 0 || *w.end() > s.rounds {
        return Err(Error::InvalidParameter(format!(
            "window {w:?} is empty or outside 1..={}",
            s.rounds
        )));
    }
    if w == (1..=s.rounds) {
        return Ok(s.average_buyer_price());
    }
    if w == (s.tail_start..=s.rounds) {
        return Ok(s.tail_average_buyer_price());
    }
    let inside: Vec<f64> = t
        .records
        .iter()
        .filter(|r| w.contains(&r.round))
        .map(|r| r.buyer_price)
        .collect();
    let len = w.end() - w.start() + 1;
    if inside.len() != len {
        return Err(Error::Unsupported(format!(
            "window {w:?} is not fully stored ({} of {len} rounds)",
            inside.len()
        )));
    }
    Ok(inside.iter().sum::<f64>() / len as f64)
}

pub fn frequency_above(t: &Transcript, player: Seller, threshold: Price) -> Result<f64> {
    if threshold.level() > t.header.k {
        return Err(Error::OffGrid {
            level: threshold.level(),
            k: t.header.k,
        });
    }
    Ok(t.summary.frequency_above(player, threshold))
}

/// Per-round mass on prices `>= level / k` for both players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceProfile {
    pub level: usize,
    /// Stored rounds the series is sampled at.
    pub rounds: Vec<usize>,
    pub mass: [Vec<f64>; 2],
    /// Mean mass over the tail window, from the streaming statistics.
    pub tail: [f64; 2],
}

pub fn convergence_profile(t: &Transcript, level: usize) -> Result<ConvergenceProfile> {
    let k = t.header.k;
    if level == 0 || level > k {
        return Err(Error::OffGrid { level, k });
    }
    let from = level - 1;
    let rounds = t.records.iter().map(|r| r.round).collect();
    let m1 = t
        .records
        .iter()
        .map(|r| r.d1[from..].iter().sum())
        .collect();
    let m2 = t
        .records
        .iter()
        .map(|r| r.d2[from..].iter().sum())
        .collect();
    let p = Price::from_index(from);
    Ok(ConvergenceProfile {
        level,
        rounds,
        mass: [m1, m2],
        tail: [
            t.summary.tail_mass_above(Seller::One, p),
            t.summary.tail_mass_above(Seller::Two, p),
        ],
    })
}

/// How much each side could gain by switching algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpaceGaps {
    /// External regret of player 1 against the static player 2.
    pub learner_gap: f64,
    /// Stage Stackelberg value times T minus player 2's total.
    pub optimizer_gap: f64,
    pub rounds: usize,
}

/// Player 1 learns; player 2 must be static.
pub fn algorithm_space_gaps(
    t: &Transcript,
    stackelberg: &StageSolution,
) -> Result<AlgorithmSpaceGaps> {
    if !t.header.players[1].is_static() {
        return Err(Error::HypothesisViolated(format!(
            "player 2 must be static, found {}",
            t.header.players[1].label()
        )));
    }
    if t.model()? != stackelberg.model {
        return Err(Error::InvalidParameter(
            "Stackelberg solution is for a different market model".into(),
        ));
    }
    Ok(AlgorithmSpaceGaps {
        learner_gap: external_regret(t, Seller::One),
        optimizer_gap: stackelberg.leader_value * t.rounds() as f64 - t.summary.players[1].total,
        rounds: t.rounds(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerAudit {
    pub algorithm: String,
    pub cumulative_payoff: f64,
    pub average_payoff: f64,
    pub external_regret: f64,
    pub swap_regret: f64,
    pub mean_based_violations: usize,
    pub mean_based_examples: Vec<MeanBasedViolation>,
    /// Entry `i`: average weight on prices `>= (i+1)/k`.
    pub frequency_above: Vec<f64>,
    /// Entry `i`: tail-window average weight on prices `>= (i+1)/k`.
    pub tail_mass_above: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model: String,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub rounds: usize,
    pub stride: usize,
    pub complete: bool,
    pub gamma: Gamma,
    pub average_buyer_price: f64,
    pub tail_window: (usize, usize),
    pub tail_average_buyer_price: f64,
    pub players: [PlayerAudit; 2],
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn suffix_sums(v: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut acc = 0.0;
    for i in (0..v.len()).rev() {
        acc += v[i];
        out[i] = acc / scale;
    }
    out
}

/// Recomputes the streaming statistics from stored rounds.
fn replay_summary(t: &Transcript, gamma: Gamma) -> Result<RunSummary> {
    let model = t.model()?;
    let m = payoff_matrices(&model)?;
    let k = model.k();
    let mut s = RunSummary::new(k, t.rounds(), gamma);
    let (mut p1, mut p2) = (vec![0.0; k], vec![0.0; k]);
    for r in &t.records {
        m.seller1_payoffs_into(&r.d2, &mut p1);
        m.seller2_payoffs_into(&r.d1, &mut p2);
        s.record(r.round, &r.d1, &r.d2, &p1, &p2, r.u1, r.u2);
    }
    Ok(s)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Full audit. `gamma` overrides the mean-based threshold used during the
/// run, which requires a transcript with every round stored.
pub fn audit(t: &Transcript, gamma: Option<Gamma>) -> Result<AuditReport> {
    let model = t.model()?;
    let s = &t.summary;
    let rounds = t.rounds();
    if rounds == 0 {
        return Err(Error::InvalidParameter(
            "cannot audit a transcript without rounds".into(),
        ));
    }
    let recorded_gamma = s.players[0].mean_based.gamma;
    let gamma = gamma.unwrap_or(recorded_gamma);
    let mut checks = Vec::new();

    let (u1, u2) = cumulative_payoffs(t);
    checks.push(Check::equal(
        "average buyer price = (U1 + U2) / T",
        s.average_buyer_price(),
        (u1 + u2) / rounds as f64,
        ACCOUNTING_TOLERANCE,
    ));

    let mut worst = 0.0f64;
    for r in &t.records {
        worst = worst.max(r.recompute_error(&model)?);
    }
    checks.push(Check::at_most(
        "stored rounds match recomputed payoffs",
        worst,
        ROUND_TOLERANCE,
    ));

    let replay = if t.is_complete() {
        Some(replay_summary(t, gamma)?)
    } else {
        None
    };
    if let Some(r) = &replay {
        let tol = 1e-10 * rounds as f64;
        for (i, (a, b)) in s.players.iter().zip(&r.players).enumerate() {
            let diff = (a.total - b.total)
                .abs()
                .max(max_abs_diff(&a.counterfactual, &b.counterfactual))
                .max(max_abs_diff(&a.swap, &b.swap));
            checks.push(Check::at_most(
                format!("player {} statistics match a replay", i + 1),
                diff,
                tol,
            ));
        }
    } else if gamma != recorded_gamma {
        return Err(Error::Unsupported(
            "a different gamma needs a transcript with every round stored".into(),
        ));
    }

    let players: Vec<PlayerAudit> = [Seller::One, Seller::Two]
        .into_iter()
        .map(|p| -> Result<PlayerAudit> {
            let st = s.player(p);
            let (violations, examples) = match &replay {
                Some(_) if gamma != recorded_gamma => {
                    let v = mean_based_audit(t, p, &gamma)?;
                    (
                        v.len(),
                        v.into_iter()
                            .take(crate::learners::MeanBasedMonitor::KEEP)
                            .collect(),
                    )
                }
                _ => (st.mean_based.violations, st.mean_based.examples.clone()),
            };
            let ext = st.external_regret();
            let swap = st.swap_regret();
            checks.push(
                Check::at_least(
                    format!("player {} swap regret >= external regret", p.index() + 1),
                    swap,
                    ext,
                )
                .with_slack(1e-9, "tolerance"),
            );
            Ok(PlayerAudit {
                algorithm: t.header.players[p.index()].label().to_string(),
                cumulative_payoff: st.total,
                average_payoff: st.total / rounds as f64,
                external_regret: ext,
                swap_regret: swap,
                mean_based_violations: violations,
                mean_based_examples: examples,
                frequency_above: suffix_sums(&st.mass, rounds as f64),
                tail_mass_above: suffix_sums(&st.tail_mass, s.tail_len() as f64),
            })
        })
        .collect::<Result<_>>()?;
    let [a, b]: [PlayerAudit; 2] = players.try_into().expect("two players");
    let passed = checks.iter().all(|c| c.passed);
    Ok(AuditReport {
        model: model.name().to_string(),
        k: model.k(),
        tau: model.tau(),
        rounds,
        stride: t.header.stride,
        complete: t.is_complete(),
        gamma,
        average_buyer_price: s.average_buyer_price(),
        tail_window: (s.tail_start, rounds),
        tail_average_buyer_price: s.tail_average_buyer_price(),
        players: [a, b],
        checks,
        passed,
    })
}
