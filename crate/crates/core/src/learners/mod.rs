//! Online pricing algorithms.
//!
//! An algorithm is driven round by round: [`PricingAlgorithm::next`] emits the
//! distribution for the coming round and [`PricingAlgorithm::observe`] hands it
//! the opponent's full mixed strategy together with the expected payoff of
//! each of its own prices against it. Given the configuration (and seed) the
//! output depends only on the observed history.

mod blum_mansour;
mod ftpl;
mod hedge;
mod mean_based;
mod scripted;
mod threat;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stage_game::{MarketModel, PriceDistribution};

pub use blum_mansour::{
    blum_mansour_nsr, default_swap_rate, stationary_distribution, BlumMansour, Stationary,
};
pub use ftpl::{ftpl, Ftpl};
pub use hedge::{default_hedge_rate, hedge, Hedge, HedgeState};
pub use mean_based::{lambert_w, mean_based_audit, Gamma, MeanBasedMonitor, MeanBasedViolation};
pub use scripted::{
    scripted_follower, static_algorithm, uniform, ScheduleEntry, Scripted, Static, Target,
    Undercutter,
};
pub use threat::{
    threat_compliant_schedule, threat_cutoff, threat_deviating_schedule, threat_leader,
    ThreatLeader,
};

/// What an algorithm learns after a round.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub round: usize,
    pub own: &'a [f64],
    pub opponent: &'a [f64],
    /// Expected payoff of each own price against `opponent`.
    pub payoffs: &'a [f64],
}

pub trait PricingAlgorithm: Send {
    fn config(&self) -> &AlgorithmConfig;

    /// Price weights for `round` (1-based). The simulator validates them.
    fn next(&mut self, round: usize) -> Vec<f64>;

    fn observe(&mut self, feedback: &Feedback<'_>);

    /// Rounds that downsampled transcripts must keep (phase changes).
    fn is_phase_boundary(&self, _round: usize) -> bool {
        false
    }
}

/// A learning rate or perturbation scale; `Auto` picks the fixed-horizon default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Rate {
    #[default]
    Auto,
    Fixed(f64),
}

impl Rate {
    fn resolve(self, name: &str, auto: Option<f64>) -> Result<f64> {
        let v = match (self, auto) {
            (Rate::Fixed(v), _) => v,
            (Rate::Auto, Some(v)) => v,
            (Rate::Auto, None) => {
                return Err(Error::Config(format!(
                    "{name} = auto needs a known horizon; set it explicitly"
                )));
            }
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
        Ok(v)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Auto => s.serialize_str("auto"),
            Rate::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Rate::Fixed(v)),
            Raw::Text(s) if s == "auto" => Ok(Rate::Auto),
            Raw::Text(s) => s.parse().map(Rate::Fixed).map_err(|_| {
                serde::de::Error::custom(format!("expected a number or \"auto\", got {s:?}"))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmKind {
    Hedge {
        #[serde(default)]
        eta: Rate,
    },
    Ftpl {
        #[serde(default)]
        scale: Rate,
    },
    BlumMansour {
        #[serde(default)]
        eta: Rate,
    },
    Static(Target),
    Uniform,
    ThreatLeader,
    ScriptedFollower {
        schedule: Vec<ScheduleEntry>,
    },
    /// Undercuts the opponent's most likely price by one grid step.
    Undercutter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    #[serde(flatten)]
    pub kind: AlgorithmKind,
    #[serde(default)]
    pub seed: u64,
    /// When false, `auto` rates are rejected instead of being tuned to the horizon.
    #[serde(default = "default_true")]
    pub horizon_aware: bool,
}

fn default_true() -> bool {
    true
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind) -> Self {
        AlgorithmConfig {
            kind,
            seed: 0,
            horizon_aware: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn hedge() -> Self {
        Self::new(AlgorithmKind::Hedge { eta: Rate::Auto })
    }

    pub fn ftpl() -> Self {
        Self::new(AlgorithmKind::Ftpl { scale: Rate::Auto })
    }

    pub fn blum_mansour() -> Self {
        Self::new(AlgorithmKind::BlumMansour { eta: Rate::Auto })
    }

    pub fn static_dist(dist: &PriceDistribution) -> Self {
        Self::new(AlgorithmKind::Static(Target::Dist {
            dist: dist.weights().to_vec(),
        }))
    }

    pub fn static_price(price: f64) -> Self {
        Self::new(AlgorithmKind::Static(Target::Price { price }))
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            AlgorithmKind::Hedge { .. } => "hedge",
            AlgorithmKind::Ftpl { .. } => "ftpl",
            AlgorithmKind::BlumMansour { .. } => "blum_mansour",
            AlgorithmKind::Static(_) => "static",
            AlgorithmKind::Uniform => "uniform",
            AlgorithmKind::ThreatLeader => "threat_leader",
            AlgorithmKind::ScriptedFollower { .. } => "scripted_follower",
            AlgorithmKind::Undercutter => "undercutter",
        }
    }

    /// Kinds with a no-regret guarantee.
    pub fn is_no_regret(&self) -> bool {
        matches!(
            self.kind,
            AlgorithmKind::Hedge { .. }
                | AlgorithmKind::Ftpl { .. }
                | AlgorithmKind::BlumMansour { .. }
        )
    }

    pub fn is_static(&self) -> bool {
        matches!(self.kind, AlgorithmKind::Static(_) | AlgorithmKind::Uniform)
    }

    /// Instantiates the algorithm for `model` and a horizon of `rounds`.
    pub fn build(&self, model: &MarketModel, rounds: usize) -> Result<Box<dyn PricingAlgorithm>> {
        let k = model.k();
        let horizon = self.horizon_aware.then_some(rounds);
        let alg: Box<dyn PricingAlgorithm> = match &self.kind {
            AlgorithmKind::Hedge { eta } => {
                let eta = eta.resolve("eta", horizon.map(|t| default_hedge_rate(k, t)))?;
                Box::new(Hedge::with_config(k, eta, self.clone()))
            }
            AlgorithmKind::Ftpl { scale } => {
                let scale = scale.resolve("scale", horizon.map(|t| (t as f64).sqrt()))?;
                Box::new(Ftpl::with_config(k, scale, self.clone()))
            }
            AlgorithmKind::BlumMansour { eta } => {
                let eta = eta.resolve("eta", horizon.map(|t| default_swap_rate(k, t)))?;
                Box::new(BlumMansour::with_config(k, eta, self.clone()))
            }
            AlgorithmKind::Static(target) => Box::new(Static::with_config(
                target.resolve(&model.grid)?,
                self.clone(),
            )),
            AlgorithmKind::Uniform => Box::new(Static::with_config(
                PriceDistribution::uniform(k),
                self.clone(),
            )),
            AlgorithmKind::ThreatLeader => {
                Box::new(ThreatLeader::with_config(k, rounds, self.clone())?)
            }
            AlgorithmKind::ScriptedFollower { schedule } => Box::new(Scripted::with_config(
                &model.grid,
                rounds,
                schedule,
                self.clone(),
            )?),
            AlgorithmKind::Undercutter => Box::new(Undercutter::with_config(k, self.clone())),
        };
        Ok(alg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_forms() {
        let c: AlgorithmConfig =
            serde_json::from_str(r#"{"kind":"hedge","eta":"auto","seed":42}"#).unwrap();
        assert_eq!(c, AlgorithmConfig::hedge().with_seed(42));
        let c: AlgorithmConfig = serde_json::from_str(r#"{"kind":"ftpl","scale":3.5}"#).unwrap();
        assert_eq!(
            c.kind,
            AlgorithmKind::Ftpl {
                scale: Rate::Fixed(3.5)
            }
        );
        let c: AlgorithmConfig = serde_json::from_str(r#"{"kind":"static","price":0.5}"#).unwrap();
        assert_eq!(c, AlgorithmConfig::static_price(0.5));
        let c: AlgorithmConfig = serde_json::from_str(
            r#"{"kind":"scripted_follower","schedule":[{"from":1,"to":3,"price":1.0},{"from":4,"to":5,"dist":[0.5,0.5]}]}"#,
        )
        .unwrap();
        let AlgorithmKind::ScriptedFollower { schedule } = &c.kind else {
            panic!()
        };
        assert_eq!(schedule.len(), 2);
        for c in [
            AlgorithmConfig::hedge(),
            AlgorithmConfig::blum_mansour().with_seed(7),
            AlgorithmConfig::new(AlgorithmKind::Uniform),
            AlgorithmConfig::static_dist(&PriceDistribution::uniform(3)),
            c,
        ] {
            let back: AlgorithmConfig =
                serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(back, c);
        }
        assert!(
            serde_json::from_str::<AlgorithmConfig>(r#"{"kind":"hedge","eta":"fast"}"#).is_err()
        );
    }

    #[test]
    fn rates_must_be_positive() {
        let m = MarketModel::bertrand(5).unwrap();
        for eta in [0.0, -1.0, f64::NAN] {
            let c = AlgorithmConfig::new(AlgorithmKind::Hedge {
                eta: Rate::Fixed(eta),
            });
            assert!(c.build(&m, 10).is_err());
        }
        let mut c = AlgorithmConfig::ftpl();
        c.horizon_aware = false;
        assert!(c.build(&m, 10).is_err());
        c.kind = AlgorithmKind::Ftpl {
            scale: Rate::Fixed(2.0),
        };
        assert!(c.build(&m, 10).is_ok());
    }

    #[test]
    fn static_target_must_fit_the_grid() {
        let m = MarketModel::bertrand(4).unwrap();
        assert!(AlgorithmConfig::static_price(0.3).build(&m, 5).is_err());
        assert!(AlgorithmConfig::static_dist(&PriceDistribution::uniform(3))
            .build(&m, 5)
            .is_err());
        assert!(AlgorithmConfig::static_price(0.25).build(&m, 5).is_ok());
    }
}
