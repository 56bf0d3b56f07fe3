//! History-independent algorithms, plus the undercutting adversary.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{AlgorithmConfig, AlgorithmKind, Feedback, PricingAlgorithm};
use crate::error::{Error, Result};
use crate::stage_game::{Price, PriceDistribution, PriceGrid};

/// A distribution given either as a single grid price or as weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Price { price: f64 },
    Dist { dist: Vec<f64> },
}

impl Target {
    pub fn resolve(&self, grid: &PriceGrid) -> Result<PriceDistribution> {
        match self {
            Target::Price { price } => Ok(PriceDistribution::point_mass(
                grid.k(),
                grid.price_at(*price)?,
            )),
            Target::Dist { dist } => {
                if dist.len() != grid.k() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.k(),
                        found: dist.len(),
                    });
                }
                PriceDistribution::new(dist.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub target: Target,
}

impl ScheduleEntry {
    pub fn new(rounds: RangeInclusive<usize>, dist: &PriceDistribution) -> Self {
        ScheduleEntry {
            from: *rounds.start(),
            to: *rounds.end(),
            target: Target::Dist {
                dist: dist.weights().to_vec(),
            },
        }
    }
}

pub struct Static {
    config: AlgorithmConfig,
    dist: PriceDistribution,
}

impl Static {
    pub fn with_config(dist: PriceDistribution, config: AlgorithmConfig) -> Self {
        Static { config, dist }
    }

    pub fn dist(&self) -> &PriceDistribution {
        &self.dist
    }
}

/// Plays `d` every round.
pub fn static_algorithm(d: PriceDistribution) -> Static {
    Static {
        config: AlgorithmConfig::static_dist(&d),
        dist: d,
    }
}

/// Uniformly random pricing.
pub fn uniform(k: usize) -> Static {
    Static {
        config: AlgorithmConfig::new(AlgorithmKind::Uniform),
        dist: PriceDistribution::uniform(k),
    }
}

impl PricingAlgorithm for Static {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, _round: usize) -> Vec<f64> {
        self.dist.weights().to_vec()
    }

    fn observe(&mut self, _feedback: &Feedback<'_>) {}
}

/// Plays a fixed schedule of distributions over round ranges.
pub struct Scripted {
    config: AlgorithmConfig,
    // sorted, contiguous, covering 1..=rounds
    segments: Vec<(RangeInclusive<usize>, PriceDistribution)>,
    cursor: usize,
}

impl Scripted {
    pub fn with_config(
        grid: &PriceGrid,
        rounds: usize,
        schedule: &[ScheduleEntry],
        config: AlgorithmConfig,
    ) -> Result<Self> {
        let mut segments = schedule
            .iter()
            .map(|e| {
                if e.from == 0 || e.from > e.to {
                    return Err(Error::Config(format!(
                        "schedule range {}..={} is empty or starts at 0",
                        e.from, e.to
                    )));
                }
                Ok((e.from..=e.to, e.target.resolve(grid)?))
            })
            .collect::<Result<Vec<_>>>()?;
        segments.sort_by_key(|(r, _)| *r.start());
        let mut expect = 1;
        for (r, _) in &segments {
            if *r.start() != expect {
                let what = if *r.start() < expect {
                    "overlaps"
                } else {
                    "leaves a gap"
                };
                return Err(Error::Config(format!(
                    "schedule {what} at round {}",
                    expect.min(*r.start())
                )));
            }
            expect = r.end() + 1;
        }
        if expect != rounds + 1 {
            return Err(Error::Config(format!(
                "schedule covers rounds 1..{} but the horizon is {rounds}",
                expect - 1
            )));
        }
        Ok(Scripted {
            config,
            segments,
            cursor: 0,
        })
    }

    fn segment(&mut self, round: usize) -> &PriceDistribution {
        // rounds normally advance one at a time; fall back to a search otherwise
        if !self.segments[self.cursor].0.contains(&round) {
            self.cursor = self
                .segments
                .partition_point(|(r, _)| *r.end() < round)
                .min(self.segments.len() - 1);
        }
        &self.segments[self.cursor].1
    }
}

/// Plays the scheduled distribution in each round range.
pub fn scripted_follower(
    grid: &PriceGrid,
    rounds: usize,
    schedule: Vec<ScheduleEntry>,
) -> Result<Scripted> {
    let config = AlgorithmConfig::new(AlgorithmKind::ScriptedFollower {
        schedule: schedule.clone(),
    });
    Scripted::with_config(grid, rounds, &schedule, config)
}

impl PricingAlgorithm for Scripted {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, round: usize) -> Vec<f64> {
        self.segment(round).weights().to_vec()
    }

    fn observe(&mut self, _feedback: &Feedback<'_>) {}

    fn is_phase_boundary(&self, round: usize) -> bool {
        self.segments.iter().any(|(r, _)| *r.start() == round)
    }
}

/// Prices one step below the opponent's most likely last price (the higher
/// one on ties), starting from the top price.
pub struct Undercutter {
    config: AlgorithmConfig,
    target: usize,
    k: usize,
}

impl Undercutter {
    pub fn with_config(k: usize, config: AlgorithmConfig) -> Self {
        Undercutter {
            config,
            target: k - 1,
            k,
        }
    }
}

impl PricingAlgorithm for Undercutter {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, _round: usize) -> Vec<f64> {
        PriceDistribution::point_mass(self.k, Price::from_index(self.target)).into_weights()
    }

    fn observe(&mut self, feedback: &Feedback<'_>) {
        let mut mode = 0;
        for (i, w) in feedback.opponent.iter().enumerate() {
            if *w >= feedback.opponent[mode] {
                mode = i;
            }
        }
        self.target = mode.saturating_sub(1);
    }
}
