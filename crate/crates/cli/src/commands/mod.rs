mod audit;
mod dynamics;
mod stage;

use anyhow::{anyhow, bail, Context, Result};
use pricelab::learners::Rate;
use pricelab::simulator::{Check, ACCOUNTING_TOLERANCE};
use pricelab::stage_game::MIN_THEOREM_K;
use pricelab::{AlgorithmConfig, AlgorithmKind, MarketModel, Transcript};
use serde::Serialize;

use crate::args::{Command, Format, GlobalArgs, ModelKind};
use crate::output::{FileDigest, Output, Report};

pub const DEFAULT_SEED: u64 = 20_240_607;

/// Largest k for LP work and largest (k, T) for dynamics without `--allow-large`.
pub const MAX_LP_K: usize = 200;
pub const MAX_DYNAMICS_K: usize = 100;
pub const MAX_DYNAMICS_ROUNDS: usize = 1_000_000;

/// State shared by a subcommand while it runs.
pub struct Ctx {
    pub global: GlobalArgs,
    pub out: Output,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
}

impl Ctx {
    pub fn seed(&self) -> u64 {
        self.global.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn k(&self, default: usize) -> usize {
        self.global.k.unwrap_or(default)
    }

    pub fn rounds(&self, default: usize) -> usize {
        self.global.rounds.unwrap_or(default)
    }

    pub fn out_format(&self) -> Format {
        self.global.format.unwrap_or_default()
    }

    pub fn model_kind(&self) -> ModelKind {
        self.global.model.unwrap_or(ModelKind::Bertrand)
    }

    /// The market for `k` prices; logit sensitivity defaults to 2k.
    pub fn model(&self, k: usize) -> Result<MarketModel> {
        Ok(match self.model_kind() {
            ModelKind::Bertrand => {
                if self.global.tau.is_some() {
                    bail!("--tau only applies to --model logit");
                }
                MarketModel::bertrand(k)?
            }
            ModelKind::Logit => MarketModel::logit(k, self.global.tau.unwrap_or(2.0 * k as f64))?,
        })
    }

    pub fn gate_lp(&self, k: usize) -> Result<()> {
        if k > MAX_LP_K && !self.global.allow_large {
            bail!("k = {k} exceeds {MAX_LP_K} for LP work; pass --allow-large");
        }
        Ok(())
    }

    pub fn gate_dynamics(&self, k: usize, rounds: usize) -> Result<()> {
        if (k > MAX_DYNAMICS_K || rounds > MAX_DYNAMICS_ROUNDS) && !self.global.allow_large {
            bail!(
                "k = {k}, T = {rounds} exceeds k <= {MAX_DYNAMICS_K}, T <= {MAX_DYNAMICS_ROUNDS}; \
                 pass --allow-large"
            );
        }
        Ok(())
    }

    /// Records a seed once.
    pub fn use_seed(&mut self, seed: u64) {
        if !self.seeds.contains(&seed) {
            self.seeds.push(seed);
        }
    }
}

pub fn run_command(ctx: &mut Ctx, command: &Command) -> Result<Report> {
    match command {
        Command::StackelbergSweep(a) => stage::sweep(ctx, a),
        Command::StackelbergStrategy(a) => stage::strategy(ctx, a),
        Command::Dominance(a) => stage::dominance(ctx, a),
        Command::PayoffMatrix(a) => stage::payoff_matrix(ctx, a),
        Command::UniformBound(a) => dynamics::uniform_bound(ctx, a),
        Command::EqualLooting(a) => dynamics::equal_looting(ctx, a),
        Command::Convergence(a) => dynamics::convergence(ctx, a),
        Command::Threat(a) => dynamics::threat(ctx, a),
        Command::NashInAlgSpace(a) => dynamics::nash(ctx, a),
        Command::RegretBattery(a) => dynamics::battery(ctx, a),
        Command::Audit(a) => audit::audit(ctx, a),
        Command::Replay(_) => Err(anyhow!("replay is handled by the driver")),
    }
}

/// Model description used in report parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ModelParams {
    pub model: &'static str,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl From<&MarketModel> for ModelParams {
    fn from(m: &MarketModel) -> Self {
        ModelParams {
            model: m.name(),
            k: m.k(),
            tau: m.tau(),
        }
    }
}

/// Parses `hedge[:eta]`, `ftpl[:scale]`, `blum-mansour[:eta]`, `uniform`,
/// `undercutter`, `threat-leader`, `static:<price>` or an algorithm JSON
/// object. The seed applies unless the JSON sets one.
pub fn parse_algorithm(spec: &str, seed: u64) -> Result<AlgorithmConfig> {
    let s = spec.trim();
    if s.starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(s).with_context(|| format!("algorithm JSON {s:?}"))?;
        let explicit_seed = v.get("seed").is_some();
        let mut c: AlgorithmConfig = serde_json::from_value(v)?;
        if !explicit_seed {
            c.seed = seed;
        }
        return Ok(c);
    }
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let rate = |a: Option<&str>| -> Result<Rate> {
        match a {
            None | Some("auto") => Ok(Rate::Auto),
            Some(x) => Ok(Rate::Fixed(
                x.parse().with_context(|| format!("rate {x:?} in {s:?}"))?,
            )),
        }
    };
    let no_arg = || -> Result<()> {
        match arg {
            None => Ok(()),
            Some(_) => bail!("{name} takes no parameter"),
        }
    };
    let kind = match name {
        "hedge" => AlgorithmKind::Hedge { eta: rate(arg)? },
        "ftpl" => AlgorithmKind::Ftpl { scale: rate(arg)? },
        "blum-mansour" | "blum_mansour" | "bm" => AlgorithmKind::BlumMansour { eta: rate(arg)? },
        "uniform" => {
            no_arg()?;
            AlgorithmKind::Uniform
        }
        "undercutter" => {
            no_arg()?;
            AlgorithmKind::Undercutter
        }
        "threat-leader" | "threat_leader" => {
            no_arg()?;
            AlgorithmKind::ThreatLeader
        }
        "static" => {
            let p = arg.ok_or_else(|| anyhow!("static needs a price, e.g. static:0.5"))?;
            let price: f64 = p.parse().with_context(|| format!("price {p:?}"))?;
            return Ok(AlgorithmConfig::static_price(price).with_seed(seed));
        }
        _ => bail!("unknown algorithm {s:?}"),
    };
    Ok(AlgorithmConfig::new(kind).with_seed(seed))
}

/// Default transcript stride: about a thousand stored rounds.
pub fn stride(explicit: Option<usize>, rounds: usize) -> usize {
    explicit.unwrap_or((rounds / 1000).max(1)).max(1)
}

/// `4 (sqrt(3/2) - 1)`: the most an optimizer can average against a no-regret learner.
pub fn optimizer_cap() -> f64 {
    4.0 * (1.5f64.sqrt() - 1.0)
}

/// Checks every learning run gets: the accounting identity, swap >= external
/// regret, and for each no-regret player the equal-looting floor and the
/// opponent's cap, both with slack equal to the player's regret per round.
pub fn learning_checks(tag: &str, t: &Transcript) -> Vec<Check> {
    let s = &t.summary;
    let tf = t.rounds() as f64;
    let (u1, u2) = (s.players[0].total, s.players[1].total);
    let mut checks = vec![Check::equal(
        format!("{tag}: average buyer price = (U1 + U2) / T"),
        s.average_buyer_price(),
        (u1 + u2) / tf,
        ACCOUNTING_TOLERANCE,
    )];
    for (i, p) in s.players.iter().enumerate() {
        checks.push(
            Check::at_least(
                format!("{tag}: player {} swap regret >= external regret", i + 1),
                p.swap_regret(),
                p.external_regret(),
            )
            .with_slack(1e-9, "tolerance"),
        );
    }
    for i in 0..2 {
        let cfg = &t.header.players[i];
        if !cfg.is_no_regret() {
            continue;
        }
        let j = 1 - i;
        let c = s.players[j].total / tf;
        let own = s.players[i].total / tf;
        let slack = s.players[i].external_regret().max(0.0) / tf;
        let source = format!("player {} external regret / T", i + 1);
        checks.push(
            Check::at_least(
                format!(
                    "{tag}: player {} ({}) average >= c^2/8 with c = player {} average {c:.6}",
                    i + 1,
                    cfg.label(),
                    j + 1
                ),
                own,
                c * c / 8.0,
            )
            .with_slack(slack, source.clone()),
        );
        checks.push(
            Check::at_most(
                format!(
                    "{tag}: player {} average <= 4(sqrt(1.5) - 1) against no-regret player {}",
                    j + 1,
                    i + 1
                ),
                c,
                optimizer_cap(),
            )
            .with_slack(slack, source),
        );
    }
    checks
}

fn auto_rate(cfg: &AlgorithmConfig) -> Option<&'static str> {
    match cfg.kind {
        AlgorithmKind::Hedge { eta: Rate::Auto } if cfg.horizon_aware => Some("hedge"),
        AlgorithmKind::BlumMansour { eta: Rate::Auto } if cfg.horizon_aware => Some("blum_mansour"),
        _ => None,
    }
}

/// Hedge external regret <= 2 sqrt(T ln k) and Blum-Mansour swap regret
/// <= 3 sqrt(T k ln k), for players running at their default rates.
pub fn regret_bound_checks(tag: &str, t: &Transcript) -> Vec<Check> {
    let (tf, kf) = (t.rounds() as f64, t.header.k as f64);
    let mut checks = Vec::new();
    for (i, cfg) in t.header.players.iter().enumerate() {
        let p = &t.summary.players[i];
        match auto_rate(cfg) {
            Some("hedge") => checks.push(Check::at_most(
                format!(
                    "{tag}: player {} Hedge external regret <= 2 sqrt(T ln k)",
                    i + 1
                ),
                p.external_regret(),
                2.0 * (tf * kf.ln()).sqrt(),
            )),
            Some(_) => checks.push(Check::at_most(
                format!(
                    "{tag}: player {} Blum-Mansour swap regret <= 3 sqrt(T k ln k)",
                    i + 1
                ),
                p.swap_regret(),
                3.0 * (tf * kf * kf.ln()).sqrt(),
            )),
            None => {}
        }
    }
    checks
}

/// True when the theorem-scale constants apply (Bertrand with k >= 20).
pub fn theorem_scale(model: &MarketModel) -> bool {
    model.is_bertrand() && model.k() >= MIN_THEOREM_K
}
