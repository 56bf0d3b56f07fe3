use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "pricelab",
    version,
    about = "Experiments on repeated duopoly pricing games played by learning algorithms",
    long_about = "Each subcommand writes report.json, a table (CSV or JSON), any transcripts, and \
                  manifest.json with SHA-256 checksums into --out. The exit code is 0 iff every \
                  check in the report passes, 1 if a check fails and 2 on errors."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bertrand,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset values fall back to `--config`,
/// then to per-subcommand defaults.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalArgs {
    /// Allocation rule.
    #[arg(long, global = true, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    /// Logit sensitivity (defaults to 2k).
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Number of grid prices.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Horizon T.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Base seed; player 2 uses seed + 1.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Permit k > 200 for LP sweeps and k > 100 or T > 10^6 for dynamics.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_large: bool,
    /// JSON file with any of the flags above; explicit flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "PRICELAB_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl GlobalArgs {
    /// Fills unset flags from `--config`.
    pub fn merged(self) -> Result<GlobalArgs> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: GlobalArgs = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(GlobalArgs {
            model: self.model.or(file.model),
            tau: self.tau.or(file.tau),
            k: self.k.or(file.k),
            rounds: self.rounds.or(file.rounds),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            allow_large: self.allow_large || file.allow_large,
            config: None,
            threads: self.threads,
        })
    }
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Stackelberg leader and follower values across k.
    StackelbergSweep(SweepArgs),
    /// Optimal commitment for one k, with the follower's tie band.
    StackelbergStrategy(StrategyArgs),
    /// Iterated removal of never-best-response prices (Bertrand).
    Dominance(DominanceArgs),
    /// A learner against the static uniform optimizer.
    UniformBound(UniformArgs),
    /// A learner against an optimizer: the learner keeps a share of the surplus.
    EqualLooting(LootingArgs),
    /// Two algorithms against each other; mass on high prices over time.
    Convergence(ConvergenceArgs),
    /// The threat leader against a compliant or deviating scripted follower.
    Threat(ThreatArgs),
    /// A no-swap-regret learner against the static Stackelberg commitment at several T.
    NashInAlgSpace(NashArgs),
    /// Regret of each learner against a battery of opponents.
    RegretBattery(BatteryArgs),
    /// Audit a transcript file.
    Audit(AuditArgs),
    /// Export the stage payoff tables.
    PayoffMatrix(MatrixArgs),
    /// Re-run a manifest and compare checksums.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::StackelbergSweep(_) => "stackelberg-sweep",
            Command::StackelbergStrategy(_) => "stackelberg-strategy",
            Command::Dominance(_) => "dominance",
            Command::UniformBound(_) => "uniform-bound",
            Command::EqualLooting(_) => "equal-looting",
            Command::Convergence(_) => "convergence",
            Command::Threat(_) => "threat",
            Command::NashInAlgSpace(_) => "nash-in-alg-space",
            Command::RegretBattery(_) => "regret-battery",
            Command::Audit(_) => "audit",
            Command::PayoffMatrix(_) => "payoff-matrix",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 20)]
    pub k_min: usize,
    #[arg(long, default_value_t = 200)]
    pub k_max: usize,
    #[arg(long, default_value_t = 10)]
    pub step: usize,
    /// Explicit list of k; replaces the range.
    #[arg(long, value_delimiter = ',')]
    pub ks: Vec<usize>,
    /// k values cross-checked against a grid search over the leader simplex
    /// (`--oracle-ks` alone skips the oracle).
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [2, 3, 4, 5])]
    pub oracle_ks: Vec<usize>,
    /// Grid-search lattice denominator.
    #[arg(long, default_value_t = 1000)]
    pub oracle_resolution: usize,
    /// Coarse lattice used before hill climbing when the full lattice is too large.
    #[arg(long, default_value_t = 100)]
    pub oracle_coarse: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyArgs {
    /// Follower prices within this of its best payoff form the tie band.
    #[arg(long, default_value_t = 1e-7)]
    pub tie_tolerance: f64,
    /// Mass moved just above the follower's price to break its tie.
    #[arg(long, default_value_t = pricelab::equilibrium::DEFAULT_TIE_BREAK_MASS)]
    pub tie_break_mass: f64,
    /// Also solve in exact rational arithmetic (Bertrand, k <= 50).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [20, 50, 100])]
    pub ks: Vec<usize>,
}

/// Algorithm specs: `hedge[:eta]`, `ftpl[:scale]`, `blum-mansour[:eta]`,
/// `uniform`, `undercutter`, `static:<price>`, or an algorithm JSON object.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformArgs {
    #[arg(long, default_value = "hedge")]
    pub learner: String,
    /// Keep every n-th round in the transcript (default T / 1000).
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LootingArgs {
    #[arg(long, default_value = "hedge")]
    pub learner: String,
    /// An algorithm spec, or `stackelberg[:mass]` for the static commitment.
    #[arg(long, default_value = "stackelberg")]
    pub optimizer: String,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceArgs {
    #[arg(long, default_value = "hedge")]
    pub alg_a: String,
    #[arg(long, default_value = "hedge")]
    pub alg_b: String,
    /// Levels i for the series of mass on prices >= i/k.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
    pub levels: Vec<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FollowerKind {
    Compliant,
    Deviating,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreatArgs {
    #[arg(long, value_enum, default_value_t = FollowerKind::Compliant)]
    pub follower: FollowerKind,
    /// Deviation rounds for a deviating follower: `all` or a comma list.
    #[arg(long, default_value = "all")]
    pub deviate_at: String,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10_000, 100_000, 1_000_000])]
    pub horizons: Vec<usize>,
    #[arg(long, default_value = "blum-mansour")]
    pub learner: String,
    /// Mass moved above the follower's price in the commitment (0 keeps it exact).
    #[arg(long, default_value_t = 0.0)]
    pub tie_break_mass: f64,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ["hedge".to_string(), "blum-mansour".to_string(), "ftpl".to_string()])]
    pub learners: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = ["uniform".to_string(), "static:1".to_string(), "static:0.5".to_string(), "undercutter".to_string()])]
    pub opponents: Vec<String>,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditArgs {
    /// Transcript (JSON lines).
    pub transcript: PathBuf,
    /// Mean-based threshold: a number, `inverse-sqrt-horizon`, or
    /// `hedge-envelope[:eta]` (eta defaults to sqrt(ln k / T)).
    #[arg(long)]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SellerChoice {
    One,
    Two,
    Both,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixArgs {
    #[arg(long, value_enum, default_value_t = SellerChoice::Both)]
    pub seller: SellerChoice,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// manifest.json written by an earlier run.
    pub manifest: PathBuf,
}
