use std::fs::File;
use std::io::BufReader;

use anyhow::{bail, Context, Result};
use pricelab::learners::{default_hedge_rate, Gamma};
use pricelab::simulator::audit as run_audit;
use pricelab::Transcript;
use serde::Serialize;
use serde_json::json;

use super::{regret_bound_checks, Ctx};
use crate::args::AuditArgs;
use crate::output::{digest, FileDigest, Report};

fn parse_gamma(s: &str, k: usize, rounds: usize) -> Result<Gamma> {
    let s = s.trim();
    if let Ok(value) = s.parse::<f64>() {
        if !(value.is_finite() && value >= 0.0) {
            bail!("gamma must be a finite number >= 0, got {s}");
        }
        return Ok(Gamma::Constant { value });
    }
    match s.split_once(':') {
        None if s == "inverse-sqrt-horizon" => Ok(Gamma::InverseSqrtHorizon),
        None if s == "hedge-envelope" => Ok(Gamma::HedgeEnvelope {
            eta: default_hedge_rate(k, rounds),
        }),
        Some(("hedge-envelope", eta)) => Ok(Gamma::HedgeEnvelope {
            eta: eta.parse().with_context(|| format!("eta {eta:?}"))?,
        }),
        _ => {
            bail!("gamma must be a number, inverse-sqrt-horizon or hedge-envelope[:eta], got {s:?}")
        }
    }
}

#[derive(Serialize)]
struct AuditRow {
    player: usize,
    algorithm: String,
    cumulative_payoff: f64,
    average_payoff: f64,
    external_regret: f64,
    swap_regret: f64,
    mean_based_violations: usize,
}

pub fn audit(ctx: &mut Ctx, a: &AuditArgs) -> Result<Report> {
    let path = &a.transcript;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let t = Transcript::read_jsonl(BufReader::new(file))
        .with_context(|| format!("reading transcript {}", path.display()))?;
    let (sha256, bytes) = digest(path)?;
    ctx.inputs.push(FileDigest {
        path: path.display().to_string(),
        sha256: sha256.clone(),
        bytes,
    });
    for s in t.header.seeds {
        ctx.use_seed(s);
    }
    let gamma = a
        .gamma
        .as_deref()
        .map(|g| parse_gamma(g, t.header.k, t.rounds()))
        .transpose()?;
    let report = run_audit(&t, gamma)?;
    let mut checks = report.checks.clone();
    checks.extend(regret_bound_checks("transcript", &t));

    let rows: Vec<AuditRow> = report
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| AuditRow {
            player: i + 1,
            algorithm: p.algorithm.clone(),
            cumulative_payoff: p.cumulative_payoff,
            average_payoff: p.average_payoff,
            external_regret: p.external_regret,
            swap_regret: p.swap_regret,
            mean_based_violations: p.mean_based_violations,
        })
        .collect();
    ctx.out.table("players", &rows)?;
    ctx.out.json("audit.json", &report)?;
    let params = json!({
        "transcript": path.display().to_string(),
        "transcript_sha256": sha256,
        "gamma": report.gamma,
    });
    Report::new("audit", params, &report, checks)
}
