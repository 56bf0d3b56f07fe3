use anyhow::{bail, Result};
use pricelab::equilibrium::stackelberg_stage;
use pricelab::learners::{
    threat_compliant_schedule, threat_cutoff, threat_deviating_schedule, ScheduleEntry,
};
use pricelab::simulator::{algorithm_space_gaps, convergence_profile, Check, Job, RunOptions};
use pricelab::{
    best_response_set, buyer_price, payoff_matrices, AlgorithmConfig, AlgorithmKind, MarketModel,
    Price, PriceDistribution, Seller, Transcript,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{learning_checks, parse_algorithm, regret_bound_checks, stride, Ctx, ModelParams};
use crate::args::{
    BatteryArgs, ConvergenceArgs, FollowerKind, LootingArgs, NashArgs, ThreatArgs, UniformArgs,
};
use crate::output::Report;

fn job(
    model: MarketModel,
    rounds: usize,
    p1: AlgorithmConfig,
    p2: AlgorithmConfig,
    stride: usize,
) -> Job {
    Job::new(model, rounds, p1, p2).with_options(RunOptions::with_stride(stride))
}

/// Per-player totals of one run, for tables.
#[derive(Serialize)]
struct PlayerRow {
    run: String,
    player: usize,
    algorithm: &'static str,
    seed: u64,
    rounds: usize,
    total: f64,
    average: f64,
    external_regret: f64,
    swap_regret: f64,
    mean_based_violations: usize,
    buyer_price: f64,
    tail_buyer_price: f64,
}

fn player_rows(run: &str, t: &Transcript) -> Vec<PlayerRow> {
    let s = &t.summary;
    (0..2)
        .map(|i| PlayerRow {
            run: run.to_string(),
            player: i + 1,
            algorithm: t.header.players[i].label(),
            seed: t.header.seeds[i],
            rounds: t.rounds(),
            total: s.players[i].total,
            average: s.players[i].total / t.rounds() as f64,
            external_regret: s.players[i].external_regret(),
            swap_regret: s.players[i].swap_regret(),
            mean_based_violations: s.players[i].mean_based.violations,
            buyer_price: s.average_buyer_price(),
            tail_buyer_price: s.tail_average_buyer_price(),
        })
        .collect()
}

fn averages(t: &Transcript) -> [f64; 2] {
    let tf = t.rounds() as f64;
    [
        t.summary.players[0].total / tf,
        t.summary.players[1].total / tf,
    ]
}

fn require_no_regret(cfg: &AlgorithmConfig, what: &str) -> Result<()> {
    if !cfg.is_no_regret() {
        bail!(
            "{what} must be a no-regret algorithm (hedge, ftpl, blum-mansour), got {}",
            cfg.label()
        );
    }
    Ok(())
}

pub fn uniform_bound(ctx: &mut Ctx, a: &UniformArgs) -> Result<Report> {
    let (k, rounds) = (ctx.k(20), ctx.rounds(100_000));
    ctx.gate_dynamics(k, rounds)?;
    let model = ctx.model(k)?;
    let seed = ctx.seed();
    let learner = parse_algorithm(&a.learner, seed)?;
    require_no_regret(&learner, "--learner")?;
    let optimizer = AlgorithmConfig::new(AlgorithmKind::Uniform).with_seed(seed + 1);
    ctx.use_seed(learner.seed);
    ctx.use_seed(optimizer.seed);
    let stride = stride(a.stride, rounds);
    let t = job(model, rounds, learner, optimizer, stride).run()?;

    let tf = rounds as f64;
    let regret = t.summary.players[0].external_regret().max(0.0);
    let [learner_avg, optimizer_avg] = averages(&t);
    let (bound, floor, bound_label, floor_label) = if model.is_bertrand() {
        (6.0 / 625.0, 0.2, "6/625", "1/5")
    } else {
        (1.0 / 128.0, 0.125, "1/128", "1/8")
    };
    let br = best_response_set(&model, &PriceDistribution::uniform(k), 0.0)?;
    let br_price = model.grid.value(br.prices[0]);

    let mut checks = vec![
        Check::at_least(
            format!("uniform optimizer average >= {bound_label}"),
            optimizer_avg,
            bound,
        )
        .with_slack(regret / tf, "learner external regret / T"),
        Check::at_least(
            format!("lowest best response to uniform >= {floor_label}"),
            br_price,
            floor,
        ),
    ];
    checks.extend(learning_checks("run", &t));

    ctx.out.transcript("transcript.jsonl", &t)?;
    ctx.out
        .table("players", &player_rows("uniform-bound", &t))?;
    let params = json!({
        "model": ModelParams::from(&model),
        "rounds": rounds,
        "stride": stride,
        "learner": t.header.players[0],
        "optimizer": t.header.players[1],
    });
    let results = json!({
        "optimizer_average": optimizer_avg,
        "learner_average": learner_avg,
        "learner_external_regret": t.summary.players[0].external_regret(),
        "bound": bound,
        "slack": regret / tf,
        "best_responses_to_uniform": br.prices.iter().map(|p| model.grid.value(*p)).collect::<Vec<_>>(),
        "best_response_value": br.value,
        "buyer_price": t.summary.average_buyer_price(),
    });
    Report::new("uniform-bound", params, results, checks)
}

pub fn equal_looting(ctx: &mut Ctx, a: &LootingArgs) -> Result<Report> {
    let (k, rounds) = (ctx.k(100), ctx.rounds(100_000));
    ctx.gate_dynamics(k, rounds)?;
    let model = ctx.model(k)?;
    let seed = ctx.seed();
    let learner = parse_algorithm(&a.learner, seed)?;
    require_no_regret(&learner, "--learner")?;
    let (optimizer, commitment) = match a
        .optimizer
        .split_once(':')
        .map_or((a.optimizer.as_str(), None), |(n, m)| (n, Some(m)))
    {
        ("stackelberg", mass) => {
            let mass: f64 = mass.map(str::parse).transpose()?.unwrap_or(0.0);
            let sol = stackelberg_stage(&model, Seller::Two)?;
            let dist = if mass > 0.0 {
                sol.perturbed(&payoff_matrices(&model)?, mass)?.leader_dist
            } else {
                sol.leader_dist.clone()
            };
            (
                AlgorithmConfig::static_dist(&dist).with_seed(seed + 1),
                Some(json!({ "tie_break_mass": mass, "stage": sol.to_record() })),
            )
        }
        _ => (parse_algorithm(&a.optimizer, seed + 1)?, None),
    };
    ctx.use_seed(learner.seed);
    ctx.use_seed(optimizer.seed);
    let stride = stride(a.stride, rounds);
    let t = job(model, rounds, learner, optimizer, stride).run()?;

    let tf = rounds as f64;
    let [learner_avg, c] = averages(&t);
    let regret = t.summary.players[0].external_regret().max(0.0);
    let checks = learning_checks("run", &t);

    ctx.out.transcript("transcript.jsonl", &t)?;
    ctx.out
        .table("players", &player_rows("equal-looting", &t))?;
    let params = json!({
        "model": ModelParams::from(&model),
        "rounds": rounds,
        "stride": stride,
        "learner": t.header.players[0],
        "optimizer": a.optimizer,
        "commitment": commitment,
    });
    let results = json!({
        "optimizer_average": c,
        "learner_average": learner_avg,
        "bound": c * c / 8.0,
        "slack": regret / tf,
        "optimizer_cap": super::optimizer_cap(),
        "buyer_price": t.summary.average_buyer_price(),
        "sum_of_averages": learner_avg + c,
    });
    Report::new("equal-looting", params, results, checks)
}

#[derive(Serialize)]
struct SeriesRow {
    round: usize,
    level: usize,
    price: f64,
    mass_1: f64,
    mass_2: f64,
}

fn static_dist(cfg: &AlgorithmConfig, model: &MarketModel) -> Result<Option<PriceDistribution>> {
    Ok(match &cfg.kind {
        AlgorithmKind::Static(target) => Some(target.resolve(&model.grid)?),
        AlgorithmKind::Uniform => Some(PriceDistribution::uniform(model.k())),
        _ => None,
    })
}

pub fn convergence(ctx: &mut Ctx, a: &ConvergenceArgs) -> Result<Report> {
    let (k, rounds) = (ctx.k(10), ctx.rounds(1_000_000));
    ctx.gate_dynamics(k, rounds)?;
    let model = ctx.model(k)?;
    let seed = ctx.seed();
    let p1 = parse_algorithm(&a.alg_a, seed)?;
    let p2 = parse_algorithm(&a.alg_b, seed + 1)?;
    ctx.use_seed(p1.seed);
    ctx.use_seed(p2.seed);
    let mean_based = |c: &AlgorithmConfig| {
        matches!(
            c.kind,
            AlgorithmKind::Hedge { .. } | AlgorithmKind::Ftpl { .. }
        )
    };
    let nsr = |c: &AlgorithmConfig| matches!(c.kind, AlgorithmKind::BlumMansour { .. });
    let (d1, d2) = (static_dist(&p1, &model)?, static_dist(&p2, &model)?);
    let class = if mean_based(&p1) && mean_based(&p2) {
        "mean-based"
    } else if nsr(&p1) && nsr(&p2) {
        "no-swap-regret"
    } else if d1.is_some() && d2.is_some() {
        "negative-control"
    } else {
        "exploratory"
    };
    let stride = stride(a.stride, rounds);
    let t = job(model, rounds, p1, p2, stride).run()?;

    let mut levels: Vec<usize> = a
        .levels
        .iter()
        .copied()
        .filter(|l| (1..=k).contains(l))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    let profiles = levels
        .iter()
        .map(|&l| convergence_profile(&t, l))
        .collect::<pricelab::Result<Vec<_>>>()?;
    let mut series = Vec::new();
    for p in &profiles {
        for (i, &round) in p.rounds.iter().enumerate() {
            series.push(SeriesRow {
                round,
                level: p.level,
                price: p.level as f64 / k as f64,
                mass_1: p.mass[0][i],
                mass_2: p.mass[1][i],
            });
        }
    }
    series.sort_by_key(|r| (r.round, r.level));

    let s = &t.summary;
    let tail_buyer = s.tail_average_buyer_price();
    let kf = k as f64;
    let mut checks = Vec::new();
    let tail_mass_checks = |level: usize, checks: &mut Vec<Check>| {
        if level <= k {
            let p = Price::from_index(level - 1);
            for (i, seller) in [Seller::One, Seller::Two].into_iter().enumerate() {
                checks.push(Check::at_most(
                    format!("player {} tail mass on prices >= {level}/k", i + 1),
                    s.tail_mass_above(seller, p),
                    0.05,
                ));
            }
        }
    };
    match class {
        "mean-based" => {
            checks.push(Check::at_most(
                "tail average buyer price <= 3/k",
                tail_buyer,
                3.0 / kf,
            ));
            tail_mass_checks(4, &mut checks);
        }
        "no-swap-regret" => tail_mass_checks(3, &mut checks),
        "negative-control" => {
            let (d1, d2) = (d1.as_ref().unwrap(), d2.as_ref().unwrap());
            checks.push(Check::equal(
                "static play: tail buyer price equals the stage buyer price",
                tail_buyer,
                buyer_price(&model, d1, d2)?,
                1e-12,
            ));
        }
        _ => {}
    }
    checks.extend(learning_checks("run", &t));

    ctx.out.transcript("transcript.jsonl", &t)?;
    ctx.out.table("series", &series)?;
    ctx.out.table("players", &player_rows("convergence", &t))?;
    let params = json!({
        "model": ModelParams::from(&model),
        "rounds": rounds,
        "stride": stride,
        "players": t.header.players,
        "levels": levels,
        "pairing": class,
    });
    let results = json!({
        "pairing": class,
        "tail_window": [s.tail_start, t.rounds()],
        "tail_buyer_price": tail_buyer,
        "buyer_price": s.average_buyer_price(),
        "tail_mass": profiles.iter().map(|p| json!({ "level": p.level, "player_1": p.tail[0], "player_2": p.tail[1] })).collect::<Vec<_>>(),
    });
    Report::new("convergence", params, results, checks)
}

#[derive(Serialize)]
struct ThreatRow {
    follower: &'static str,
    deviate_at: Option<usize>,
    follower_total: f64,
    leader_total: f64,
    buyer_price: f64,
}

fn threat_job(
    model: MarketModel,
    rounds: usize,
    schedule: Vec<ScheduleEntry>,
    seed: u64,
    stride: usize,
) -> Job {
    job(
        model,
        rounds,
        AlgorithmConfig::new(AlgorithmKind::ScriptedFollower { schedule }).with_seed(seed),
        AlgorithmConfig::new(AlgorithmKind::ThreatLeader).with_seed(seed + 1),
        stride,
    )
}

fn parse_rounds_list(s: &str, cut: usize) -> Result<Vec<usize>> {
    if s.trim() == "all" {
        return Ok((1..=cut).collect());
    }
    let mut v = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

pub fn threat(ctx: &mut Ctx, a: &ThreatArgs) -> Result<Report> {
    let (k, rounds) = (ctx.k(20), ctx.rounds(10_000));
    ctx.gate_dynamics(k, rounds)?;
    let model = ctx.model(k)?;
    if !model.is_bertrand() {
        bail!("the threat construction is for --model bertrand");
    }
    let seed = ctx.seed();
    ctx.use_seed(seed);
    ctx.use_seed(seed + 1);
    let cut = threat_cutoff(k, rounds)?;
    let (tf, kf) = (rounds as f64, k as f64);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let results;
    match a.follower {
        FollowerKind::Compliant => {
            let t = threat_job(
                model,
                rounds,
                threat_compliant_schedule(k, rounds)?,
                seed,
                stride(None, rounds),
            )
            .run()?;
            let (f, l) = (t.summary.players[0].total, t.summary.players[1].total);
            let closed_leader = cut as f64 * (1.0 - 1.0 / kf);
            checks.push(Check::at_least(
                "leader total >= (17/80) T",
                l,
                17.0 / 80.0 * tf,
            ));
            checks.push(Check::equal(
                "leader total equals its closed form t_bar (1 - 1/k)",
                l,
                closed_leader,
                1e-9,
            ));
            checks.push(Check::equal(
                "follower total = T/2 + 1 - 1/k",
                f,
                tf / 2.0 + 1.0 - 1.0 / kf,
                1e-9,
            ));
            checks.push(Check::at_least(
                "average buyer price >= 17/80 + follower average",
                t.summary.average_buyer_price(),
                17.0 / 80.0 + f / tf,
            ));
            checks.extend(learning_checks("compliant", &t));
            rows.push(ThreatRow {
                follower: "compliant",
                deviate_at: None,
                follower_total: f,
                leader_total: l,
                buyer_price: t.summary.average_buyer_price(),
            });
            ctx.out.transcript("transcript.jsonl", &t)?;
            results = json!({
                "cutoff": cut,
                "leader_total": l,
                "leader_closed_form": closed_leader,
                "follower_total": f,
                "follower_target": tf / 2.0 + 1.0 - 1.0 / kf,
                "buyer_price": t.summary.average_buyer_price(),
            });
        }
        FollowerKind::Deviating => {
            let at = parse_rounds_list(&a.deviate_at, cut)?;
            if at.is_empty() {
                bail!("--deviate-at lists no rounds");
            }
            let runs = at
                .par_iter()
                .map(|&d| -> Result<Transcript> {
                    Ok(threat_job(
                        model,
                        rounds,
                        threat_deviating_schedule(k, rounds, d)?,
                        seed,
                        rounds,
                    )
                    .run()?)
                })
                .collect::<Result<Vec<_>>>()?;
            let cap = 1.0 - 2.0 / kf + tf / (2.0 * kf);
            let mut worst = (f64::NEG_INFINITY, 0);
            let mut accounting = 0.0f64;
            for (&d, t) in at.iter().zip(&runs) {
                let (f, l) = (t.summary.players[0].total, t.summary.players[1].total);
                if f > worst.0 {
                    worst = (f, d);
                }
                accounting = accounting.max((t.summary.average_buyer_price() - (f + l) / tf).abs());
                rows.push(ThreatRow {
                    follower: "deviating",
                    deviate_at: Some(d),
                    follower_total: f,
                    leader_total: l,
                    buyer_price: t.summary.average_buyer_price(),
                });
            }
            checks.push(Check::at_most(
                format!(
                    "deviating follower total <= 1 - 2/k + T/(2k) for {} deviation rounds in 1..={cut} (worst at t* = {})",
                    at.len(),
                    worst.1
                ),
                worst.0,
                cap,
            ));
            checks.push(Check::at_most(
                "every deviating run: |average buyer price - (U1 + U2) / T|",
                accounting,
                pricelab::simulator::ACCOUNTING_TOLERANCE,
            ));
            let first = threat_job(
                model,
                rounds,
                threat_deviating_schedule(k, rounds, at[0])?,
                seed,
                stride(None, rounds),
            )
            .run()?;
            checks.extend(learning_checks(
                &format!("deviation at t* = {}", at[0]),
                &first,
            ));
            ctx.out.transcript("transcript.jsonl", &first)?;
            results = json!({
                "cutoff": cut,
                "cap": cap,
                "deviation_rounds": at.len(),
                "worst_follower_total": worst.0,
                "worst_deviation_round": worst.1,
                "transcript_deviation_round": at[0],
            });
        }
    }
    ctx.out.table("threat", &rows)?;
    let params = json!({
        "model": ModelParams::from(&model),
        "rounds": rounds,
        "follower": a.follower,
        "deviate_at": a.deviate_at,
        "follower_seat": 1,
        "leader_seat": 2,
    });
    Report::new("threat", params, results, checks)
}

#[derive(Serialize)]
struct NashRow {
    rounds: usize,
    learner_gap: f64,
    optimizer_gap: f64,
    learner_gap_per_round: f64,
    optimizer_gap_per_round: f64,
    learner_average: f64,
    optimizer_average: f64,
    buyer_price: f64,
    learner_swap_regret: f64,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.5}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn nash(ctx: &mut Ctx, a: &NashArgs) -> Result<Report> {
    let k = ctx.k(20);
    let mut horizons = match ctx.global.rounds {
        Some(t) => vec![t],
        None => a.horizons.clone(),
    };
    horizons.sort_unstable();
    horizons.dedup();
    if horizons.is_empty() {
        bail!("no horizons given");
    }
    for &t in &horizons {
        ctx.gate_dynamics(k, t)?;
    }
    let model = ctx.model(k)?;
    let seed = ctx.seed();
    let learner = parse_algorithm(&a.learner, seed)?;
    require_no_regret(&learner, "--learner")?;
    let sol = stackelberg_stage(&model, Seller::Two)?;
    let commit = if a.tie_break_mass > 0.0 {
        sol.perturbed(&payoff_matrices(&model)?, a.tie_break_mass)?
            .leader_dist
    } else {
        sol.leader_dist.clone()
    };
    let optimizer = AlgorithmConfig::static_dist(&commit).with_seed(seed + 1);
    ctx.use_seed(learner.seed);
    ctx.use_seed(optimizer.seed);
    let strides: Vec<usize> = horizons.iter().map(|&t| stride(a.stride, t)).collect();
    let runs = horizons
        .par_iter()
        .zip(&strides)
        .map(|(&t, &s)| job(model, t, learner.clone(), optimizer.clone(), s).run())
        .collect::<pricelab::Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for t in &runs {
        let g = algorithm_space_gaps(t, &sol)?;
        let tf = t.rounds() as f64;
        let [la, oa] = averages(t);
        let swap = t.summary.players[0].swap_regret();
        let tag = format!("T={}", t.rounds());
        checks.push(Check::at_least(
            format!("{tag}: buyer price >= 2/3"),
            t.summary.average_buyer_price(),
            2.0 / 3.0,
        ));
        checks.push(
            Check::at_most(
                format!("{tag}: learner gap <= learner swap regret"),
                g.learner_gap,
                swap,
            )
            .with_slack(1e-9, "tolerance"),
        );
        checks.push(Check::at_most(
            format!("{tag}: learner gap <= 0.05 T"),
            g.learner_gap,
            0.05 * tf,
        ));
        checks.push(Check::at_most(
            format!("{tag}: optimizer gap <= 0.05 T"),
            g.optimizer_gap,
            0.05 * tf,
        ));
        checks.extend(learning_checks(&tag, t));
        rows.push(NashRow {
            rounds: t.rounds(),
            learner_gap: g.learner_gap,
            optimizer_gap: g.optimizer_gap,
            learner_gap_per_round: g.learner_gap / tf,
            optimizer_gap_per_round: g.optimizer_gap / tf,
            learner_average: la,
            optimizer_average: oa,
            buyer_price: t.summary.average_buyer_price(),
            learner_swap_regret: swap,
        });
        ctx.out
            .transcript(&format!("transcript_T{}.jsonl", t.rounds()), t)?;
    }
    if rows.len() > 1 {
        let lg: Vec<f64> = rows.iter().map(|r| r.learner_gap_per_round).collect();
        let og: Vec<f64> = rows.iter().map(|r| r.optimizer_gap_per_round).collect();
        checks.insert(
            0,
            Check::holds(
                format!(
                    "learner gap / T strictly decreasing in T ({})",
                    fmt_list(&lg)
                ),
                strictly_decreasing(&lg),
            ),
        );
        checks.insert(
            1,
            Check::holds(
                format!(
                    "optimizer gap / T strictly decreasing in T ({})",
                    fmt_list(&og)
                ),
                strictly_decreasing(&og),
            ),
        );
    }

    ctx.out.table("gaps", &rows)?;
    let params = json!({
        "model": ModelParams::from(&model),
        "horizons": horizons,
        "strides": strides,
        "learner": learner,
        "tie_break_mass": a.tie_break_mass,
        "learner_seat": 1,
        "optimizer_seat": 2,
    });
    let results = json!({ "stage": sol.to_record(), "commitment": commit.weights(), "rows": rows });
    Report::new("nash-in-alg-space", params, results, checks)
}

#[derive(Serialize)]
struct BatteryRow {
    learner: String,
    opponent: String,
    learner_external_regret: f64,
    learner_swap_regret: f64,
    external_bound: f64,
    swap_bound: f64,
    learner_average: f64,
    opponent_average: f64,
    buyer_price: f64,
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn battery(ctx: &mut Ctx, a: &BatteryArgs) -> Result<Report> {
    let (k, rounds) = (ctx.k(20), ctx.rounds(100_000));
    ctx.gate_dynamics(k, rounds)?;
    let model = ctx.model(k)?;
    let seed = ctx.seed();
    let mut cells = Vec::new();
    for l in &a.learners {
        let lc = parse_algorithm(l, seed)?;
        require_no_regret(&lc, "each learner")?;
        for o in &a.opponents {
            let oc = parse_algorithm(o, seed + 1)?;
            ctx.use_seed(lc.seed);
            ctx.use_seed(oc.seed);
            cells.push((l.clone(), o.clone(), lc.clone(), oc));
        }
    }
    let stride = stride(a.stride, rounds);
    let runs = cells
        .par_iter()
        .map(|(_, _, lc, oc)| job(model, rounds, lc.clone(), oc.clone(), stride).run())
        .collect::<pricelab::Result<Vec<_>>>()?;

    let (tf, kf) = (rounds as f64, k as f64);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for ((l, o, _, _), t) in cells.iter().zip(&runs) {
        let tag = format!("{l} vs {o}");
        checks.extend(regret_bound_checks(&tag, t));
        checks.extend(learning_checks(&tag, t));
        let [la, oa] = averages(t);
        rows.push(BatteryRow {
            learner: l.clone(),
            opponent: o.clone(),
            learner_external_regret: t.summary.players[0].external_regret(),
            learner_swap_regret: t.summary.players[0].swap_regret(),
            external_bound: 2.0 * (tf * kf.ln()).sqrt(),
            swap_bound: 3.0 * (tf * kf * kf.ln()).sqrt(),
            learner_average: la,
            opponent_average: oa,
            buyer_price: t.summary.average_buyer_price(),
        });
        ctx.out.transcript(
            &format!("transcripts/{}_vs_{}.jsonl", file_stem(l), file_stem(o)),
            t,
        )?;
    }
    ctx.out.table("battery", &rows)?;
    let params = json!({
        "model": ModelParams::from(&model),
        "rounds": rounds,
        "stride": stride,
        "learners": a.learners,
        "opponents": a.opponents,
        "learner_seat": 1,
    });
    Report::new("regret-battery", params, &rows, checks)
}
