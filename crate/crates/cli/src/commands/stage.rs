use std::io::Write;

use anyhow::{bail, Result};
use num_traits::ToPrimitive;
use pricelab::equilibrium::{
    iterated_dominance, stackelberg_bertrand_exact, stackelberg_grid_search, stackelberg_stage,
    MAX_EXACT_K,
};
use pricelab::simulator::Check;
use pricelab::{payoff_matrices, MarketModel, Price, Seller};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{theorem_scale, Ctx, ModelParams};
use crate::args::{DominanceArgs, Format, MatrixArgs, SellerChoice, StrategyArgs, SweepArgs};
use crate::output::Report;

/// `(k - 1) / (e k)`.
fn reference_value(k: usize) -> f64 {
    (k as f64 - 1.0) / (std::f64::consts::E * k as f64)
}

#[derive(Serialize)]
struct SweepRow {
    k: usize,
    model: &'static str,
    tau: Option<f64>,
    leader_value: Option<f64>,
    follower_value: Option<f64>,
    buyer_price: Option<f64>,
    follower_action: Option<f64>,
    reference: f64,
    leader_rel_dev: Option<f64>,
    follower_rel_dev: Option<f64>,
    error: String,
}

#[derive(Serialize)]
struct OracleRow {
    k: usize,
    lp_value: f64,
    grid_value: f64,
    difference: f64,
    resolution: usize,
    exhaustive: bool,
}

pub fn sweep(ctx: &mut Ctx, a: &SweepArgs) -> Result<Report> {
    let mut ks = if !a.ks.is_empty() {
        a.ks.clone()
    } else if let Some(k) = ctx.global.k {
        vec![k]
    } else {
        if a.step == 0 || a.k_min < 2 || a.k_min > a.k_max {
            bail!("need 2 <= k_min <= k_max and step >= 1");
        }
        (a.k_min..=a.k_max).step_by(a.step).collect()
    };
    ks.sort_unstable();
    ks.dedup();
    if ks.first().is_some_and(|k| *k < 2) {
        bail!("k must be at least 2");
    }
    for &k in &ks {
        ctx.gate_lp(k)?;
    }
    let models = ks
        .iter()
        .map(|&k| ctx.model(k))
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<SweepRow> = models
        .par_iter()
        .map(|m| {
            let k = m.k();
            let reference = reference_value(k);
            let base = SweepRow {
                k,
                model: m.name(),
                tau: m.tau(),
                leader_value: None,
                follower_value: None,
                buyer_price: None,
                follower_action: None,
                reference,
                leader_rel_dev: None,
                follower_rel_dev: None,
                error: String::new(),
            };
            match stackelberg_stage(m, Seller::One) {
                Ok(s) => SweepRow {
                    leader_value: Some(s.leader_value),
                    follower_value: Some(s.follower_value),
                    buyer_price: Some(s.leader_value + s.follower_value),
                    follower_action: Some(m.grid.value(s.follower_action)),
                    leader_rel_dev: Some((s.leader_value - reference) / reference),
                    follower_rel_dev: Some((s.follower_value - reference) / reference),
                    ..base
                },
                Err(e) => SweepRow {
                    error: e.to_string(),
                    ..base
                },
            }
        })
        .collect();

    let mut checks = Vec::new();
    for (r, m) in rows.iter().zip(&models) {
        let k = r.k;
        let (Some(lv), Some(fv), Some(bp)) = (r.leader_value, r.follower_value, r.buyer_price)
        else {
            checks.push(Check::holds(
                format!("k={k}: LP solved ({})", r.error),
                false,
            ));
            continue;
        };
        if theorem_scale(m) {
            let reference = r.reference;
            checks.push(
                Check::equal(
                    format!("k={k}: leader value within 2% of (k-1)/(ek)"),
                    lv,
                    reference,
                    0.02 * reference,
                )
                .with_slack(0.02 * reference, "2% relative tolerance"),
            );
            checks.push(
                Check::equal(
                    format!("k={k}: follower value within 2% of (k-1)/(ek)"),
                    fv,
                    reference,
                    0.02 * reference,
                )
                .with_slack(0.02 * reference, "2% relative tolerance"),
            );
            checks.push(Check::at_least(
                format!("k={k}: buyer price >= 2/3"),
                bp,
                2.0 / 3.0,
            ));
        }
    }

    let mut oracle_ks = a.oracle_ks.clone();
    oracle_ks.sort_unstable();
    oracle_ks.dedup();
    let oracle_models = oracle_ks
        .iter()
        .map(|&k| ctx.model(k))
        .collect::<Result<Vec<_>>>()?;
    let oracle: Vec<OracleRow> = oracle_models
        .par_iter()
        .map(|m| -> Result<OracleRow> {
            let lp = stackelberg_stage(m, Seller::One)?;
            let g = stackelberg_grid_search(m, Seller::One, a.oracle_resolution, a.oracle_coarse)?;
            Ok(OracleRow {
                k: m.k(),
                lp_value: lp.leader_value,
                grid_value: g.leader_value,
                difference: lp.leader_value - g.leader_value,
                resolution: g.resolution,
                exhaustive: g.exhaustive,
            })
        })
        .collect::<Result<_>>()?;
    for o in &oracle {
        checks.push(Check::equal(
            format!(
                "k={}: LP leader value matches a 1/{} grid search",
                o.k, o.resolution
            ),
            o.lp_value,
            o.grid_value,
            1e-2,
        ));
    }

    ctx.out.table("sweep", &rows)?;
    if !oracle.is_empty() {
        ctx.out.table("oracle", &oracle)?;
    }
    let params = json!({
        "model": models.first().map(|m| m.name()),
        "tau": ctx.global.tau,
        "ks": ks,
        "oracle_ks": oracle_ks,
        "oracle_resolution": a.oracle_resolution,
        "oracle_coarse": a.oracle_coarse,
        "leader": "seller 1",
    });
    let results = json!({ "rows": rows, "oracle": oracle });
    Report::new("stackelberg-sweep", params, results, checks)
}

#[derive(Serialize)]
struct StrategyRow {
    price: f64,
    leader_weight: f64,
    perturbed_weight: f64,
    follower_payoff: f64,
    in_tie_band: bool,
}

fn band_label(prices: &[Price], k: usize) -> String {
    match (prices.first(), prices.last()) {
        (Some(lo), Some(hi)) => format!(
            "{}/{k}..{}/{k}, {} prices",
            lo.level(),
            hi.level(),
            prices.len()
        ),
        _ => "empty".into(),
    }
}

pub fn strategy(ctx: &mut Ctx, a: &StrategyArgs) -> Result<Report> {
    let k = ctx.k(100);
    ctx.gate_lp(k)?;
    let model = ctx.model(k)?;
    let m = payoff_matrices(&model)?;
    let sol = stackelberg_stage(&model, Seller::One)?;
    let payoffs = sol.follower_payoffs(&m);
    let band = sol.follower_best_responses(&m, a.tie_tolerance);
    let pert = sol.perturbed(&m, a.tie_break_mass)?;

    let rows: Vec<StrategyRow> = model
        .grid
        .prices()
        .map(|p| StrategyRow {
            price: model.grid.value(p),
            leader_weight: sol.leader_dist.weight(p),
            perturbed_weight: pert.leader_dist.weight(p),
            follower_payoff: payoffs[p.index()],
            in_tie_band: band.contains(&p),
        })
        .collect();

    let mut checks = vec![
        Check::equal(
            "leader distribution sums to 1",
            sol.leader_dist.weights().iter().sum(),
            1.0,
            1e-9,
        ),
        Check::holds(
            format!(
                "perturbed commitment has a unique follower best response ({} found)",
                pert.follower_best_responses.len()
            ),
            pert.follower_best_responses.len() == 1,
        ),
    ];
    if model.is_bertrand() && k == 100 {
        let levels: Vec<usize> = band.iter().map(|p| p.level()).collect();
        checks.push(Check::holds(
            format!(
                "follower tie band at tolerance {:e} is 36/100..98/100 (observed {})",
                a.tie_tolerance,
                band_label(&band, k)
            ),
            levels == (36..=98).collect::<Vec<_>>(),
        ));
        let br = pert.follower_best_responses.first().map(|p| p.level());
        checks.push(Check::holds(
            format!(
                "perturbed follower best response is 98/100 (observed {})",
                br.map_or("none".into(), |l| format!("{l}/100"))
            ),
            pert.follower_best_responses.len() == 1 && br == Some(98),
        ));
    }

    let exact = if a.exact {
        if !model.is_bertrand() || k > MAX_EXACT_K {
            bail!("--exact needs --model bertrand and k <= {MAX_EXACT_K}");
        }
        let e = stackelberg_bertrand_exact(k)?;
        let value = e.leader_value.to_f64().unwrap_or(f64::NAN);
        checks.push(Check::equal(
            "float leader value matches the exact rational LP",
            sol.leader_value,
            value,
            1e-9,
        ));
        Some(json!({
            "leader_value": e.leader_value.to_string(),
            "leader_value_f64": value,
            "follower_value": e.follower_value.to_string(),
            "follower_action": model.grid.value(e.follower_action),
            "follower_ties": e.follower_ties.iter().map(|p| model.grid.value(*p)).collect::<Vec<_>>(),
            "leader_dist": e.leader_dist.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        }))
    } else {
        None
    };

    ctx.out.table("strategy", &rows)?;
    let params = json!({
        "model": ModelParams::from(&model),
        "tie_tolerance": a.tie_tolerance,
        "tie_break_mass": a.tie_break_mass,
        "exact": a.exact,
        "leader": "seller 1",
    });
    let value = |ps: &[Price]| ps.iter().map(|p| model.grid.value(*p)).collect::<Vec<_>>();
    let results = json!({
        "solution": sol.to_record(),
        "tie_band": value(&band),
        "tie_band_label": band_label(&band, k),
        "perturbed": {
            "mass": pert.mass,
            "raised_price": model.grid.value(Price::from_index((sol.follower_action.index() + 1).min(k - 1))),
            "follower_best_responses": value(&pert.follower_best_responses),
            "leader_value": pert.leader_value,
            "follower_value": pert.follower_value,
        },
        "exact": exact,
    });
    Report::new("stackelberg-strategy", params, results, checks)
}

#[derive(Serialize)]
struct DominanceRow {
    k: usize,
    price: f64,
    status: &'static str,
    removal_order: Option<usize>,
    certified_gap: f64,
}

pub fn dominance(ctx: &mut Ctx, a: &DominanceArgs) -> Result<Report> {
    let mut ks = match ctx.global.k {
        Some(k) => vec![k],
        None => a.ks.clone(),
    };
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        ctx.gate_lp(k)?;
    }
    let models = ks
        .iter()
        .map(|&k| ctx.model(k))
        .collect::<Result<Vec<_>>>()?;
    let results = models
        .par_iter()
        .map(|m| Ok(iterated_dominance(m)?))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for (m, r) in models.iter().zip(&results) {
        let k = m.k();
        for (order, rem) in r.removals.iter().enumerate() {
            rows.push(DominanceRow {
                k,
                price: m.grid.value(rem.price),
                status: "removed",
                removal_order: Some(order + 1),
                certified_gap: rem.certified_gap,
            });
        }
        for p in &r.surviving {
            rows.push(DominanceRow {
                k,
                price: m.grid.value(*p),
                status: "surviving",
                removal_order: None,
                certified_gap: if Some(p) == r.surviving.last() {
                    r.final_gap
                } else {
                    f64::NAN
                },
            });
        }
        let levels: Vec<usize> = r.surviving.iter().map(|p| p.level()).collect();
        checks.push(Check::holds(
            format!("k={k}: surviving prices are exactly {{1/k, 2/k}} (observed {levels:?})"),
            levels == [1, 2],
        ));
        checks.push(Check::at_most(
            format!("k={k}: top survivor is still a best response within the survivors"),
            r.final_gap,
            0.0,
        ));
        summary.push(json!({
            "k": k,
            "surviving": r.surviving.iter().map(|p| m.grid.value(*p)).collect::<Vec<_>>(),
            "removed": r.removals.len(),
            "min_certified_gap": r.removals.iter().map(|x| x.certified_gap).fold(f64::INFINITY, f64::min),
            "final_gap": r.final_gap,
        }));
    }
    ctx.out.table("dominance", &rows)?;
    let params = json!({ "model": models.first().map(|m| m.name()), "ks": ks });
    Report::new("dominance", params, summary, checks)
}

pub fn payoff_matrix(ctx: &mut Ctx, a: &MatrixArgs) -> Result<Report> {
    let k = ctx.k(20);
    ctx.gate_lp(k)?;
    let model: MarketModel = ctx.model(k)?;
    let m = payoff_matrices(&model)?;
    let sellers: &[(Seller, &str)] = match a.seller {
        SellerChoice::One => &[(Seller::One, "A")],
        SellerChoice::Two => &[(Seller::Two, "B")],
        SellerChoice::Both => &[(Seller::One, "A"), (Seller::Two, "B")],
    };
    match ctx.out_format() {
        Format::Csv => {
            for (s, name) in sellers {
                let mut w = ctx.out.raw(&format!("{name}.csv"))?;
                m.write_csv(&mut w, *s)?;
                w.flush()?;
            }
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert(
                "prices".into(),
                json!(model
                    .grid
                    .prices()
                    .map(|p| model.grid.value(p))
                    .collect::<Vec<_>>()),
            );
            for (s, name) in sellers {
                let rows: Vec<Vec<f64>> = (0..k)
                    .map(|i| {
                        (0..k)
                            .map(|j| match s {
                                Seller::One => m.a(i, j),
                                Seller::Two => m.b(i, j),
                            })
                            .collect()
                    })
                    .collect();
                obj.insert((*name).into(), json!(rows));
            }
            ctx.out.json("matrices.json", &obj)?;
        }
    }
    let checks = vec![Check::holds("B is the transpose of A", m.is_symmetric())];
    let params = json!({ "model": ModelParams::from(&model), "seller": a.seller });
    Report::new("payoff-matrix", params, json!({}), checks)
}
