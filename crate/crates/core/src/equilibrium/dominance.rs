use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::stage_game::{pure_payoffs_against, MarketModel, Price, PriceDistribution};

/// `dominating_price` beats `dominated_price` by `gap` against a fixed opponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceWitness {
    pub dominated_price: Price,
    pub dominating_price: Price,
    pub gap: f64,
}

/// Guaranteed gap of a marginal-domination witness, `1 / (24 k²)`.
pub fn marginal_domination_gap(k: usize) -> f64 {
    1.0 / (24.0 * (k * k) as f64)
}

/// Finds the lower price that best beats `x` against `opponent` in the Bertrand game.
///
/// Requires `x >= 3/k` and at most `1/(24k)` opponent mass strictly above `x`;
/// under those conditions some `x' < x` gains at least `1/(24k²)`.
/// `Ok(None)` means the conditions held but no such price exists.
pub fn marginal_domination_witness(
    model: &MarketModel,
    opponent: &PriceDistribution,
    x: Price,
) -> Result<Option<DominanceWitness>> {
    if !model.is_bertrand() {
        return Err(Error::Unsupported(
            "marginal domination is a Bertrand statement".into(),
        ));
    }
    let k = model.k();
    if opponent.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: opponent.k(),
        });
    }
    model.grid.price(x.level())?;
    if x.level() < 3 {
        return Err(Error::HypothesisViolated(format!(
            "x = {}/{k} is below 3/k",
            x.level()
        )));
    }
    let above: f64 = opponent.weights()[x.index() + 1..].iter().sum();
    let limit = 1.0 / (24.0 * k as f64);
    if above > limit {
        return Err(Error::HypothesisViolated(format!(
            "opponent mass above x is {above:.6e}, more than 1/(24k) = {limit:.6e}"
        )));
    }
    let payoffs = pure_payoffs_against(model, opponent);
    let own = payoffs[x.index()];
    let best = (0..x.index()).max_by(|&a, &b| payoffs[a].total_cmp(&payoffs[b]).then(b.cmp(&a)));
    let Some(best) = best else {
        return Ok(None);
    };
    let gap = payoffs[best] - own;
    if gap < marginal_domination_gap(k) {
        return Ok(None);
    }
    Ok(Some(DominanceWitness {
        dominated_price: x,
        dominating_price: Price::from_index(best),
        gap,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Removal {
    pub price: Price,
    /// `min` over opponent mixtures on the surviving set of `max` over lower
    /// surviving prices of the payoff advantage over `price`.
    pub certified_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IteratedDominance {
    pub surviving: Vec<Price>,
    pub removals: Vec<Removal>,
    /// Certified gap for the largest survivor (not positive, so it stays).
    pub final_gap: f64,
}

/// Worst case, over opponent mixtures supported on `support`, of the best
/// advantage a lower price in `support` has over `x`. Positive means `x` is
/// never a best response while play stays inside `support`.
pub fn never_best_response_gap(model: &MarketModel, support: &[Price], x: Price) -> Result<f64> {
    let k = model.k();
    let lower: Vec<Price> = support.iter().copied().filter(|p| *p < x).collect();
    if lower.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    // variables: opponent weights on `support` then z (shifted by +1 to stay nonnegative)
    let n = support.len();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut prog = LinearProgram::minimize(objective);
    for &xp in &lower {
        // z - 1 >= sum_q d_q (u(x', q) - u(x, q))
        let mut coeffs: Vec<f64> = support
            .iter()
            .map(|q| {
                -(model.payoffs_by_index(xp.index(), q.index()).0
                    - model.payoffs_by_index(x.index(), q.index()).0)
            })
            .collect();
        coeffs.push(1.0);
        prog.add(coeffs, Relation::Ge, 1.0);
    }
    let mut simplex = vec![1.0; n];
    simplex.push(0.0);
    prog.add(simplex, Relation::Eq, 1.0);
    let sol = lp::solve_lp(&prog)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "never-best-response LP ended {:?} (k={k})",
            sol.status
        )));
    }
    Ok(sol.objective - 1.0)
}

/// Removes the highest surviving price while it is at least `3/k`, certifying
/// each removal by [`never_best_response_gap`].
pub fn iterated_dominance(model: &MarketModel) -> Result<IteratedDominance> {
    if !model.is_bertrand() {
        return Err(Error::Unsupported(
            "iterated dominance is implemented for Bertrand; use the logit threshold".into(),
        ));
    }
    let k = model.k();
    if !model.grid.supports_theorem_constants() {
        return Err(Error::InvalidParameter(format!(
            "iterated dominance needs k >= 20, got {k}"
        )));
    }
    let mut surviving: Vec<Price> = model.grid.prices().collect();
    let mut removals = Vec::new();
    while let Some(&top) = surviving.last() {
        if top.level() < 3 {
            break;
        }
        let gap = never_best_response_gap(model, &surviving, top)?;
        if gap < marginal_domination_gap(k) {
            return Err(Error::Internal(format!(
                "price {}/{k} could not be certified as dominated (gap {gap:.3e})",
                top.level()
            )));
        }
        removals.push(Removal {
            price: top,
            certified_gap: gap,
        });
        surviving.pop();
    }
    let final_gap = match surviving.last() {
        Some(&top) => never_best_response_gap(model, &surviving, top)?,
        None => f64::NEG_INFINITY,
    };
    Ok(IteratedDominance {
        surviving,
        removals,
        final_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashCheck {
    pub is_eps_nash: bool,
    pub gap1: f64,
    pub gap2: f64,
}

/// Largest pure-deviation gain of each seller; an `eps`-Nash equilibrium iff both are `<= eps`.
pub fn epsilon_nash_check(
    model: &MarketModel,
    d1: &PriceDistribution,
    d2: &PriceDistribution,
    eps: f64,
) -> Result<NashCheck> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps must be >= 0, got {eps}"
        )));
    }
    let (u1, u2) = crate::stage_game::expected_payoff(model, d1, d2)?;
    let best1 = pure_payoffs_against(model, d2)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    // the game is symmetric: seller 2's pure payoffs against d1 use the same table
    let best2 = pure_payoffs_against(model, d1)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let gap1 = (best1 - u1).max(0.0);
    let gap2 = (best2 - u2).max(0.0);
    Ok(NashCheck {
        is_eps_nash: gap1 <= eps && gap2 <= eps,
        gap1,
        gap2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stage_game::{best_response_set, expected_payoff};

    fn price(m: &MarketModel, v: f64) -> Price {
        m.grid.price_at(v).unwrap()
    }

    #[test]
    fn undercutting_a_point_mass() {
        let m = MarketModel::bertrand(20).unwrap();
        let x = price(&m, 0.5);
        let w = marginal_domination_witness(&m, &PriceDistribution::point_mass(20, x), x)
            .unwrap()
            .unwrap();
        // every x' < 0.5 wins outright; 0.45 pays the most, against the tie payoff 0.25
        assert_eq!(w.dominating_price, price(&m, 0.45));
        assert!((w.gap - 0.20).abs() < 1e-12, "{w:?}");
        assert!(w.gap >= marginal_domination_gap(20));
    }

    #[test]
    fn floor_priced_opponent() {
        let k = 20;
        let m = MarketModel::bertrand(k).unwrap();
        let d = PriceDistribution::point_mass(k, m.grid.lowest());
        let w = marginal_domination_witness(&m, &d, m.grid.price(3).unwrap())
            .unwrap()
            .unwrap();
        assert_eq!(w.dominating_price, m.grid.lowest());
        assert!((w.gap - 1.0 / (2.0 * k as f64)).abs() < 1e-15);
    }

    #[test]
    fn uniform_opponent_top_price() {
        let m = MarketModel::bertrand(20).unwrap();
        let w = marginal_domination_witness(&m, &PriceDistribution::uniform(20), m.grid.highest())
            .unwrap();
        assert!(w.unwrap().gap >= 1.0 / 9600.0);
    }

    #[test]
    fn witness_hypotheses_are_reported() {
        let m = MarketModel::bertrand(20).unwrap();
        let low = marginal_domination_witness(
            &m,
            &PriceDistribution::uniform(20),
            m.grid.price(2).unwrap(),
        );
        assert!(matches!(low, Err(Error::HypothesisViolated(msg)) if msg.contains("below 3/k")));
        let heavy = marginal_domination_witness(
            &m,
            &PriceDistribution::uniform(20),
            m.grid.price(10).unwrap(),
        );
        assert!(matches!(heavy, Err(Error::HypothesisViolated(msg)) if msg.contains("mass above")));
        let logit = MarketModel::logit(20, 5.0).unwrap();
        assert!(matches!(
            marginal_domination_witness(
                &logit,
                &PriceDistribution::uniform(20),
                logit.grid.highest()
            ),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn witness_gap_survives_recomputation() {
        let k = 24;
        let m = MarketModel::bertrand(k).unwrap();
        let mut w = vec![0.0; k];
        for (i, v) in w.iter_mut().enumerate().take(15) {
            *v = (i + 1) as f64;
        }
        let d = PriceDistribution::from_unnormalized(w).unwrap();
        for level in 15..=k {
            let x = m.grid.price(level).unwrap();
            let wit = marginal_domination_witness(&m, &d, x).unwrap().unwrap();
            let pa = PriceDistribution::point_mass(k, wit.dominating_price);
            let pb = PriceDistribution::point_mass(k, x);
            let ua = expected_payoff(&m, &pa, &d).unwrap().0;
            let ub = expected_payoff(&m, &pb, &d).unwrap().0;
            assert!(ua - ub >= wit.gap - 1e-12 && wit.gap >= marginal_domination_gap(k));
        }
    }

    #[test]
    fn iterated_dominance_needs_bertrand_and_large_k() {
        assert!(matches!(
            iterated_dominance(&MarketModel::logit(20, 3.0).unwrap()),
            Err(Error::Unsupported(_))
        ));
        assert!(iterated_dominance(&MarketModel::bertrand(10).unwrap()).is_err());
    }

    #[test]
    fn iterated_dominance_k20() {
        let m = MarketModel::bertrand(20).unwrap();
        let r = iterated_dominance(&m).unwrap();
        assert_eq!(
            r.surviving,
            vec![m.grid.price(1).unwrap(), m.grid.price(2).unwrap()]
        );
        assert_eq!(r.removals.len(), 18);
        assert!(r.final_gap <= 0.0);
    }

    #[test]
    fn nash_at_the_floor() {
        let k = 20;
        let m = MarketModel::bertrand(k).unwrap();
        let d = PriceDistribution::point_mass(k, m.grid.lowest());
        let c = epsilon_nash_check(&m, &d, &d, 0.0).unwrap();
        assert!(c.is_eps_nash && c.gap1 == 0.0 && c.gap2 == 0.0);
    }

    #[test]
    fn monopoly_pair_is_not_nash() {
        let k = 20;
        let m = MarketModel::bertrand(k).unwrap();
        let d = PriceDistribution::point_mass(k, m.grid.highest());
        let c = epsilon_nash_check(&m, &d, &d, 0.1).unwrap();
        assert!(!c.is_eps_nash);
        assert!((c.gap1 - 0.45).abs() < 1e-12 && (c.gap2 - 0.45).abs() < 1e-12);
    }

    #[test]
    fn best_response_deviation_gap_is_zero() {
        let m = MarketModel::logit(15, 30.0).unwrap();
        let d2 = PriceDistribution::from_unnormalized((1..=15).map(|i| (i * i) as f64).collect())
            .unwrap();
        let br = best_response_set(&m, &d2, 0.0).unwrap();
        let d1 = PriceDistribution::point_mass(15, br.prices[0]);
        assert_eq!(epsilon_nash_check(&m, &d1, &d2, 0.0).unwrap().gap1, 0.0);
    }
}
