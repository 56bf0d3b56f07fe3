//! Support bounds for equilibria of the logit pricing game.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stage_game::{
    best_response_from_payoffs, pure_payoffs_against, MarketModel, Price, PriceDistribution,
};

/// `max{ 2 / (k (1 - e^{-tau})), 2 / tau }`, or `None` when `tau = 0`
/// (demand ignores prices and no bound exists).
pub fn logit_threshold(tau: f64, k: usize) -> Result<Option<f64>> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tau must be finite and >= 0, got {tau}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidGrid(k));
    }
    if tau == 0.0 {
        return Ok(None);
    }
    let kf = k as f64;
    // -expm1(-tau) = 1 - e^{-tau} without cancellation for small tau
    Ok(Some((2.0 / (kf * -(-tau).exp_m1())).max(2.0 / tau)))
}

/// Highest price any Nash equilibrium of the logit game can put weight on:
/// the threshold plus one grid step.
pub fn logit_ne_support_bound(tau: f64, k: usize) -> Result<Option<f64>> {
    Ok(logit_threshold(tau, k)?.map(|t| t + 1.0 / k as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrBelowViolation {
    pub max_support: Price,
    pub best_responses: Vec<Price>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrBelowReport {
    pub bound: f64,
    pub trials: usize,
    pub violations: Vec<BrBelowViolation>,
}

/// Samples opponent distributions whose highest price exceeds the support
/// bound and checks that every best response lies strictly below that price.
pub fn verify_br_below<R: Rng>(
    model: &MarketModel,
    trials: usize,
    rng: &mut R,
) -> Result<BrBelowReport> {
    let Some(tau) = model.tau() else {
        return Err(Error::Unsupported(
            "the best-response bound concerns the logit model".into(),
        ));
    };
    let k = model.k();
    let Some(bound) = logit_ne_support_bound(tau, k)? else {
        return Err(Error::InvalidParameter(
            "tau = 0 has no support bound".into(),
        ));
    };
    // smallest level strictly above the bound
    let first = ((bound * k as f64).floor() as usize + 1).max(1);
    if first > k {
        return Ok(BrBelowReport {
            bound,
            trials: 0,
            violations: Vec::new(),
        });
    }
    let mut violations = Vec::new();
    for _ in 0..trials {
        let top = rng.random_range(first..=k);
        let mut w = vec![0.0; k];
        // random support below `top`, always including `top` itself
        for v in w.iter_mut().take(top - 1) {
            if rng.random_bool(0.5) {
                *v = rng.random::<f64>();
            }
        }
        w[top - 1] = rng.random::<f64>() + 1e-3;
        let d = PriceDistribution::from_unnormalized(w)?;
        let payoffs = pure_payoffs_against(model, &d);
        let br = best_response_from_payoffs(&payoffs, 0.0);
        let max_support = d.max_support();
        if br.prices.iter().any(|p| *p >= max_support) {
            violations.push(BrBelowViolation {
                max_support,
                best_responses: br.prices,
                weights: d.into_weights(),
            });
        }
    }
    Ok(BrBelowReport {
        bound,
        trials,
        violations,
    })
}
