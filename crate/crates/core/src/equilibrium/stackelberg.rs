//! Optimal commitments in the stage game, one LP per candidate follower price.
//!
//! For a follower price `j` the leader maximizes its expected payoff over
//! distributions `x` under which `j` is a (weak) best response:
//!
//! ```text
//! max  Σ_i x_i L[i][j]
//! s.t. Σ_i x_i (F[i][j'] - F[i][j]) <= 0   for every j' != j
//!      Σ_i x_i = 1,  x >= 0
//! ```
//!
//! The best of the `k` programs is the Stackelberg value. Weak inequalities
//! let the follower break ties in the leader's favor.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpScalar, LpStatus, Relation};
use crate::stage_game::{
    best_response_from_payoffs, payoff_matrices, MarketModel, PayoffMatrices, Price,
    PriceDistribution, Seller,
};

/// Largest `k` accepted by the rational solver.
pub const MAX_EXACT_K: usize = 50;

/// Default probability shifted above the follower's price to make its best response unique.
pub const DEFAULT_TIE_BREAK_MASS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution {
    pub model: MarketModel,
    pub leader: Seller,
    pub leader_dist: PriceDistribution,
    pub follower_action: Price,
    pub leader_value: f64,
    pub follower_value: f64,
    /// LP optimum for every candidate follower price (`None` when infeasible).
    pub candidate_values: Vec<Option<f64>>,
}

/// Wire form of a [`StageSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSolutionRecord {
    pub k: usize,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<f64>,
    pub leader_value: f64,
    pub follower_value: f64,
    pub follower_action: f64,
    pub leader_dist: Vec<f64>,
}

impl StageSolution {
    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn to_record(&self) -> StageSolutionRecord {
        StageSolutionRecord {
            k: self.k(),
            model: self.model.name().to_string(),
            tau: self.model.tau(),
            leader_value: self.leader_value,
            follower_value: self.follower_value,
            follower_action: self.model.grid.value(self.follower_action),
            leader_dist: self.leader_dist.weights().to_vec(),
        }
    }

    /// The follower's payoff from each of its prices against the commitment.
    pub fn follower_payoffs(&self, matrices: &PayoffMatrices) -> Vec<f64> {
        follower_payoffs(matrices, self.leader, self.leader_dist.weights())
    }

    /// Follower prices within `tolerance` of its best payoff against the commitment.
    pub fn follower_best_responses(&self, matrices: &PayoffMatrices, tolerance: f64) -> Vec<Price> {
        best_response_from_payoffs(&self.follower_payoffs(matrices), tolerance).prices
    }

    /// Moves `mass` onto the price just above the follower's action, so the
    /// follower's weak preference for that action becomes strict.
    pub fn perturbed(&self, matrices: &PayoffMatrices, mass: f64) -> Result<PerturbedCommitment> {
        if !(0.0..1.0).contains(&mass) {
            return Err(Error::InvalidParameter(format!(
                "tie-break mass must lie in [0, 1), got {mass}"
            )));
        }
        let k = self.k();
        let above = self.follower_action.level() + 1;
        if above > k {
            return Err(Error::InvalidParameter(
                "follower already prices at the top of the grid".into(),
            ));
        }
        let bump = PriceDistribution::point_mass(k, self.model.grid.price(above)?);
        let leader_dist = bump.mix(&self.leader_dist, mass)?;
        let payoffs = follower_payoffs(matrices, self.leader, leader_dist.weights());
        let br = best_response_from_payoffs(&payoffs, 0.0);
        let (leader_value, follower_value) =
            values_at(matrices, self.leader, leader_dist.weights(), br.prices[0]);
        Ok(PerturbedCommitment {
            mass,
            leader_dist,
            follower_best_responses: br.prices,
            leader_value,
            follower_value,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCommitment {
    pub mass: f64,
    pub leader_dist: PriceDistribution,
    /// Exact argmax of the follower's payoff (no tolerance).
    pub follower_best_responses: Vec<Price>,
    pub leader_value: f64,
    pub follower_value: f64,
}

/// `(leader payoff, follower payoff)` with leader grid index `i` and follower index `j`.
fn entry(m: &PayoffMatrices, leader: Seller, i: usize, j: usize) -> (f64, f64) {
    match leader {
        Seller::One => (m.a(i, j), m.b(i, j)),
        Seller::Two => (m.b(j, i), m.a(j, i)),
    }
}

fn follower_payoffs(m: &PayoffMatrices, leader: Seller, x: &[f64]) -> Vec<f64> {
    let k = m.k();
    (0..k)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(i, w)| w * entry(m, leader, i, j).1)
                .sum()
        })
        .collect()
}

fn values_at(m: &PayoffMatrices, leader: Seller, x: &[f64], follower: Price) -> (f64, f64) {
    let j = follower.index();
    x.iter().enumerate().fold((0.0, 0.0), |(l, f), (i, w)| {
        let (a, b) = entry(m, leader, i, j);
        (l + w * a, f + w * b)
    })
}

/// The LP that makes follower index `j` a best response while maximizing the leader.
pub fn commitment_lp<T: LpScalar>(
    leader_payoff: &[Vec<T>],
    follower_payoff: &[Vec<T>],
    j: usize,
) -> LinearProgram<T> {
    let k = leader_payoff.len();
    let objective = (0..k).map(|i| leader_payoff[i][j].clone()).collect();
    let mut lp = LinearProgram::maximize(objective);
    for jp in (0..k).filter(|&jp| jp != j) {
        let coeffs = (0..k)
            .map(|i| follower_payoff[i][jp].clone() - &follower_payoff[i][j])
            .collect();
        lp.add(coeffs, Relation::Le, T::zero());
    }
    lp.add(vec![T::one(); k], Relation::Eq, T::one());
    lp
}

fn leader_follower_tables(m: &PayoffMatrices, leader: Seller) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let k = m.k();
    let mut l = vec![vec![0.0; k]; k];
    let mut f = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let (a, b) = entry(m, leader, i, j);
            l[i][j] = a;
            f[i][j] = b;
        }
    }
    (l, f)
}

/// Stackelberg equilibrium of the stage game with `leader` committing first.
pub fn stackelberg_stage(model: &MarketModel, leader: Seller) -> Result<StageSolution> {
    let matrices = payoff_matrices(model)?;
    stackelberg_from_matrices(model, &matrices, leader)
}

pub fn stackelberg_from_matrices(
    model: &MarketModel,
    matrices: &PayoffMatrices,
    leader: Seller,
) -> Result<StageSolution> {
    let k = model.k();
    let (l, f) = leader_follower_tables(matrices, leader);
    let outcomes: Vec<_> = (0..k)
        .into_par_iter()
        .map(|j| lp::solve_lp(&commitment_lp(&l, &f, j)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let candidate_values: Vec<Option<f64>> = outcomes
        .iter()
        .map(|s| (s.status == LpStatus::Optimal).then_some(s.objective))
        .collect();
    let mut best: Option<usize> = None;
    for (j, v) in candidate_values.iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|b| *v > candidate_values[b].unwrap() + 1e-12) {
                best = Some(j);
            }
        }
    }
    let j = best.ok_or_else(|| Error::Internal("every commitment LP was infeasible".into()))?;
    let x: Vec<f64> = outcomes[j].x.iter().map(|v| v.max(0.0)).collect();
    let leader_dist = PriceDistribution::from_unnormalized(x)?;
    let follower_action = Price::from_index(j);
    let (leader_value, follower_value) =
        values_at(matrices, leader, leader_dist.weights(), follower_action);
    Ok(StageSolution {
        model: *model,
        leader,
        leader_dist,
        follower_action,
        leader_value,
        follower_value,
        candidate_values,
    })
}

/// Bertrand stage payoffs as exact fractions.
pub fn bertrand_matrix_exact(k: usize) -> Vec<Vec<BigRational>> {
    let k_i = k as i64;
    (1..=k_i)
        .map(|i| {
            (1..=k_i)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => lp::rational(i, k_i),
                    std::cmp::Ordering::Equal => lp::rational(i, 2 * k_i),
                    std::cmp::Ordering::Greater => BigRational::zero(),
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactStageSolution {
    pub k: usize,
    pub leader_dist: Vec<BigRational>,
    pub follower_action: Price,
    pub leader_value: BigRational,
    pub follower_value: BigRational,
    /// Follower prices whose payoff equals the follower's best payoff exactly.
    pub follower_ties: Vec<Price>,
}

/// Bertrand Stackelberg commitment over exact rationals (seller 1 leads).
pub fn stackelberg_bertrand_exact(k: usize) -> Result<ExactStageSolution> {
    if k == 0 || k > MAX_EXACT_K {
        return Err(Error::InvalidParameter(format!(
            "exact mode supports 1 <= k <= {MAX_EXACT_K}, got {k}"
        )));
    }
    let a = bertrand_matrix_exact(k);
    // seller 2's payoff B[i][j] = A[j][i]
    let b: Vec<Vec<BigRational>> = (0..k)
        .map(|i| (0..k).map(|j| a[j][i].clone()).collect())
        .collect();
    let solutions = (0..k)
        .into_par_iter()
        .map(|j| {
            lp::solve_lp_exact(&commitment_lp(&a, &b, j).with_pivot_rule(lp::PivotRule::Bland))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut best: Option<usize> = None;
    for (j, s) in solutions.iter().enumerate() {
        if s.status == LpStatus::Optimal
            && best.is_none_or(|b| s.objective > solutions[b].objective)
        {
            best = Some(j);
        }
    }
    let j = best.ok_or_else(|| Error::Internal("every commitment LP was infeasible".into()))?;
    let x = solutions[j].x.clone();
    let follower: Vec<BigRational> = (0..k)
        .map(|jp| (0..k).map(|i| &x[i] * &b[i][jp]).sum())
        .collect();
    let top = follower
        .iter()
        .max()
        .cloned()
        .unwrap_or_else(BigRational::zero);
    let follower_ties = (0..k)
        .filter(|&jp| follower[jp] == top)
        .map(Price::from_index)
        .collect();
    let leader_value: BigRational = (0..k).map(|i| &x[i] * &a[i][j]).sum();
    debug_assert!(x.iter().sum::<BigRational>() == BigRational::one());
    Ok(ExactStageSolution {
        k,
        leader_dist: x,
        follower_action: Price::from_index(j),
        leader_value,
        follower_value: follower[j].clone(),
        follower_ties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stage_game::expected_payoff;

    #[test]
    fn solution_values_match_expected_payoff() {
        let m = MarketModel::bertrand(8).unwrap();
        let s = stackelberg_stage(&m, Seller::One).unwrap();
        let follower = PriceDistribution::point_mass(8, s.follower_action);
        let (u1, u2) = expected_payoff(&m, &s.leader_dist, &follower).unwrap();
        assert!((u1 - s.leader_value).abs() < 1e-12);
        assert!((u2 - s.follower_value).abs() < 1e-12);
    }

    #[test]
    fn follower_action_is_a_best_response() {
        let m = MarketModel::logit(10, 15.0).unwrap();
        let pm = payoff_matrices(&m).unwrap();
        let s = stackelberg_stage(&m, Seller::One).unwrap();
        assert!(s
            .follower_best_responses(&pm, 1e-9)
            .contains(&s.follower_action));
    }

    #[test]
    fn either_seller_may_lead_in_the_symmetric_game() {
        let m = MarketModel::bertrand(12).unwrap();
        let one = stackelberg_stage(&m, Seller::One).unwrap();
        let two = stackelberg_stage(&m, Seller::Two).unwrap();
        assert!((one.leader_value - two.leader_value).abs() < 1e-9);
        assert!((one.follower_value - two.follower_value).abs() < 1e-9);
    }

    #[test]
    fn degenerate_single_price_grid() {
        let m = MarketModel::bertrand(1).unwrap();
        let s = stackelberg_stage(&m, Seller::One).unwrap();
        assert_eq!(s.leader_dist.weights(), &[1.0]);
        assert_eq!(s.leader_value, 0.5);
    }

    #[test]
    fn exact_and_float_agree() {
        for k in [3, 6, 10] {
            let m = MarketModel::bertrand(k).unwrap();
            let float = stackelberg_stage(&m, Seller::One).unwrap();
            let exact = stackelberg_bertrand_exact(k).unwrap();
            assert!(
                (float.leader_value - exact.leader_value.to_f64_lossy()).abs() < 1e-9,
                "k={k}"
            );
        }
    }

    #[test]
    fn exact_mode_size_guard() {
        assert!(stackelberg_bertrand_exact(MAX_EXACT_K + 1).is_err());
    }

    #[test]
    fn record_round_trips_through_json() {
        let m = MarketModel::logit(4, 3.0).unwrap();
        let rec = stackelberg_stage(&m, Seller::One).unwrap().to_record();
        let back: StageSolutionRecord =
            serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(rec, back);
        assert_eq!(back.tau, Some(3.0));
    }
}
