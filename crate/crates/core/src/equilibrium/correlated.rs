//! Feasibility of correlated and coarse correlated equilibria restricted to
//! high prices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::stage_game::{payoff_matrices, MarketModel, PayoffMatrices, Price};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    /// No profitable switch to a fixed price, judged against the marginal.
    CoarseCorrelated,
    /// No profitable switch conditional on each recommended price.
    Correlated,
}

/// A joint distribution over price pairs, listed by positive entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    pub k: usize,
    pub entries: Vec<(Price, Price, f64)>,
}

impl JointDistribution {
    pub fn buyer_price(&self, m: &PayoffMatrices) -> f64 {
        self.entries
            .iter()
            .map(|(p, q, w)| w * (m.a(p.index(), q.index()) + m.b(p.index(), q.index())))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatedFeasibility {
    pub kind: EquilibriumKind,
    pub min_support_price: Price,
    pub feasible: bool,
    /// Among feasible joint distributions, one that maximizes the buyer price.
    pub witness: Option<JointDistribution>,
}

/// Builds the equilibrium LP over joint distributions supported on prices at
/// or above `min_support`. Variables are ordered `(i, j)` row-major over the
/// supported indices; the objective is the expected buyer price.
pub fn correlated_lp(
    m: &PayoffMatrices,
    min_support: Price,
    kind: EquilibriumKind,
) -> LinearProgram<f64> {
    let k = m.k();
    let s = min_support.index();
    let n = k - s;
    let var = |i: usize, j: usize| (i - s) * n + (j - s);
    let mut objective = vec![0.0; n * n];
    for i in s..k {
        for j in s..k {
            objective[var(i, j)] = m.a(i, j) + m.b(i, j);
        }
    }
    let mut prog = LinearProgram::maximize(objective);
    match kind {
        EquilibriumKind::CoarseCorrelated => {
            for dev in 0..k {
                let mut c1 = vec![0.0; n * n];
                let mut c2 = vec![0.0; n * n];
                for i in s..k {
                    for j in s..k {
                        c1[var(i, j)] = m.a(dev, j) - m.a(i, j);
                        c2[var(i, j)] = m.b(i, dev) - m.b(i, j);
                    }
                }
                prog.add(c1, Relation::Le, 0.0);
                prog.add(c2, Relation::Le, 0.0);
            }
        }
        EquilibriumKind::Correlated => {
            for rec in s..k {
                for dev in (0..k).filter(|&d| d != rec) {
                    let mut c1 = vec![0.0; n * n];
                    let mut c2 = vec![0.0; n * n];
                    for other in s..k {
                        c1[var(rec, other)] = m.a(dev, other) - m.a(rec, other);
                        c2[var(other, rec)] = m.b(other, dev) - m.b(other, rec);
                    }
                    prog.add(c1, Relation::Le, 0.0);
                    prog.add(c2, Relation::Le, 0.0);
                }
            }
        }
    }
    prog.add(vec![1.0; n * n], Relation::Eq, 1.0);
    prog
}

/// Is there a (coarse) correlated equilibrium using only prices `>= min_support_price`?
pub fn cce_feasibility(
    model: &MarketModel,
    min_support_price: Price,
    kind: EquilibriumKind,
) -> Result<CorrelatedFeasibility> {
    let k = model.k();
    model.grid.price(min_support_price.level())?;
    let m = payoff_matrices(model)?;
    let prog = correlated_lp(&m, min_support_price, kind);
    let sol = lp::solve_lp(&prog)?;
    let s = min_support_price.index();
    let n = k - s;
    let (feasible, witness) = match sol.status {
        LpStatus::Optimal => {
            let entries = sol
                .x
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(v, w)| {
                    (
                        Price::from_index(s + v / n),
                        Price::from_index(s + v % n),
                        *w,
                    )
                })
                .collect();
            (true, Some(JointDistribution { k, entries }))
        }
        LpStatus::Infeasible => (false, None),
        LpStatus::Unbounded => {
            return Err(Error::Internal(
                "equilibrium LP over a simplex cannot be unbounded".into(),
            ))
        }
    };
    Ok(CorrelatedFeasibility {
        kind,
        min_support_price,
        feasible,
        witness,
    })
}
