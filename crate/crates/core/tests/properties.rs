use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use pricelab::equilibrium::{bertrand_matrix_exact, cce_feasibility, EquilibriumKind};
use pricelab::lp::{solve_lp, solve_lp_exact, LinearProgram, LpStatus, Relation};
use pricelab::{
    allocate, buyer_price, buyer_price_direct, expected_payoff, payoff_matrices, MarketModel,
    Price, PriceDistribution,
};

fn model_strategy() -> impl Strategy<Value = MarketModel> {
    (2usize..25, prop::option::of(0.5f64..200.0)).prop_map(|(k, tau)| match tau {
        None => MarketModel::bertrand(k).unwrap(),
        Some(t) => MarketModel::logit(k, t).unwrap(),
    })
}

fn dist(k: usize, raw: &[f64]) -> PriceDistribution {
    PriceDistribution::from_unnormalized(raw.iter().take(k).map(|x| x + 1e-3).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stage_invariants(model in model_strategy(), raw1 in prop::collection::vec(0.0f64..1.0, 25),
                        raw2 in prop::collection::vec(0.0f64..1.0, 25)) {
        let k = model.k();
        let m = payoff_matrices(&model).unwrap();
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(m.b(i, j), m.a(j, i));
                let (c1, c2) = allocate(&model, Price::from_index(i), Price::from_index(j)).unwrap();
                prop_assert!((c1 + c2 - 1.0).abs() < 1e-12);
                let (pi, pj) = ((i + 1) as f64 / k as f64, (j + 1) as f64 / k as f64);
                let s = m.a(i, j) + m.b(i, j);
                prop_assert!(s >= pi.min(pj) - 1e-12 && s <= pi.max(pj) + 1e-12);
                if i < j {
                    // the cheaper seller keeps at least half the demand
                    prop_assert!(c1 >= 0.5 - 1e-12);
                }
            }
        }
        let (d1, d2) = (dist(k, &raw1), dist(k, &raw2));
        let (u1, u2) = expected_payoff(&model, &d1, &d2).unwrap();
        let bp = buyer_price(&model, &d1, &d2).unwrap();
        prop_assert!((bp - (u1 + u2)).abs() < 1e-12);
        prop_assert!((bp - buyer_price_direct(&model, &d1, &d2).unwrap()).abs() < 1e-12);
        let (v2, v1) = expected_payoff(&model, &d2, &d1).unwrap();
        prop_assert!((u1 - v1).abs() < 1e-12 && (u2 - v2).abs() < 1e-12);
    }

    /// `max c.x` over `A x <= b` with nonnegative `A`, positive `b`: always
    /// feasible and bounded. The optimum is feasible and no sampled feasible
    /// point beats it.
    #[test]
    fn lp_optimum_dominates_feasible_points(
        n in 2usize..6, m in 1usize..6,
        coeffs in prop::collection::vec(0.05f64..3.0, 36),
        rhs in prop::collection::vec(0.5f64..5.0, 6),
        obj in prop::collection::vec(-1.0f64..2.0, 6),
        samples in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 20),
    ) {
        let c: Vec<f64> = obj[..n].to_vec();
        let rows: Vec<Vec<f64>> = (0..m).map(|r| coeffs[r * 6..r * 6 + n].to_vec()).collect();
        let mut lp = LinearProgram::maximize(c.clone());
        for (r, row) in rows.iter().enumerate() {
            lp.add(row.clone(), Relation::Le, rhs[r]);
        }
        let sol = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        for (r, row) in rows.iter().enumerate() {
            let lhs: f64 = row.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
            prop_assert!(lhs <= rhs[r] + 1e-9);
        }
        prop_assert!(sol.x.iter().all(|x| *x >= -1e-12));
        let value: f64 = c.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
        prop_assert!((value - sol.objective).abs() < 1e-9);
        // weak duality: b.y bounds the objective
        let dual: f64 = sol.duals.iter().zip(&rhs).map(|(y, b)| y * b).sum();
        prop_assert!(dual >= sol.objective - 1e-7);
        for s in &samples {
            // scale the sample back into the feasible region
            let x = &s[..n];
            let worst = rows.iter().enumerate().map(|(r, row)| {
                row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() / rhs[r]
            }).fold(0.0, f64::max);
            let scale = if worst > 1.0 { 1.0 / worst } else { 1.0 };
            let v: f64 = c.iter().zip(x).map(|(a, x)| a * x * scale).sum();
            prop_assert!(v <= sol.objective + 1e-9);
        }
    }

    #[test]
    fn exact_and_float_lp_agree(
        n in 2usize..5, m in 1usize..5,
        coeffs in prop::collection::vec(1i64..9, 25),
        rhs in prop::collection::vec(1i64..20, 5),
        obj in prop::collection::vec(-3i64..6, 5),
    ) {
        let q = |v: i64| BigRational::from_integer(v.into());
        let mut f = LinearProgram::maximize(obj[..n].iter().map(|v| *v as f64).collect());
        let mut e = LinearProgram::maximize(obj[..n].iter().map(|v| q(*v)).collect());
        for r in 0..m {
            let row = &coeffs[r * 5..r * 5 + n];
            f.add(row.iter().map(|v| *v as f64).collect(), Relation::Le, rhs[r] as f64);
            e.add(row.iter().map(|v| q(*v)).collect(), Relation::Le, q(rhs[r]));
        }
        let fs = solve_lp(&f).unwrap();
        let es = solve_lp_exact(&e).unwrap();
        prop_assert!((fs.objective - es.objective.to_f64().unwrap()).abs() < 1e-9);
    }
}

/// Correlated-equilibrium LP over prices at or above `min_level`, written
/// directly from the exact Bertrand table.
fn exact_correlated_feasible(k: usize, min_level: usize, kind: EquilibriumKind) -> bool {
    let a = bertrand_matrix_exact(k);
    let b = |i: usize, j: usize| a[j][i].clone();
    let s = min_level - 1;
    let n = k - s;
    let var = |i: usize, j: usize| (i - s) * n + (j - s);
    let mut lp = LinearProgram::maximize(vec![BigRational::zero(); n * n]);
    let zero = || vec![BigRational::zero(); n * n];
    match kind {
        EquilibriumKind::CoarseCorrelated => {
            for dev in 0..k {
                let (mut c1, mut c2) = (zero(), zero());
                for i in s..k {
                    for j in s..k {
                        c1[var(i, j)] = &a[dev][j] - &a[i][j];
                        c2[var(i, j)] = b(i, dev) - b(i, j);
                    }
                }
                lp.add(c1, Relation::Le, BigRational::zero());
                lp.add(c2, Relation::Le, BigRational::zero());
            }
        }
        EquilibriumKind::Correlated => {
            for rec in s..k {
                for dev in 0..k {
                    let (mut c1, mut c2) = (zero(), zero());
                    for o in s..k {
                        c1[var(rec, o)] = &a[dev][o] - &a[rec][o];
                        c2[var(o, rec)] = b(o, dev) - b(o, rec);
                    }
                    lp.add(c1, Relation::Le, BigRational::zero());
                    lp.add(c2, Relation::Le, BigRational::zero());
                }
            }
        }
    }
    lp.add(
        vec![BigRational::from_integer(1.into()); n * n],
        Relation::Eq,
        BigRational::from_integer(1.into()),
    );
    solve_lp_exact(&lp).unwrap().status == LpStatus::Optimal
}

#[test]
fn correlated_feasibility_matches_exact_arithmetic() {
    for k in 3..=7 {
        let model = MarketModel::bertrand(k).unwrap();
        for level in 1..=k.min(4) {
            for kind in [
                EquilibriumKind::Correlated,
                EquilibriumKind::CoarseCorrelated,
            ] {
                let float = cce_feasibility(&model, model.grid.price(level).unwrap(), kind)
                    .unwrap()
                    .feasible;
                let exact = exact_correlated_feasible(k, level, kind);
                assert_eq!(float, exact, "k={k} level={level} {kind:?}");
                if kind == EquilibriumKind::Correlated {
                    // equilibria never need prices above 2/k
                    assert_eq!(exact, level <= 2, "k={k} level={level}");
                }
            }
        }
    }
}
