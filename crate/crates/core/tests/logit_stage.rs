//! Logit commitment LPs at sizes where the tableau alone drifts past the
//! primal tolerance.

use pricelab::equilibrium::stackelberg_stage;
use pricelab::{MarketModel, Seller};

#[test]
fn logit_k20_commitment_certifies_for_both_seats() {
    let model = MarketModel::logit(20, 40.0).unwrap();
    for seat in [Seller::One, Seller::Two] {
        let sol = stackelberg_stage(&model, seat).expect("certified optimum");
        let total: f64 = sol.leader_dist.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(sol.leader_dist.weights().iter().all(|&w| w >= -1e-12));
        assert!(sol.leader_value > 0.0 && sol.follower_value > 0.0);
    }
}

#[test]
fn logit_sweep_sizes_certify() {
    for k in (10..=60).step_by(10) {
        let model = MarketModel::logit(k, 2.0 * k as f64).unwrap();
        stackelberg_stage(&model, Seller::One).unwrap_or_else(|e| panic!("k={k}: {e}"));
    }
}
