//! Laboratory for repeated duopoly pricing games played by learning algorithms.
//!
//! * [`stage_game`]: price grid, Bertrand and logit allocation, payoffs.
//! * [`equilibrium`]: dominance, Nash checks, Stackelberg commitments via LPs.
//! * [`lp`]: the simplex engine used by the equilibrium solvers.
//! * [`learners`]: pricing algorithms (Hedge, FTPL, Blum–Mansour, static, threat).
//! * [`simulator`]: the repeated game, transcripts and regret audits.

pub mod equilibrium;
pub mod error;
pub mod learners;
pub mod lp;
pub mod simulator;
pub mod stage_game;

pub use error::{Error, Result};
pub use learners::{AlgorithmConfig, AlgorithmKind, Feedback, PricingAlgorithm};
pub use simulator::{run, AuditReport, RunOptions, Transcript};
pub use stage_game::{
    allocate, best_response_set, buyer_price, buyer_price_direct, expected_payoff, payoff_matrices,
    stage_payoff, AllocationRule, BestResponse, MarketModel, PayoffMatrices, Price,
    PriceDistribution, PriceGrid, Seller,
};
