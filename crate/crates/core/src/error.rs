use thiserror::Error;

/// Errors raised by the pricing laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size k={0} is invalid (need k >= 1)")]
    InvalidGrid(usize),

    #[error("price level {level} is not on the grid 1..={k}")]
    OffGrid { level: usize, k: usize },

    #[error("price {price} does not coincide with a point of the grid with k={k}")]
    NotAGridPrice { price: f64, k: usize },

    #[error("invalid price distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k={k} exceeds the dense-matrix limit of {limit}")]
    TooLarge { k: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("linear program: {0}")]
    Lp(#[from] crate::lp::LpError),

    #[error("internal solver error: {0}")]
    Internal(String),

    #[error("algorithm configuration: {0}")]
    Config(String),

    #[error("round {round}, player {player}: {reason}")]
    InvalidRound {
        round: usize,
        player: usize,
        reason: String,
    },

    #[error("transcript parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
