use thiserror::Error;

#[derive(Debug, Error)]
pub enum KinkError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile grids differ")]
    GridMismatch,

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("profile tails must satisfy tail_left = -tail_right (got {left}, {right})")]
    TailMismatch { left: f64, right: f64 },

    #[error("adaptive quadrature reached {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("constants ledger invariant violated: {0}")]
    LedgerInvariant(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = KinkError> = std::result::Result<T, E>;
