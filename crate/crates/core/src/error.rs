use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("model matrix is rank deficient: numerical rank {rank} < {expected} columns")]
    RankDeficient { rank: usize, expected: usize },

    #[error("noise variance must be positive and finite, got {0}")]
    NonPositiveVariance(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid attack bounds: need 0 < rho_l <= rho_u, got rho_l={rho_l}, rho_u={rho_u}")]
    InvalidBounds { rho_l: f64, rho_u: f64 },

    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),

    #[error("detector already alarmed; construct a fresh state")]
    SteppedAfterAlarm,

    #[error("exhaustive search over {meters} meters exceeds the guard of {limit}")]
    TooLarge { meters: usize, limit: usize },

    #[error("inner projection did not converge after {iterations} iterations (violation {violation:e})")]
    NoConvergence { iterations: usize, violation: f64 },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("{0}")]
    Semantic(String),

    #[error("meter placement: {0}")]
    Placement(String),

    #[error("reduced susceptance matrix is singular")]
    SingularSystem,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
