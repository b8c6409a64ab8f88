use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular factorization at pivot {index} (operator is not strictly dissipative)")]
    SingularFactorization { index: usize },

    #[error("operator is not strictly dissipative: {0}")]
    NotDissipative(String),

    #[error("operator is not self-adjoint in its weighted inner product (entry {row},{col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("dense oracle refused: dimension {dimension} exceeds cap {cap}")]
    OracleCapExceeded { dimension: usize, cap: usize },

    #[error("degenerate study: {0}")]
    Degenerate(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
