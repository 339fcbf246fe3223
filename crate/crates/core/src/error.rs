use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{value} is not a half-integer")]
    NotHalfInteger { value: f64 },

    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    #[error("tensor label (k={k}, q={q}) out of range for max rank {max_rank}")]
    TensorIndexOutOfRange { k: i64, q: i64, max_rank: i64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("expected exactly one zero eigenvalue, found {count}")]
    SteadyState { count: usize },

    #[error("reference frequency lies on the Bloch curve (distance {distance:e})")]
    GapClosing { distance: f64 },

    #[error("odd signature {signature} for a gapped localizer")]
    OddSignature { signature: i64 },

    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
