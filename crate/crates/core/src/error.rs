//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} exceeds supported size: {got} > {cap}")]
    SizeCap {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("imaginary residue {residue:.3e} exceeds tolerance {tol:.3e}; composition is not real-valued")]
    ComplexResidue { residue: f64, tol: f64 },

    #[error("measurement operator has zero norm")]
    ZeroOperator,

    #[error("step sizes violate sigma * tau * L^2 <= 1 (got {product:.6})")]
    StepSize { product: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
