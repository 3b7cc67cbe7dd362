use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("masses sum to {sum}, expected 1 within 1e-12")]
    NonNormalized { sum: f64 },
    #[error("duplicate point {0}")]
    DuplicatePoint(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("conditioned view has zero weight")]
    ZeroWeight,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("hypothesis class is empty")]
    EmptyHypothesisClass,
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("operation requires an explicit distribution")]
    NotExplicit,
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("function is not monotone")]
    NotMonotone,
    #[error("enumeration of {count} induced distributions exceeds cap {cap}")]
    ExplosionGuard { count: u64, cap: u64 },
    #[error("target generation failed: {0}")]
    GenerationFailed(String),
    #[error("unsupported corruption strategy: {0}")]
    InvalidStrategy(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}
