use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("coefficient kind mismatch: {0}")]
    KindMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("support exceeds the declared truncation at {0}")]
    DomainExceeded(String),
    #[error("degenerate rate: w + M*||B_0|| = {0} must be positive")]
    DegenerateRate(f64),
    #[error("problem too large for the dense oracle: {coeffs} coefficients x dim {dim}")]
    SizeGuard { coeffs: usize, dim: usize },
    #[error("singular linear solve at gamma = {0}")]
    SingularSolve(String),
    #[error("hypothesis validation failed: {0}")]
    HypothesisFailed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
