use thiserror::Error;

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Per-RRH blocks disagree on dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A signal dimension carries no power, so one-bit statistics are undefined.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// A normalized correlation lies outside the valid range.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// A linear solve failed even after diagonal jitter.
    #[error("singular matrix in {context} (estimated condition number {cond:.3e})")]
    Singular { context: String, cond: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
