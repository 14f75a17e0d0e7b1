use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("locked regime: a = {a} lies in [{lo}, {hi}], period is undefined")]
    LockedRegime { a: f64, lo: f64, hi: f64 },

    #[error("quadrature failed to converge: estimated error {error:.3e} after {intervals} intervals")]
    QuadratureFailure { error: f64, intervals: usize },

    #[error("integration failure at t = {t}: {reason} ({steps} steps taken)")]
    IntegrationFailure { t: f64, reason: String, steps: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory window too short: {0}")]
    WindowTooShort(String),

    #[error("term count 2^{{n-1}} too large for n = {0} (cap is 20)")]
    TooManyTerms(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
