use thiserror::Error;

/// Errors raised by channel generation, estimation and experiment setup.
#[derive(Debug, Error)]
pub enum CsiError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid pilot: {0}")]
    InvalidPilot(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not reach tolerance {tol:e} (error estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-positive LSFC estimate {value:e} for user {user}")]
    NonPositiveLsfc { user: usize, value: f64 },

    #[error("missing parent basis: {0}")]
    MissingParentBasis(String),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CsiError>;
