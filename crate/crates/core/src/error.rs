use thiserror::Error;

/// Errors raised by the counting, law, sampling and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-finite value,
    /// out-of-range parameter).
    #[error("domain error: {0}")]
    Domain(String),

    /// Arguments are individually valid but inconsistent with each other.
    #[error("argument error: {0}")]
    Argument(String),

    /// A computation would exceed a configured budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// A sampling density or run configuration is malformed.
    #[error("config error: {0}")]
    Config(String),

    /// A quadrature failed to reach its requested accuracy.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}
