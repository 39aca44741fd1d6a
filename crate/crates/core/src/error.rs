use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (non-finite values, out-of-range states).
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid configuration (degrees, bounds, hyperparameters).
    #[error("configuration error: {0}")]
    Config(String),
    /// A model produced a non-finite value during training or acting.
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what} is not finite ({value})")))
    }
}
