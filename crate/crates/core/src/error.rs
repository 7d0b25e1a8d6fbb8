use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Covariance not symmetric positive definite (or otherwise unusable).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("time {t} outside curve domain [0, {horizon}]")]
    Domain { t: f64, horizon: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("validation failed for {path}: {message}")]
    Validation { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
