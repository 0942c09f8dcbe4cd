//! Crate-wide error type with a stable process exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration file, unknown keys, malformed CLI input.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid argument to a library call.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Integrator blow-up or other numerical failure.
    #[error("numerical failure at step {step}: {reason}")]
    Numerical { step: u64, reason: String },

    /// Calibration cannot proceed (singular basis, bad planar fit).
    #[error("calibration degeneracy: {0}")]
    Degenerate(String),

    /// Query or drive signal outside a model's valid domain.
    #[error("domain violation: {0}")]
    Domain(String),

    /// Not enough data to form the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable exit-code contract:
    /// 0 success, 2 config error, 3 numerical failure,
    /// 4 calibration degeneracy, 5 domain violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
            Error::Numerical { .. } | Error::InsufficientData(_) => 3,
            Error::Degenerate(_) => 4,
            Error::Domain(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
