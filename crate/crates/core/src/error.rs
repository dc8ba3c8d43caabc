use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps ({found} of {n} eigenvalues found)")]
    EigenNoConvergence { sweeps: usize, found: usize, n: usize },
    #[error("matrix is numerically defective: {0}")]
    Defective(String),
    #[error("size cap exceeded: {what} has dimension {dim}, cap is {cap}")]
    CapExceeded { what: &'static str, dim: usize, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! ensure_dims {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::Error::DimensionMismatch(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure_dims;
