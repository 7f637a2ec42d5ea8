use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Rejected configuration; nothing was computed.
    #[error("{0}")]
    Usage(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("nothing to write")]
    NothingToWrite,
}

impl HarnessError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

/// Core errors raised while validating a configuration.
pub fn usage(e: fracsol_core::Error) -> HarnessError {
    match e {
        fracsol_core::Error::InvalidParameter(msg) => HarnessError::Usage(msg),
        other => HarnessError::Usage(other.to_string()),
    }
}

/// Core errors raised during a computation.
pub fn numerical(e: fracsol_core::Error) -> HarnessError {
    HarnessError::Numerical(e.to_string())
}
