use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{what} diverged: {detail}")]
    Diverged { what: &'static str, detail: String },

    #[error("krylov breakdown in {what}: {detail}")]
    Breakdown { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
