use thiserror::Error;

/// Errors raised by the simulation and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration (species, trap, lattice, drive plan) violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative numerical method failed to converge.
    #[error("numerical method did not converge: {what} (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    /// A trajectory blew up and was abandoned.
    #[error("trajectory aborted at t = {time:e} s: {reason}")]
    Aborted { time: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
