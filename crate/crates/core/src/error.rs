use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the construction makes sense.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (fields, tables, specs).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An evaluation would overflow `f64`.
    #[error("overflow: {0}")]
    Overflow(String),

    /// An iterative solver stopped before reaching its tolerances.
    #[error(
        "no convergence after {} iterations (residual {:.3e}, energy {:.12e})",
        .0.iterations, .0.residual, .0.energy
    )]
    NotConverged(Box<NotConverged>),

    /// A numerical procedure (extrapolation, fit) failed its own sanity checks.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// State carried out of a solver that ran out of iterations.
#[derive(Debug, Clone)]
pub struct NotConverged {
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    /// Last iterate, in the solver's own unknown ordering.
    pub last_iterate: Vec<f64>,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
