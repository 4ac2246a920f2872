use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("degenerate scatter matrix at step {step}: {source}")]
    DegenerateScatter { step: usize, source: LinalgError },
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid weight scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid order k = {k} for a sample of size {n}")]
    InvalidK { k: usize, n: usize },
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{failed} of {replications} replications had a degenerate scatter matrix")]
    TooManyFailures { failed: usize, replications: usize },
}

impl Error {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateScatter { .. })
    }
}
