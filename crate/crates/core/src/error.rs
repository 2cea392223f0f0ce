use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("out of domain: {0}")]
    Domain(String),
    #[error("ADMM produced a non-finite iterate at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("simplex exceeded its pivot budget of {budget} even under Bland's rule")]
    Cycling { budget: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
