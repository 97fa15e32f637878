use thiserror::Error;

use crate::functions::FunctionError;
use crate::geometry::GeometryError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Function(#[from] FunctionError),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{rejected} of {attempted} samples hit the singular set (limit 0.1%)")]
    SingularBudgetExceeded { rejected: u64, attempted: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sweep aborted at s = {s}: {source}")]
    SweepAborted {
        s: f64,
        partial: Box<crate::limits::SweepResult>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
