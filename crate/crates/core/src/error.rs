use thiserror::Error;

/// Errors produced by the signal-processing operations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigensolver did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("ill-conditioned Gram matrix (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code, used in sweep reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Shape(_) => "shape",
            Error::NonConvergence { .. } => "non_convergence",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
