use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time {0} is not a grid point")]
    OffGrid(f64),
    #[error("points out of order: {0}")]
    Ordering(String),
    #[error("dyadic level {level} exceeds the grid resolution of an interval with {cells} cells")]
    ResolutionExceeded { level: u32, cells: usize },
    #[error("germ has no exact conditional-expectation rule")]
    MissingConditional,
    #[error("path bundle does not carry {0}")]
    MissingData(&'static str),
    #[error("need at least {needed} scales for a rate fit, got {got}")]
    InsufficientScales { needed: usize, got: usize },
    #[error("cholesky factorization failed at row {0} after regularization")]
    Factorization(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("precondition violated: {0}")]
    Condition(String),
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
