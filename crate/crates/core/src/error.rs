use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A normalizing variance is zero, so the statistic is undefined.
    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("index {index} outside the defined range 1..={max} of a finite-horizon model")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("window p={p}, n={n} exceeds path covering indices {first}..{last}")]
    WindowOutOfPath {
        p: usize,
        n: usize,
        first: usize,
        last: usize,
    },

    #[error("covariance section of size {0} is not positive semidefinite after jitter")]
    NotPositiveSemidefinite(usize),

    #[error("model is not certified associated: {0}")]
    Uncertified(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
