use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// No tree of the requested size carries positive weight in the family.
    #[error("invalid size for family: n = {n} (period {period})")]
    InvalidSize { n: usize, period: usize },

    #[error("size limit exceeded: n = {n}, maximum is {max}")]
    SizeLimit { n: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fundamental constant absent: no sign change of phi(t) - t phi'(t) on (0, {upper})")]
    FundamentalConstantAbsent { upper: f64 },

    #[error("invalid weight family: {0}")]
    InvalidFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation order {order} is below the requested size {n}")]
    TruncationTooShort { n: usize, order: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
