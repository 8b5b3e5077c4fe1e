use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("rank-deficient zero-forcing constraint set")]
    RankDeficient,

    #[error("quadrature did not converge (estimated error {0:e})")]
    Quadrature(f64),

    #[error("pilot overhead {0} leaves no room for data (coherence block too short)")]
    Overhead(f64),

    #[error("no served users in any replicate")]
    NoServedUsers,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
