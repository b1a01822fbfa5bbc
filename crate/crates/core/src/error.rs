use thiserror::Error;

use crate::adversary::Padding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid depth k={k} for {n} elements")]
    InvalidDepth { k: i64, n: usize },
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("eps={eps} too large: {detail}")]
    EpsilonTooLarge { eps: String, detail: String },
    #[error("padding could not be verified after {} attempts: {}", .0.attempts, .0.detail)]
    PaddingUnverifiable(Box<Padding>),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("oracle search space too large: {0}")]
    OracleTooLarge(String),
}
