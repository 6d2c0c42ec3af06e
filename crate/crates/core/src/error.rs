use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("clause {0} has no literals")]
    EmptyClause(usize),

    #[error("column {col} is not unit norm (norm = {norm})")]
    NonUnitColumn { col: usize, norm: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-finite gradient at coordinate {index}: {value}")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("non-finite function value at coordinate {index}")]
    NonFiniteEvaluation { index: usize },

    #[error("problem too large for dense evaluation: {0}")]
    SizeLimit(String),

    #[error("unsupported weight file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt weight file: {0}")]
    CorruptFile(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] io::Error),
}
