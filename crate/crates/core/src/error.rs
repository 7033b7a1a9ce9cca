use thiserror::Error;

use crate::distributed::ProtocolError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("structure error on line {line}: {msg}")]
    Structure { line: usize, msg: String },

    #[error("invalid matrix: {0}")]
    Matrix(String),

    #[error("closed-form oracle refused: {n_cols} features exceeds cap of {cap}")]
    OracleCap { n_cols: usize, cap: usize },

    #[error("linear system is not positive definite")]
    Singular,

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
