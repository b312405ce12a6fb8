use thiserror::Error;

/// Crate-wide error type. Variant names double as stable error codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("NonFiniteInput: coordinate {index} is not finite")]
    NonFiniteInput { index: usize },

    #[error("EmptyDimension: s and d must both be at least 1")]
    EmptyDimension,

    #[error("BadParameter: {0}")]
    BadParameter(String),

    #[error("BadValue: {0}")]
    BadValue(String),

    #[error("RoleAlreadyFixed: node {id} already has a fixed role")]
    RoleAlreadyFixed { id: usize },

    #[error("OracleTooLarge: {sellers} sellers x {buyers} buyers exceeds the brute-force guard of {limit}x{limit}")]
    OracleTooLarge {
        sellers: usize,
        buyers: usize,
        limit: usize,
    },

    #[error("ParseError(line {line}, column {column})")]
    Parse { line: usize, column: usize },

    #[error("RaggedRows: line {line} has {got} columns, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("EmptyFile: no data rows")]
    EmptyFile,

    #[error("EmptyInput: at least one record required")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
