use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("kernel undefined: both vectors are empty")]
    BothEmpty,

    #[error("vector has no nonzero entries")]
    EmptyVector,

    #[error("{which} vector is not {norm}-normalized ({norm} = {value})")]
    NotNormalized {
        which: &'static str,
        norm: &'static str,
        value: f64,
    },

    #[error("invalid entry at index {index}: {reason}")]
    InvalidEntry { index: usize, reason: String },

    #[error("kernel ({row}, {col}): {source}")]
    Gram {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: negative weight {value} at feature index {index}")]
    NegativeWeight { line: usize, index: usize, value: f64 },

    #[error("bit budget must keep at least one bit when encoding")]
    ZeroBits,

    #[error("bit budget out of range: bi={bi}, bt={bt} (each must be at most 32)")]
    BitBudgetRange { bi: u32, bt: u32 },

    #[error("encoding dimension k * 2^(bi+bt) overflows (k={k}, bits={bits})")]
    EncodingTooLarge { k: usize, bits: u32 },

    #[error("sketches are not comparable: {0}")]
    IncompatibleSketches(String),

    #[error("encodings are not comparable: {0}")]
    IncompatibleEncodings(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("training data has a single class ({0}); at least two are required")]
    SingleClass(i64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for failures caused by numeric preconditions (normalization,
    /// out-of-range parameters) rather than malformed data.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NotNormalized { .. } | Error::OutOfRange(_) | Error::EncodingTooLarge { .. } => {
                true
            }
            Error::Gram { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
