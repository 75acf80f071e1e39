use std::io;

use thiserror::Error;

/// Errors raised by dataset handling, feature scoring, model fitting and the
/// benchmark grid.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("input is empty")]
    EmptyFile,

    #[error("no column named `{0}` in header")]
    MissingLabelColumn(String),

    #[error("non-numeric or non-finite cell at data row {row}, column `{column}`")]
    NonNumericCell { row: usize, column: String },

    #[error("label at data row {row} is not 0 or 1")]
    NonBinaryLabel { row: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("split would leave the {0} partition empty")]
    DegenerateSplit(&'static str),

    #[error("dataset contains a single class")]
    SingleClassDataset,

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("too few samples: need at least {needed}, have {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("k = {k} exceeds the number of features ({d})")]
    KTooLarge { k: usize, d: usize },

    #[error("expected {expected} feature columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    Empty,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("report does not cover the full method x classifier grid")]
    IncompleteGrid,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            other => Error::Csv(format!("{other:?}")),
        }
    }
}
