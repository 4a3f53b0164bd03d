use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the command line to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Schema,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("k1 must be in 1..=31, got {0}")]
    InvalidK1(i64),
    #[error("k2 must be in 0..=15, got {0}")]
    InvalidK2(i64),
    #[error("empty watermark")]
    EmptyWatermark,
    #[error("watermark dimension mismatch: {width}x{height} needs {expected} bits, got {actual}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("watermark raster rows have unequal widths")]
    RaggedRaster,
    #[error("value {0} is not finite")]
    NonFinite(f64),
    #[error("value {value} at scale {scale} does not fit the scaled-integer range")]
    OutOfRange { value: f64, scale: u32 },
    #[error("per-bit sequences differ in length: watermark {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid mark configuration: {0}")]
    InvalidMarkConfig(String),
    #[error("configured column `{0}` is missing from the table")]
    MissingColumn(String),
    #[error("column `{column}` is not a {expected} column")]
    ColumnKind {
        column: String,
        expected: &'static str,
    },
    #[error("row {row}, column `{column}`: cannot parse {value:?} ({reason})")]
    InvalidCell {
        row: usize,
        column: String,
        value: String,
        reason: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("attack fraction {0} is out of range")]
    InvalidFraction(f64),
    #[error("empty selection")]
    EmptySelection,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed PBM: {0}")]
    Pbm(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidK1(_)
            | Error::InvalidK2(_)
            | Error::EmptyWatermark
            | Error::DimensionMismatch { .. }
            | Error::RaggedRaster
            | Error::NonFinite(_)
            | Error::OutOfRange { .. }
            | Error::LengthMismatch { .. }
            | Error::InvalidMarkConfig(_)
            | Error::InvalidFraction(_)
            | Error::EmptySelection
            | Error::Config(_) => ErrorClass::Config,
            Error::MissingColumn(_)
            | Error::ColumnKind { .. }
            | Error::InvalidCell { .. }
            | Error::Schema(_) => ErrorClass::Schema,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. }) => {
                ErrorClass::Schema
            }
            Error::Pbm(_) | Error::Io { .. } | Error::Csv(_) => ErrorClass::Io,
        }
    }
}
