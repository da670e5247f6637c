use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed date {value:?} on line {line} (expected YYYY-MM-DD)")]
    MalformedDate { line: usize, value: String },

    #[error("malformed value {value:?} for variable {variable:?} on line {line}")]
    MalformedValue {
        line: usize,
        variable: String,
        value: String,
    },

    #[error("duplicate timestamp {date} on line {line}")]
    DuplicateTimestamp { line: usize, date: NaiveDate },

    #[error("timestamps out of order on line {line}: {date} follows {previous}")]
    Unordered {
        line: usize,
        date: NaiveDate,
        previous: NaiveDate,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("value {value} of variable {variable:?} at row {row} outside valid range [{lo}, {hi}]")]
    OutOfRange {
        variable: String,
        row: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("variable {0:?} has no observed values")]
    AllMissing(String),

    #[error("variable {0:?} has zero standard deviation")]
    ZeroStd(String),

    #[error("month {month} has no observed values for variable {variable:?}")]
    EmptyMonth { month: String, variable: String },

    #[error("operation requires {expected} cadence, frame is {found}")]
    Cadence {
        expected: &'static str,
        found: &'static str,
    },

    #[error("empty {0} partition")]
    EmptyPartition(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("insufficient rows: need at least {needed}, have {available}")]
    InsufficientRows { needed: usize, available: usize },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("unstable model: spectral radius {0:.6} >= 1")]
    Unstable(f64),

    #[error("contemporaneous links form a cycle")]
    CyclicContemporaneous,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
