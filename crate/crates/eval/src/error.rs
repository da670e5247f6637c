use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] causalcast_core::Error),

    #[error(transparent)]
    Neural(#[from] causalcast_neural::Error),

    #[error("length mismatch: {actual} actual values, {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },

    #[error("empty input")]
    Empty,

    #[error("R² needs at least 2 values, got {0}")]
    TooShort(usize),

    #[error("actual values are constant; R² is undefined")]
    ConstantActuals,

    #[error("invalid experiment: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
