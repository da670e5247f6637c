use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] causalcast_core::Error),

    #[error("insufficient samples: {available} usable rows for {required} regressors")]
    InsufficientSamples { required: usize, available: usize },

    #[error("rank-deficient design matrix (column {column} is linearly dependent)")]
    RankDeficient { column: usize },

    #[error("cause and effect are the same variable ({0})")]
    SameCauseEffect(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
