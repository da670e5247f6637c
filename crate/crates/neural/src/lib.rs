//! GRU → LSTM → dense forecaster trained with Adam on minibatch MSE.

pub mod adam;
pub mod cells;
pub mod checkpoint;
mod error;
pub mod network;
pub mod params;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use cells::{gru_step, lstm_step, sigmoid};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use error::{Error, Result};
pub use network::{DropoutMasks, ForecastModel, ForwardCache};
pub use params::{parameter_count, DenseParams, ForecastParams, GruParams, LstmParams, ModelConfig};
pub use train::{fit, fit_with_callback, EarlyStopping, History, TrainConfig};
