//! Forecast metrics, multi-variant multi-horizon experiments, and report export.

mod error;
pub mod experiment;
pub mod metrics;
pub mod report;

pub use error::{Error, Result};
pub use experiment::{
    evaluate_cell, predict_test, prepare, run_experiment, train_cell, Architecture, ExperimentConfig, PreparedData,
    Variant,
};
pub use metrics::{mae, percent_of_scale, r_squared, rmse};
pub use report::{CellMetrics, MetricsReport, PERCENT_CONVENTION};
