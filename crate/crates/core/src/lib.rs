//! Shared building blocks of the causal forecasting pipeline: multivariate
//! time-series frames and their preprocessing, supervised windowing, lagged
//! causal graphs, and synthetic structural causal models used as ground truth.

pub mod csv_io;
pub mod error;
pub mod frame;
pub mod graph;
pub mod preprocess;
pub mod synth;
pub mod windows;

pub use csv_io::{load_csv, read_csv, save_csv, to_csv_string, write_csv};
pub use error::{Error, Result};
pub use frame::{date_range, Cadence, TimeSeriesFrame, VariableMeta};
pub use graph::{CausalEdge, CausalGraph, Correction, LagSpan};
pub use preprocess::{
    aggregate_to_monthly, impute_linear, normalize, split_by_date, NormalizationParams, Split,
};
pub use synth::{generate, score_graph, EdgeMatch, GraphScore, Link, Mechanism, Nonlinearity, ScmSpec};
pub use windows::{make_windows, SupervisedWindows};
