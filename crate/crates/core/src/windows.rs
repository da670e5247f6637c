//! Sliding lookback windows turning a frame into supervised samples.

use ndarray::{s, Array1, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::frame::TimeSeriesFrame;

/// `S` samples of `lookback × features` inputs with one scalar target each.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedWindows {
    pub inputs: Array3<f64>,
    pub targets: Array1<f64>,
    pub features: Vec<String>,
    pub target: String,
    pub lookback: usize,
    pub horizon: usize,
}

impl SupervisedWindows {
    /// A sample set with no rows.
    pub fn empty(features: Vec<String>, target: String, lookback: usize, horizon: usize) -> Self {
        Self {
            inputs: Array3::zeros((0, lookback, features.len())),
            targets: Array1::zeros(0),
            features,
            target,
            lookback,
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.inputs.dim().2
    }

    pub fn window(&self, s: usize) -> ArrayView2<'_, f64> {
        self.inputs.index_axis(Axis(0), s)
    }

    /// The samples at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select(Axis(0), idx),
            targets: self.targets.select(Axis(0), idx),
            features: self.features.clone(),
            target: self.target.clone(),
            lookback: self.lookback,
            horizon: self.horizon,
        }
    }
}

/// Cut `frame` into samples: sample `s` reads rows `[s, s + lookback)` of the
/// feature columns and is labelled with row `s + lookback + horizon - 1` of the target.
pub fn make_windows(
    frame: &TimeSeriesFrame,
    features: &[&str],
    target: &str,
    lookback: usize,
    horizon: usize,
) -> Result<SupervisedWindows> {
    if lookback == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "lookback and horizon must be at least 1".into(),
        ));
    }
    if features.is_empty() {
        return Err(Error::InvalidArgument("empty feature list".into()));
    }
    let sub = frame.select(features)?;
    let t = frame.index_of(target)?;
    let n = frame.n_rows();
    let needed = lookback + horizon;
    if n < needed {
        return Err(Error::InsufficientRows {
            needed,
            available: n,
        });
    }
    let x = sub.complete_values()?;
    let all = frame.complete_values()?;
    let y = all.column(t);
    let count = n - lookback - horizon + 1;
    let mut inputs = Array3::zeros((count, lookback, features.len()));
    let mut targets = Array1::zeros(count);
    for s in 0..count {
        inputs
            .slice_mut(s![s, .., ..])
            .assign(&x.slice(s![s..s + lookback, ..]));
        targets[s] = y[s + lookback + horizon - 1];
    }
    Ok(SupervisedWindows {
        inputs,
        targets,
        features: features.iter().map(|s| s.to_string()).collect(),
        target: target.to_string(),
        lookback,
        horizon,
    })
}
