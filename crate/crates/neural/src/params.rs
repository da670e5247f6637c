//! Layer parameters of the GRU → LSTM → dense → output stack.
//!
//! Weight matrices are stored input-major (`in × out`) so a batch of rows
//! multiplies on the left. Gate blocks are concatenated along the output axis:
//! GRU `[update z | reset r | candidate h̃]`, LSTM `[input i | forget f | cell g | output o]`.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer sizes and dropout rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_features: usize,
    pub lookback: usize,
    pub gru_units: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub dropout: f64,
}

impl ModelConfig {
    /// 64-unit GRU, 128-unit LSTM, 64-unit dense layer, dropout 0.2, lookback 21.
    pub fn paper(n_features: usize) -> Self {
        Self {
            n_features,
            lookback: 21,
            gru_units: 64,
            lstm_units: 128,
            dense_units: 64,
            dropout: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("n_features", self.n_features),
            ("lookback", self.lookback),
            ("gru_units", self.gru_units),
            ("lstm_units", self.lstm_units),
            ("dense_units", self.dense_units),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Total number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        let (d, g, l, e) = (
            self.n_features,
            self.gru_units,
            self.lstm_units,
            self.dense_units,
        );
        3 * (g * d + g * g + 2 * g) + 4 * (l * g + l * l + l) + (e * l + e) + (e + 1)
    }
}

/// Parameter count of the default architecture for `n_features` inputs.
pub fn parameter_count(n_features: usize) -> usize {
    ModelConfig::paper(n_features).parameter_count()
}

/// GRU weights. Both bias vectors enter every gate pre-activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    /// `D × 3H`
    pub kernel: Array2<f64>,
    /// `H × 3H`
    pub recurrent: Array2<f64>,
    pub bias: Array1<f64>,
    pub recurrent_bias: Array1<f64>,
}

/// LSTM weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// `D' × 4H`
    pub kernel: Array2<f64>,
    /// `H × 4H`
    pub recurrent: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Fully connected layer `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Every trainable tensor of the network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastParams {
    pub gru: GruParams,
    pub lstm: LstmParams,
    pub dense: DenseParams,
    pub output: DenseParams,
}

fn glorot<R: Rng>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

/// Glorot-uniform per gate block (fan-out is the unit count of one gate).
fn glorot_gates<R: Rng>(rows: usize, units: usize, gates: usize, rng: &mut R) -> Array2<f64> {
    let mut w = Array2::zeros((rows, units * gates));
    for k in 0..gates {
        let block = glorot(rows, units, rows, units, rng);
        w.slice_mut(ndarray::s![.., k * units..(k + 1) * units])
            .assign(&block);
    }
    w
}

impl ForecastParams {
    /// All-zero parameters.
    pub fn zeros(c: &ModelConfig) -> Self {
        let (d, g, l, e) = (c.n_features, c.gru_units, c.lstm_units, c.dense_units);
        Self {
            gru: GruParams {
                kernel: Array2::zeros((d, 3 * g)),
                recurrent: Array2::zeros((g, 3 * g)),
                bias: Array1::zeros(3 * g),
                recurrent_bias: Array1::zeros(3 * g),
            },
            lstm: LstmParams {
                kernel: Array2::zeros((g, 4 * l)),
                recurrent: Array2::zeros((l, 4 * l)),
                bias: Array1::zeros(4 * l),
            },
            dense: DenseParams {
                weights: Array2::zeros((l, e)),
                bias: Array1::zeros(e),
            },
            output: DenseParams {
                weights: Array2::zeros((e, 1)),
                bias: Array1::zeros(1),
            },
        }
    }

    /// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
    pub fn init<R: Rng>(c: &ModelConfig, rng: &mut R) -> Self {
        let (d, g, l, e) = (c.n_features, c.gru_units, c.lstm_units, c.dense_units);
        let mut p = Self::zeros(c);
        p.gru.kernel = glorot_gates(d, g, 3, rng);
        p.gru.recurrent = glorot_gates(g, g, 3, rng);
        p.lstm.kernel = glorot_gates(g, l, 4, rng);
        p.lstm.recurrent = glorot_gates(l, l, 4, rng);
        p.lstm.bias.slice_mut(ndarray::s![l..2 * l]).fill(1.0);
        p.dense.weights = glorot(l, e, l, e, rng);
        p.output.weights = glorot(e, 1, e, 1, rng);
        p
    }

    /// Sizes implied by the stored tensors.
    pub fn config_shape(&self) -> (usize, usize, usize, usize) {
        (
            self.gru.kernel.nrows(),
            self.gru.recurrent.nrows(),
            self.lstm.recurrent.nrows(),
            self.dense.weights.ncols(),
        )
    }

    /// Check every tensor against `c`.
    pub fn check(&self, c: &ModelConfig) -> Result<()> {
        let want = Self::zeros(c);
        for (i, (a, b)) in self.slices().iter().zip(want.slices()).enumerate() {
            if a.len() != b.len() {
                return Err(Error::Shape(format!(
                    "parameter tensor {i} has {} entries, expected {}",
                    a.len(),
                    b.len()
                )));
            }
        }
        if self.gru.kernel.dim() != want.gru.kernel.dim()
            || self.gru.recurrent.dim() != want.gru.recurrent.dim()
            || self.lstm.kernel.dim() != want.lstm.kernel.dim()
            || self.lstm.recurrent.dim() != want.lstm.recurrent.dim()
            || self.dense.weights.dim() != want.dense.weights.dim()
            || self.output.weights.dim() != want.output.weights.dim()
        {
            return Err(Error::Shape("parameter shapes do not match the model configuration".into()));
        }
        Ok(())
    }

    /// Tensors in a fixed order, as flat row-major slices.
    pub fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.gru.kernel.as_slice().expect("standard layout"),
            self.gru.recurrent.as_slice().expect("standard layout"),
            self.gru.bias.as_slice().expect("standard layout"),
            self.gru.recurrent_bias.as_slice().expect("standard layout"),
            self.lstm.kernel.as_slice().expect("standard layout"),
            self.lstm.recurrent.as_slice().expect("standard layout"),
            self.lstm.bias.as_slice().expect("standard layout"),
            self.dense.weights.as_slice().expect("standard layout"),
            self.dense.bias.as_slice().expect("standard layout"),
            self.output.weights.as_slice().expect("standard layout"),
            self.output.bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.gru.kernel.as_slice_mut().expect("standard layout"),
            self.gru.recurrent.as_slice_mut().expect("standard layout"),
            self.gru.bias.as_slice_mut().expect("standard layout"),
            self.gru.recurrent_bias.as_slice_mut().expect("standard layout"),
            self.lstm.kernel.as_slice_mut().expect("standard layout"),
            self.lstm.recurrent.as_slice_mut().expect("standard layout"),
            self.lstm.bias.as_slice_mut().expect("standard layout"),
            self.dense.weights.as_slice_mut().expect("standard layout"),
            self.dense.bias.as_slice_mut().expect("standard layout"),
            self.output.weights.as_slice_mut().expect("standard layout"),
            self.output.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Force row-major storage (matrix products may return column-major results).
    pub(crate) fn make_standard(&mut self) {
        for a in [
            &mut self.gru.kernel,
            &mut self.gru.recurrent,
            &mut self.lstm.kernel,
            &mut self.lstm.recurrent,
            &mut self.dense.weights,
            &mut self.output.weights,
        ] {
            if !a.is_standard_layout() {
                *a = a.as_standard_layout().into_owned();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Names matching [`slices`](Self::slices), for diagnostics and checkpoints.
    pub const TENSOR_NAMES: [&'static str; 11] = [
        "gru.kernel",
        "gru.recurrent",
        "gru.bias",
        "gru.recurrent_bias",
        "lstm.kernel",
        "lstm.recurrent",
        "lstm.bias",
        "dense.weights",
        "dense.bias",
        "output.weights",
        "output.bias",
    ];
}
