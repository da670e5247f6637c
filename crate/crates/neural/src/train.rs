//! Minibatch training with early stopping.

use causalcast_core::SupervisedWindows;
use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::network::{DropoutMasks, ForecastModel};
use crate::params::ForecastParams;

/// RNG streams derived from one seed.
const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl ForecastModel {
    /// Glorot initialization from the seed's initialization stream.
    pub fn init_seeded(config: crate::ModelConfig, seed: u64) -> Result<Self> {
        Self::init(config, &mut stream(seed, INIT_STREAM))
    }

    /// Evaluation-mode predictions, one per sample.
    pub fn predict(&self, windows: &SupervisedWindows) -> Result<Array1<f64>> {
        if windows.lookback != self.config.lookback || windows.n_features() != self.config.n_features {
            return Err(Error::Shape(format!(
                "windows are {} × {}, model expects {} × {}",
                windows.lookback,
                windows.n_features(),
                self.config.lookback,
                self.config.n_features
            )));
        }
        self.predict_array(windows.inputs.view())
    }

    /// Mean squared error in evaluation mode.
    pub fn mse(&self, windows: &SupervisedWindows) -> Result<f64> {
        let pred = self.predict(windows)?;
        Ok(mean_sq(&pred, &windows.targets))
    }
}

fn mean_sq(pred: &Array1<f64>, target: &Array1<f64>) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(target).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / pred.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            max_epochs: 100,
            patience: 10,
            min_delta: 1e-5,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::Config("min_delta must be non-negative".into()));
        }
        self.adam.validate()
    }
}

/// Tracks the best validation loss; a non-improving epoch increments the wait
/// counter and training stops once it reaches `patience`.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    /// Record an epoch's loss. Returns `(improved, stop)`.
    pub fn update(&mut self, epoch: usize, loss: f64) -> (bool, bool) {
        if loss < self.best - self.min_delta {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            (true, false)
        } else {
            self.wait += 1;
            (false, self.wait >= self.patience)
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Evaluation-mode training MSE before the first update.
    pub initial_train_loss: f64,
    /// Mean minibatch loss per epoch (training mode).
    pub train_loss: Vec<f64>,
    /// Evaluation-mode validation MSE per epoch; empty without validation data.
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub parameter_count: usize,
}

impl History {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }
}

/// Train from `model`'s current parameters. Returns the trained model (best
/// validation epoch when `val` is non-empty, otherwise the last epoch).
pub fn fit(
    model: &ForecastModel,
    train: &SupervisedWindows,
    val: &SupervisedWindows,
    config: &TrainConfig,
) -> Result<(ForecastModel, History)> {
    fit_with_callback(model, train, val, config, |_, _, _| {})
}

/// [`fit`] with a per-epoch hook receiving `(epoch, train_loss, val_loss)`.
pub fn fit_with_callback<F: FnMut(usize, f64, Option<f64>)>(
    model: &ForecastModel,
    train: &SupervisedWindows,
    val: &SupervisedWindows,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(ForecastModel, History)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let mut model = model.clone();
    model.predict(train)?;
    if !val.is_empty() {
        model.predict(val)?;
    }
    let mc = model.config;
    let mut adam = AdamState::new(&mc, config.adam);
    let mut shuffle_rng = stream(config.seed, SHUFFLE_STREAM);
    let mut dropout_rng = stream(config.seed, DROPOUT_STREAM);
    let mut stopper = EarlyStopping::new(config.patience, config.min_delta);
    let mut best: Option<ForecastParams> = None;
    let mut history = History {
        initial_train_loss: model.mse(train)?,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
        parameter_count: model.parameter_count(),
    };

    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let x = train.inputs.select(Axis(0), idx);
            let y = train.targets.select(Axis(0), idx);
            let masks = (mc.dropout > 0.0).then(|| DropoutMasks::sample(&mc, idx.len(), &mut dropout_rng));
            let (pred, cache) = model.forward(x.view(), masks.as_ref())?;
            let err = &pred - &y;
            let loss = err.mapv(|e| e * e).sum();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            total += loss;
            let d_pred = err * (2.0 / idx.len() as f64);
            let grads = model.backward(&cache, d_pred.view())?;
            adam.step(&mut model.params, &grads)?;
        }
        let train_loss = total / n as f64;
        history.train_loss.push(train_loss);
        if val.is_empty() {
            history.best_epoch = epoch;
            on_epoch(epoch, train_loss, None);
            continue;
        }
        let val_loss = model.mse(val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        history.val_loss.push(val_loss);
        on_epoch(epoch, train_loss, Some(val_loss));
        let (improved, stop) = stopper.update(epoch, val_loss);
        if improved {
            best = Some(model.params.clone());
            history.best_epoch = epoch;
        }
        if stop {
            history.stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    if let Some(p) = best {
        model.params = p;
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stopping_patience_zero() {
        let mut s = EarlyStopping::new(0, 0.0);
        assert_eq!(s.update(1, 1.0), (true, false));
        assert_eq!(s.update(2, 1.5), (false, true));
        assert_eq!(s.best_epoch(), Some(1));
    }

    #[test]
    fn early_stopping_min_delta() {
        let mut s = EarlyStopping::new(2, 0.1);
        s.update(1, 1.0);
        assert_eq!(s.update(2, 0.95), (false, false));
        assert_eq!(s.update(3, 0.85), (true, false));
        assert_eq!(s.update(4, 0.9), (false, false));
        assert_eq!(s.update(5, 0.9), (false, true));
        assert_eq!(s.best_epoch(), Some(3));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { max_epochs: 0, ..Default::default() }.validate().is_err());
        TrainConfig::default().validate().unwrap();
    }
}
