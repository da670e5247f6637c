//! Split, window, train and score one model per (variant, horizon).

use causalcast_core::{make_windows, normalize, split_by_date, NormalizationParams, SupervisedWindows, TimeSeriesFrame};
use causalcast_neural::{fit, Checkpoint, ForecastModel, History, ModelConfig, TrainConfig};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mae, percent_of_scale, r_squared, rmse};
use crate::report::{CellMetrics, MetricsReport};

/// A named input feature set. The target's own history is an input only when
/// it is listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub features: Vec<String>,
}

impl Variant {
    pub fn new(name: impl Into<String>, features: &[&str]) -> Self {
        Self {
            name: name.into(),
            features: features.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Layer sizes; the feature count comes from the variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub lookback: usize,
    pub gru_units: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub dropout: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        let p = ModelConfig::paper(1);
        Self {
            lookback: p.lookback,
            gru_units: p.gru_units,
            lstm_units: p.lstm_units,
            dense_units: p.dense_units,
            dropout: p.dropout,
        }
    }
}

impl Architecture {
    pub fn model_config(&self, n_features: usize) -> ModelConfig {
        ModelConfig {
            n_features,
            lookback: self.lookback,
            gru_units: self.gru_units,
            lstm_units: self.lstm_units,
            dense_units: self.dense_units,
            dropout: self.dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: String,
    /// Last date of the fitting period; later rows are test rows.
    pub train_end: NaiveDate,
    /// Trailing share of the fitting period held out for early stopping.
    pub val_fraction: f64,
    pub horizons: Vec<usize>,
    /// Frame rows per horizon unit (1 for monthly data, e.g. 30 for daily rows
    /// with horizons counted in months).
    pub steps_per_horizon: usize,
    pub architecture: Architecture,
    pub train: TrainConfig,
}

/// Normalized partitions with the training-set statistics.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: TimeSeriesFrame,
    pub val: Option<TimeSeriesFrame>,
    pub test: TimeSeriesFrame,
    pub normalization: NormalizationParams,
    pub target: String,
}

/// Split chronologically and z-score every partition with statistics of the
/// training rows only.
pub fn prepare(frame: &TimeSeriesFrame, target: &str, train_end: NaiveDate, val_fraction: f64) -> Result<PreparedData> {
    frame.index_of(target)?;
    let split = split_by_date(frame, train_end, val_fraction)?;
    let (train, params) = normalize(&split.train, None)?;
    let val = split
        .val
        .as_ref()
        .map(|v| normalize(v, Some(&params)).map(|(f, _)| f))
        .transpose()?;
    let (test, _) = normalize(&split.test, Some(&params))?;
    Ok(PreparedData {
        train,
        val,
        test,
        normalization: params,
        target: target.to_string(),
    })
}

fn check_variant(data: &PreparedData, variant: &Variant) -> Result<()> {
    if variant.features.is_empty() {
        return Err(Error::Config(format!("variant {:?} has no features", variant.name)));
    }
    for (i, f) in variant.features.iter().enumerate() {
        if variant.features[..i].contains(f) {
            return Err(Error::Config(format!("variant {:?} lists {f:?} twice", variant.name)));
        }
        data.train.index_of(f)?;
    }
    Ok(())
}

impl PreparedData {
    fn windows(&self, frame: &TimeSeriesFrame, features: &[String], lookback: usize, steps: usize) -> Result<SupervisedWindows> {
        let refs: Vec<&str> = features.iter().map(String::as_str).collect();
        Ok(make_windows(frame, &refs, &self.target, lookback, steps)?)
    }

    pub fn train_windows(&self, features: &[String], lookback: usize, steps: usize) -> Result<SupervisedWindows> {
        self.windows(&self.train, features, lookback, steps)
    }

    /// Empty when there is no validation partition or it is too short.
    pub fn val_windows(&self, features: &[String], lookback: usize, steps: usize) -> Result<SupervisedWindows> {
        match &self.val {
            Some(v) if v.n_rows() >= lookback + steps => self.windows(v, features, lookback, steps),
            _ => Ok(SupervisedWindows::empty(features.to_vec(), self.target.clone(), lookback, steps)),
        }
    }

    pub fn test_windows(&self, features: &[String], lookback: usize, steps: usize) -> Result<SupervisedWindows> {
        self.windows(&self.test, features, lookback, steps)
    }

    /// Map normalized target values back to physical units.
    pub fn denormalize_target(&self, z: &[f64]) -> Result<Vec<f64>> {
        let t = self.normalization.index_of(&self.target)?;
        Ok(z.iter().map(|&v| self.normalization.invert(t, v)).collect())
    }
}

/// Train one model for `variant` at `horizon_steps` rows ahead.
pub fn train_cell(
    data: &PreparedData,
    variant: &Variant,
    horizon_steps: usize,
    architecture: &Architecture,
    config: &TrainConfig,
) -> Result<(Checkpoint, History)> {
    check_variant(data, variant)?;
    let l = architecture.lookback;
    let train = data.train_windows(&variant.features, l, horizon_steps)?;
    let val = data.val_windows(&variant.features, l, horizon_steps)?;
    let model = ForecastModel::init_seeded(architecture.model_config(variant.features.len()), config.seed)?;
    let (model, history) = fit(&model, &train, &val, config)?;
    // Input statistics followed by the target's, so forecasts can be mapped
    // back to physical units.
    let mut refs: Vec<&str> = variant.features.iter().map(String::as_str).collect();
    if !variant.features.contains(&data.target) {
        refs.push(&data.target);
    }
    let norm = data.normalization.subset(&refs)?;
    let checkpoint = Checkpoint::new(model, variant.features.clone(), data.target.clone(), horizon_steps, Some(norm));
    Ok((checkpoint, history))
}

/// Test-set actuals and predictions in physical units.
pub fn predict_test(data: &PreparedData, checkpoint: &Checkpoint) -> Result<(Vec<f64>, Vec<f64>)> {
    if checkpoint.target != data.target {
        return Err(Error::Config(format!(
            "checkpoint forecasts {:?}, experiment target is {:?}",
            checkpoint.target, data.target
        )));
    }
    let test = data.test_windows(&checkpoint.features, checkpoint.lookback, checkpoint.horizon)?;
    let pred = checkpoint.model.predict(&test)?;
    let actual = data.denormalize_target(test.targets.as_slice().expect("contiguous targets"))?;
    let pred = data.denormalize_target(pred.as_slice().expect("contiguous predictions"))?;
    Ok((actual, pred))
}

/// Score a trained cell on the test partition.
pub fn evaluate_cell(
    data: &PreparedData,
    variant: &str,
    horizon: usize,
    checkpoint: &Checkpoint,
    history: &History,
) -> Result<CellMetrics> {
    let (actual, pred) = predict_test(data, checkpoint)?;
    let e_rmse = rmse(&actual, &pred)?;
    let e_mae = mae(&actual, &pred)?;
    Ok(CellMetrics {
        variant: variant.to_string(),
        horizon,
        horizon_steps: checkpoint.horizon,
        rmse: e_rmse,
        rmse_pct: percent_of_scale(e_rmse, &actual),
        mae: e_mae,
        mae_pct: percent_of_scale(e_mae, &actual),
        r2: r_squared(&actual, &pred)?,
        n_train: data.train.n_rows(),
        n_test: actual.len(),
        n_features: checkpoint.features.len(),
        parameter_count: checkpoint.model.parameter_count(),
        epochs: history.epochs(),
        best_epoch: history.best_epoch,
    })
}

/// Every variant at every horizon, trained and scored in a fixed order.
pub fn run_experiment(frame: &TimeSeriesFrame, variants: &[Variant], config: &ExperimentConfig) -> Result<MetricsReport> {
    if variants.is_empty() || config.horizons.is_empty() {
        return Err(Error::Config("need at least one variant and one horizon".into()));
    }
    if config.steps_per_horizon == 0 || config.horizons.contains(&0) {
        return Err(Error::Config("horizons and steps per horizon must be positive".into()));
    }
    let data = prepare(frame, &config.target, config.train_end, config.val_fraction)?;
    for v in variants {
        check_variant(&data, v)?;
    }
    let mut report = MetricsReport::new(frame.cadence().as_str(), &config.target, config.train.seed);
    for v in variants {
        for &h in &config.horizons {
            let steps = h * config.steps_per_horizon;
            let (checkpoint, history) = train_cell(&data, v, steps, &config.architecture, &config.train)?;
            let cell = evaluate_cell(&data, &v.name, h, &checkpoint, &history)?;
            report.push(&v.features, cell);
        }
    }
    Ok(report)
}
