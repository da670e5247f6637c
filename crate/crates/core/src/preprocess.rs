//! Imputation, z-score normalization, monthly aggregation and chronological splits.

use chrono::{Datelike, NaiveDate};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Cadence, TimeSeriesFrame};

/// Fill missing cells by linear interpolation between the nearest observed
/// neighbours; leading and trailing gaps take the nearest observed value.
pub fn impute_linear(frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
    let mut values = frame.values().to_owned();
    let mask = frame.mask();
    for (j, meta) in frame.variables().iter().enumerate() {
        let observed: Vec<usize> = (0..frame.n_rows()).filter(|&i| !mask[[i, j]]).collect();
        let (&first, &last) = match (observed.first(), observed.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::AllMissing(meta.name.clone())),
        };
        let mut col = values.column_mut(j);
        let head = col[first];
        for i in 0..first {
            col[i] = head;
        }
        let tail = col[last];
        for i in last + 1..col.len() {
            col[i] = tail;
        }
        for w in observed.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < 2 {
                continue;
            }
            let (xa, xb) = (col[a], col[b]);
            let span = (b - a) as f64;
            for k in a + 1..b {
                col[k] = xa + (xb - xa) * ((k - a) as f64 / span);
            }
        }
    }
    let (ts, cadence, vars, _, _) = frame.clone().into_parts();
    TimeSeriesFrame::from_values(ts, cadence, vars, values)
}

/// Per-variable z-score statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationParams {
    /// Fit mean and population standard deviation of every column.
    pub fn fit(frame: &TimeSeriesFrame) -> Result<Self> {
        let values = frame.complete_values()?;
        let n = values.nrows() as f64;
        let mut mean = Vec::with_capacity(frame.n_vars());
        let mut std = Vec::with_capacity(frame.n_vars());
        for (j, meta) in frame.variables().iter().enumerate() {
            let col = values.column(j);
            let mu = col.sum() / n;
            let var = col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
            let sd = var.sqrt();
            // Anything at rounding-noise level relative to the column scale is constant.
            let scale = mu.abs().max(1.0);
            if !(sd > 1e-12 * scale) {
                return Err(Error::ZeroStd(meta.name.clone()));
            }
            mean.push(mu);
            std.push(sd);
        }
        Ok(Self {
            names: frame.names().iter().map(|s| s.to_string()).collect(),
            mean,
            std,
        })
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Restrict to the named variables, in the given order.
    pub fn subset(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            std: idx.iter().map(|&i| self.std[i]).collect(),
        })
    }

    pub fn apply(&self, var: usize, x: f64) -> f64 {
        (x - self.mean[var]) / self.std[var]
    }

    pub fn invert(&self, var: usize, z: f64) -> f64 {
        z * self.std[var] + self.mean[var]
    }

    fn check_names(&self, frame: &TimeSeriesFrame) -> Result<()> {
        if frame.names() != self.names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::SchemaMismatch(format!(
                "normalization params cover {:?}, frame has {:?}",
                self.names,
                frame.names()
            )));
        }
        Ok(())
    }

    /// Map a normalized frame back to physical units.
    pub fn denormalize(&self, frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
        self.check_names(frame)?;
        let mut values = frame.complete_values()?.to_owned();
        for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|z| self.invert(j, z));
        }
        frame.with_complete_values(values)
    }
}

/// Z-score a fully observed frame.
///
/// With `params == None` the statistics are fitted on `frame` itself; otherwise
/// the given (training) statistics are applied.
pub fn normalize(
    frame: &TimeSeriesFrame,
    params: Option<&NormalizationParams>,
) -> Result<(TimeSeriesFrame, NormalizationParams)> {
    let params = match params {
        Some(p) => {
            p.check_names(frame)?;
            p.clone()
        }
        None => NormalizationParams::fit(frame)?,
    };
    let mut values: Array2<f64> = frame.complete_values()?.to_owned();
    for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
        col.mapv_inplace(|x| params.apply(j, x));
    }
    let out = frame.with_complete_values(values)?.without_ranges();
    Ok((out, params))
}

/// Average a daily frame into one row per calendar month.
///
/// Each monthly value is the mean of that month's observed daily values; the
/// row is stamped with the first day of the month.
pub fn aggregate_to_monthly(frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
    if frame.cadence() != Cadence::Daily {
        return Err(Error::Cadence {
            expected: "daily",
            found: frame.cadence().as_str(),
        });
    }
    let values = frame.values();
    let mask = frame.mask();
    let v = frame.n_vars();

    let mut months: Vec<NaiveDate> = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut sums = vec![0.0; v];
    let mut counts = vec![0usize; v];
    let mut flush = |month: NaiveDate, sums: &mut [f64], counts: &mut [usize]| -> Result<()> {
        for j in 0..v {
            if counts[j] == 0 {
                return Err(Error::EmptyMonth {
                    month: month.format("%Y-%m").to_string(),
                    variable: frame.variables()[j].name.clone(),
                });
            }
            rows.push(sums[j] / counts[j] as f64);
            sums[j] = 0.0;
            counts[j] = 0;
        }
        months.push(month);
        Ok(())
    };

    let month_of = |d: &NaiveDate| NaiveDate::from_ymd_opt(d.year(), d.month(), 1).unwrap();
    let mut current = month_of(&frame.timestamps()[0]);
    for (i, d) in frame.timestamps().iter().enumerate() {
        let m = month_of(d);
        if m != current {
            flush(current, &mut sums, &mut counts)?;
            current = m;
        }
        for j in 0..v {
            if !mask[[i, j]] {
                sums[j] += values[[i, j]];
                counts[j] += 1;
            }
        }
    }
    flush(current, &mut sums, &mut counts)?;

    let n = months.len();
    let values = Array2::from_shape_vec((n, v), rows).expect("row-major monthly buffer");
    TimeSeriesFrame::from_values(months, Cadence::Monthly, frame.variables().to_vec(), values)
}

/// Train / validation / test partition of a frame.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: TimeSeriesFrame,
    /// `None` when the validation fraction yields zero rows.
    pub val: Option<TimeSeriesFrame>,
    pub test: TimeSeriesFrame,
}

/// Chronological split.
///
/// Rows after `train_end` form the test set. Of the rows on or before it, the
/// last `floor(val_fraction * count)` are held out for validation and the rest
/// are training rows.
pub fn split_by_date(
    frame: &TimeSeriesFrame,
    train_end: NaiveDate,
    val_fraction: f64,
) -> Result<Split> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::InvalidArgument(format!(
            "val_fraction {val_fraction} outside [0, 1)"
        )));
    }
    let n = frame.n_rows();
    let fit_rows = frame.timestamps().partition_point(|d| *d <= train_end);
    // Guard against 0.1 * 80 style products landing just below an integer.
    let val_rows = (val_fraction * fit_rows as f64 + 1e-9).floor() as usize;
    let train_rows = fit_rows.saturating_sub(val_rows);
    if train_rows == 0 {
        return Err(Error::EmptyPartition("train"));
    }
    if fit_rows == n {
        return Err(Error::EmptyPartition("test"));
    }
    let val = if val_rows > 0 {
        Some(frame.slice_rows(train_rows, fit_rows)?)
    } else {
        None
    };
    Ok(Split {
        train: frame.slice_rows(0, train_rows)?,
        val,
        test: frame.slice_rows(fit_rows, n)?,
    })
}
