//! The multivariate time-series container shared by every stage of the pipeline.

use std::fmt;

use chrono::{Datelike, Months, NaiveDate};
use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling cadence of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Daily,
    Monthly,
}

impl Cadence {
    pub fn as_str(self) -> &'static str {
        match self {
            Cadence::Daily => "daily",
            Cadence::Monthly => "monthly",
        }
    }

    /// The timestamp that follows `date` at this cadence.
    pub fn next(self, date: NaiveDate) -> NaiveDate {
        match self {
            Cadence::Daily => date.succ_opt().expect("date overflow"),
            Cadence::Monthly => date
                .checked_add_months(Months::new(1))
                .expect("date overflow"),
        }
    }

    /// Infer the cadence of an increasing date sequence.
    ///
    /// A sequence is monthly when every date falls on the same day of the month
    /// and consecutive dates are at least 28 days apart; anything else is daily.
    pub fn infer(dates: &[NaiveDate]) -> Cadence {
        if dates.len() < 2 {
            return Cadence::Daily;
        }
        let day = dates[0].day();
        let same_day = dates.iter().all(|d| d.day() == day);
        let wide = dates
            .windows(2)
            .all(|w| (w[1] - w[0]).num_days() >= 28);
        if same_day && wide {
            Cadence::Monthly
        } else {
            Cadence::Daily
        }
    }
}

impl fmt::Display for Cadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Name, unit and optional physical range of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub valid_range: Option<(f64, f64)>,
}

impl VariableMeta {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            valid_range: None,
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.valid_range = Some((lo, hi));
        self
    }

    /// A variable with no unit and no range, used when a CSV header is the only schema.
    pub fn bare(name: impl Into<String>) -> Self {
        Self::new(name, "")
    }
}

/// Timestamped multivariate series: rows are time points, columns are variables.
///
/// Missing cells hold `NaN` in `values` and `true` in the mask. Frames are
/// immutable; every transform returns a new frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    timestamps: Vec<NaiveDate>,
    cadence: Cadence,
    variables: Vec<VariableMeta>,
    values: Array2<f64>,
    mask: Array2<bool>,
}

impl TimeSeriesFrame {
    /// Build a frame, checking every structural invariant.
    ///
    /// Cells flagged in `mask` are overwritten with `NaN`. Non-missing cells must be
    /// finite and inside the variable's valid range when one is declared.
    pub fn new(
        timestamps: Vec<NaiveDate>,
        cadence: Cadence,
        variables: Vec<VariableMeta>,
        mut values: Array2<f64>,
        mask: Array2<bool>,
    ) -> Result<Self> {
        let (n, v) = values.dim();
        if n == 0 || v == 0 {
            return Err(Error::InvalidFrame(format!(
                "frame must have at least one row and one column, got {n}x{v}"
            )));
        }
        if timestamps.len() != n {
            return Err(Error::InvalidFrame(format!(
                "{} timestamps for {n} rows",
                timestamps.len()
            )));
        }
        if variables.len() != v {
            return Err(Error::InvalidFrame(format!(
                "{} variables for {v} columns",
                variables.len()
            )));
        }
        if mask.dim() != (n, v) {
            return Err(Error::InvalidFrame("mask shape differs from values".into()));
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Unordered {
                    line: i + 1,
                    date: w[1],
                    previous: w[0],
                });
            }
        }
        for (i, a) in variables.iter().enumerate() {
            if variables[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidFrame(format!(
                    "duplicate variable name {:?}",
                    a.name
                )));
            }
        }
        for ((row, col), x) in values.indexed_iter_mut() {
            if mask[[row, col]] {
                *x = f64::NAN;
                continue;
            }
            let meta = &variables[col];
            if !x.is_finite() {
                return Err(Error::MalformedValue {
                    line: row,
                    variable: meta.name.clone(),
                    value: x.to_string(),
                });
            }
            if let Some((lo, hi)) = meta.valid_range {
                if *x < lo || *x > hi {
                    return Err(Error::OutOfRange {
                        variable: meta.name.clone(),
                        row,
                        value: *x,
                        lo,
                        hi,
                    });
                }
            }
        }
        Ok(Self {
            timestamps,
            cadence,
            variables,
            values,
            mask,
        })
    }

    /// A fully observed frame.
    pub fn from_values(
        timestamps: Vec<NaiveDate>,
        cadence: Cadence,
        variables: Vec<VariableMeta>,
        values: Array2<f64>,
    ) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), false);
        Self::new(timestamps, cadence, variables, values, mask)
    }

    /// A fully observed frame with synthetic consecutive timestamps starting at `start`.
    pub fn from_matrix(
        names: &[&str],
        values: Array2<f64>,
        start: NaiveDate,
        cadence: Cadence,
    ) -> Result<Self> {
        let timestamps = date_range(start, cadence, values.nrows());
        let variables = names.iter().map(|n| VariableMeta::bare(*n)).collect();
        Self::from_values(timestamps, cadence, variables, values)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn cadence(&self) -> Cadence {
        self.cadence
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn mask(&self) -> ArrayView2<'_, bool> {
        self.mask.view()
    }

    pub fn column(&self, index: usize) -> ArrayView1<'_, f64> {
        self.values.column(index)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn has_missing(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// The value matrix of a fully observed frame.
    pub fn complete_values(&self) -> Result<ArrayView2<'_, f64>> {
        if self.has_missing() {
            return Err(Error::InvalidFrame(
                "frame has missing values; impute first".into(),
            ));
        }
        Ok(self.values.view())
    }

    /// Rows `[start, end)` as a new frame.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "row range {start}..{end} invalid for {} rows",
                self.n_rows()
            )));
        }
        Ok(Self {
            timestamps: self.timestamps[start..end].to_vec(),
            cadence: self.cadence,
            variables: self.variables.clone(),
            values: self.values.slice(s![start..end, ..]).to_owned(),
            mask: self.mask.slice(s![start..end, ..]).to_owned(),
        })
    }

    /// The named columns, in the order given.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            timestamps: self.timestamps.clone(),
            cadence: self.cadence,
            variables: idx.iter().map(|&i| self.variables[i].clone()).collect(),
            values: self.values.select(Axis(1), &idx),
            mask: self.mask.select(Axis(1), &idx),
        })
    }

    /// Same timestamps and variables with a replacement value matrix and no missing cells.
    ///
    /// Range checks are skipped: the replacement is typically a transformed
    /// (e.g. normalized) version of the original data.
    pub fn with_complete_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::InvalidFrame("replacement values change shape".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFrame("replacement values not finite".into()));
        }
        Ok(Self {
            timestamps: self.timestamps.clone(),
            cadence: self.cadence,
            variables: self.variables.clone(),
            mask: Array2::from_elem(values.dim(), false),
            values,
        })
    }

    /// Drop the valid ranges of every variable (used once values leave physical units).
    pub fn without_ranges(mut self) -> Self {
        for v in &mut self.variables {
            v.valid_range = None;
        }
        self
    }

    pub(crate) fn into_parts(
        self,
    ) -> (Vec<NaiveDate>, Cadence, Vec<VariableMeta>, Array2<f64>, Array2<bool>) {
        (
            self.timestamps,
            self.cadence,
            self.variables,
            self.values,
            self.mask,
        )
    }
}

/// `n` consecutive timestamps at the given cadence.
pub fn date_range(start: NaiveDate, cadence: Cadence, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    for _ in 0..n {
        out.push(d);
        d = cadence.next(d);
    }
    out
}
