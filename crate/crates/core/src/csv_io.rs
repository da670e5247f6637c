//! CSV reading and writing for [`TimeSeriesFrame`].
//!
//! Dialect: UTF-8, comma separated, first column `date` in `YYYY-MM-DD`, one
//! column per variable, empty cell for a missing value.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::frame::{Cadence, TimeSeriesFrame, VariableMeta};

const DATE_COLUMN: &str = "date";
const MISSING_SENTINELS: &[&str] = &["", "NA", "N/A", "NaN", "nan", "null", "NULL"];

/// Load a frame from `path`, checking the header against `schema`.
///
/// An empty schema accepts whatever variables the header names.
pub fn load_csv(path: impl AsRef<Path>, schema: &[VariableMeta]) -> Result<TimeSeriesFrame> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &[VariableMeta]) -> Result<TimeSeriesFrame> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut cols = header.iter();
    match cols.next() {
        Some(DATE_COLUMN) => {}
        other => {
            return Err(Error::SchemaMismatch(format!(
                "first column must be `{DATE_COLUMN}`, found {other:?}"
            )))
        }
    }
    let header_names: Vec<String> = cols.map(str::to_string).collect();
    if header_names.is_empty() {
        return Err(Error::SchemaMismatch("no variable columns".into()));
    }

    let variables: Vec<VariableMeta> = if schema.is_empty() {
        header_names.iter().map(VariableMeta::bare).collect()
    } else {
        schema.to_vec()
    };
    // Column of the file holding each frame variable.
    let mut source_col = Vec::with_capacity(variables.len());
    for var in &variables {
        let pos = header_names
            .iter()
            .position(|h| *h == var.name)
            .ok_or_else(|| {
                Error::SchemaMismatch(format!("column {:?} missing from header", var.name))
            })?;
        source_col.push(pos);
    }
    if let Some(extra) = header_names
        .iter()
        .find(|h| !variables.iter().any(|v| &v.name == *h))
    {
        return Err(Error::SchemaMismatch(format!(
            "column {extra:?} not in schema"
        )));
    }

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let raw_date = rec.get(0).unwrap_or_default();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
            Error::MalformedDate {
                line,
                value: raw_date.to_string(),
            }
        })?;
        if let Some(&prev) = dates.last() {
            if date == prev {
                return Err(Error::DuplicateTimestamp { line, date });
            }
            if date < prev {
                return Err(Error::Unordered {
                    line,
                    date,
                    previous: prev,
                });
            }
        }
        let mut row = Vec::with_capacity(variables.len());
        for (var, &col) in variables.iter().zip(&source_col) {
            let cell = rec.get(col + 1).unwrap_or_default();
            row.push(parse_cell(cell).map_err(|_| Error::MalformedValue {
                line,
                variable: var.name.clone(),
                value: cell.to_string(),
            })?);
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(Error::InvalidFrame("csv has no data rows".into()));
    }

    let cadence = Cadence::infer(&dates);
    regularize(dates, rows, cadence, variables)
}

fn parse_cell(cell: &str) -> std::result::Result<Option<f64>, ()> {
    if MISSING_SENTINELS.contains(&cell) {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Some(x)),
        _ => Err(()),
    }
}

/// Lay parsed rows onto a gap-free grid, inserting fully missing rows for skipped dates.
fn regularize(
    dates: Vec<NaiveDate>,
    rows: Vec<Vec<Option<f64>>>,
    cadence: Cadence,
    variables: Vec<VariableMeta>,
) -> Result<TimeSeriesFrame> {
    let v = variables.len();
    let last = *dates.last().expect("non-empty");
    let mut grid = Vec::with_capacity(dates.len());
    let mut d = dates[0];
    while d <= last {
        grid.push(d);
        d = cadence.next(d);
    }
    let mut values = Array2::from_elem((grid.len(), v), f64::NAN);
    let mut mask = Array2::from_elem((grid.len(), v), true);
    let mut g = 0;
    for (date, row) in dates.iter().zip(rows) {
        while g < grid.len() && grid[g] < *date {
            g += 1;
        }
        if g == grid.len() || grid[g] != *date {
            return Err(Error::InvalidFrame(format!(
                "timestamp {date} does not lie on the {cadence} grid"
            )));
        }
        for (j, cell) in row.into_iter().enumerate() {
            if let Some(x) = cell {
                values[[g, j]] = x;
                mask[[g, j]] = false;
            }
        }
    }
    TimeSeriesFrame::new(grid, cadence, variables, values, mask)
}

/// Write a frame in the same dialect [`read_csv`] accepts.
pub fn write_csv<W: Write>(frame: &TimeSeriesFrame, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![DATE_COLUMN.to_string()];
    header.extend(frame.names().iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let values = frame.values();
    let mask = frame.mask();
    for (i, date) in frame.timestamps().iter().enumerate() {
        let mut rec = Vec::with_capacity(frame.n_vars() + 1);
        rec.push(date.format("%Y-%m-%d").to_string());
        for j in 0..frame.n_vars() {
            if mask[[i, j]] {
                rec.push(String::new());
            } else {
                rec.push(format!("{}", values[[i, j]]));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(frame: &TimeSeriesFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(frame, std::io::BufWriter::new(file))
}

pub fn to_csv_string(frame: &TimeSeriesFrame) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(frame, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
