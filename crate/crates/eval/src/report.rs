//! Experiment reports and their JSON, CSV, text-table and SVG renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How percentage metrics are normalized; written into every report.
pub const PERCENT_CONVENTION: &str = "100 * metric / mean(|actual|) over the test targets, physical units";

/// Metrics of one (variant, horizon) cell, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub variant: String,
    pub horizon: usize,
    /// Horizon in time steps of the frame.
    pub horizon_steps: usize,
    pub rmse: f64,
    pub rmse_pct: Option<f64>,
    pub mae: f64,
    pub mae_pct: Option<f64>,
    pub r2: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub parameter_count: usize,
    pub epochs: usize,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cadence: String,
    pub target: String,
    pub seed: u64,
    pub percent_convention: String,
    /// Input features per variant.
    pub features: BTreeMap<String, Vec<String>>,
    /// Sorted by (variant, horizon).
    pub cells: Vec<CellMetrics>,
}

#[derive(Serialize)]
struct NestedVariant<'a> {
    features: &'a [String],
    parameter_count: usize,
    horizons: BTreeMap<usize, &'a CellMetrics>,
}

#[derive(Serialize)]
struct Nested<'a> {
    cadence: &'a str,
    target: &'a str,
    seed: u64,
    percent_convention: &'a str,
    variants: BTreeMap<&'a str, NestedVariant<'a>>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

impl MetricsReport {
    pub fn new(cadence: &str, target: &str, seed: u64) -> Self {
        Self {
            cadence: cadence.to_string(),
            target: target.to_string(),
            seed,
            percent_convention: PERCENT_CONVENTION.to_string(),
            features: BTreeMap::new(),
            cells: Vec::new(),
        }
    }

    pub fn push(&mut self, features: &[String], cell: CellMetrics) {
        self.features.insert(cell.variant.clone(), features.to_vec());
        self.cells.push(cell);
        self.cells
            .sort_by(|a, b| a.variant.cmp(&b.variant).then(a.horizon.cmp(&b.horizon)));
    }

    pub fn variants(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.cells.iter().map(|c| c.variant.as_str()).collect();
        v.dedup();
        v
    }

    pub fn horizons(&self) -> Vec<usize> {
        let mut h: Vec<usize> = self.cells.iter().map(|c| c.horizon).collect();
        h.sort_unstable();
        h.dedup();
        h
    }

    pub fn cell(&self, variant: &str, horizon: usize) -> Option<&CellMetrics> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.horizon == horizon)
    }

    /// Nested `variant → horizon → metrics` JSON.
    pub fn to_json(&self) -> Result<String> {
        let mut variants = BTreeMap::new();
        for c in &self.cells {
            let entry = variants.entry(c.variant.as_str()).or_insert_with(|| NestedVariant {
                features: self.features.get(&c.variant).map_or(&[][..], Vec::as_slice),
                parameter_count: c.parameter_count,
                horizons: BTreeMap::new(),
            });
            entry.horizons.insert(c.horizon, c);
        }
        let nested = Nested {
            cadence: &self.cadence,
            target: &self.target,
            seed: self.seed,
            percent_convention: &self.percent_convention,
            variants,
        };
        let mut s = serde_json::to_string_pretty(&nested)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per (variant, horizon).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "variant",
            "horizon",
            "horizon_steps",
            "rmse",
            "rmse_pct",
            "mae",
            "mae_pct",
            "r2",
            "n_train",
            "n_test",
            "n_features",
            "parameter_count",
            "epochs",
            "best_epoch",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.variant.clone(),
                c.horizon.to_string(),
                c.horizon_steps.to_string(),
                format!("{:.10e}", c.rmse),
                c.rmse_pct.map_or_else(String::new, |v| format!("{v:.10e}")),
                format!("{:.10e}", c.mae),
                c.mae_pct.map_or_else(String::new, |v| format!("{v:.10e}")),
                format!("{:.10e}", c.r2),
                c.n_train.to_string(),
                c.n_test.to_string(),
                c.n_features.to_string(),
                c.parameter_count.to_string(),
                c.epochs.to_string(),
                c.best_epoch.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Markdown table: one block of rows per variant (RMSE, RMSE %, MAE,
    /// MAE %, R²), one column per horizon.
    pub fn to_table(&self) -> String {
        let horizons = self.horizons();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Error metrics for {} models (target: {}; percent = {})",
            self.cadence, self.target, self.percent_convention
        );
        out.push('\n');
        out.push_str("| Model | Metric |");
        for h in &horizons {
            let _ = write!(out, " h={h} |");
        }
        out.push('\n');
        out.push_str("|---|---|");
        for _ in &horizons {
            out.push_str("---|");
        }
        out.push('\n');
        type Getter = fn(&CellMetrics) -> String;
        let rows: [(&str, Getter); 5] = [
            ("RMSE", |c| format!("{:.4}", c.rmse)),
            ("RMSE (%)", |c| fmt_opt(c.rmse_pct, 2)),
            ("MAE", |c| format!("{:.4}", c.mae)),
            ("MAE (%)", |c| fmt_opt(c.mae_pct, 2)),
            ("R²", |c| format!("{:.4}", c.r2)),
        ];
        for v in self.variants() {
            for (name, get) in rows {
                let _ = write!(out, "| {v} | {name} |");
                for &h in &horizons {
                    let cell = self.cell(v, h).map_or_else(|| "-".to_string(), get);
                    let _ = write!(out, " {cell} |");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Line plot of R² against horizon, one line per variant.
    pub fn r2_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const M: f64 = 50.0;
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
        let horizons = self.horizons();
        let (hmin, hmax) = match (horizons.first(), horizons.last()) {
            (Some(&a), Some(&b)) => (a as f64, b.max(a + 1) as f64),
            _ => (1.0, 2.0),
        };
        let r2s = self.cells.iter().map(|c| c.r2).filter(|v| v.is_finite());
        let ymin = r2s.clone().fold(0.0f64, f64::min).max(-1.0).floor();
        let ymax = 1.0;
        let x = |h: f64| M + (h - hmin) / (hmax - hmin) * (W - 2.0 * M);
        let y = |r: f64| H - M - (r.clamp(ymin, ymax) - ymin) / (ymax - ymin) * (H - 2.0 * M);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">R² vs forecast horizon ({}, {})</text>"#,
            W / 2.0,
            self.cadence,
            self.target
        );
        let _ = writeln!(
            s,
            r#"<line x1="{M}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
            H - M,
            W - M,
            H - M
        );
        let _ = writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{:.1}" stroke="black"/>"#, H - M);
        for &h in &horizons {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{h}</text>"#,
                x(h as f64),
                H - M + 18.0
            );
        }
        let ticks = ((ymax - ymin) / 0.25).round() as usize;
        for k in 0..=ticks {
            let v = ymin + k as f64 * 0.25;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
                M - 6.0,
                y(v) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">horizon</text>"#,
            W / 2.0,
            H - 12.0
        );
        for (i, v) in self.variants().into_iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = self
                .cells
                .iter()
                .filter(|c| c.variant == v && c.r2.is_finite())
                .map(|c| format!("{:.1},{:.1}", x(c.horizon as f64), y(c.r2)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{v}</text>"#,
                W - M - 120.0,
                M + 16.0 * (i as f64 + 1.0)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    /// Write `<stem>.json`, `<stem>.csv`, `<stem>.md` and `<stem>_r2.svg` into `dir`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let files = [
            (format!("{stem}.json"), self.to_json()?),
            (format!("{stem}.csv"), self.to_csv()?),
            (format!("{stem}.md"), self.to_table()),
            (format!("{stem}_r2.svg"), self.r2_svg()),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(variant: &str, horizon: usize, r2: f64) -> CellMetrics {
        CellMetrics {
            variant: variant.into(),
            horizon,
            horizon_steps: horizon,
            rmse: 0.5,
            rmse_pct: Some(5.0),
            mae: 0.4,
            mae_pct: None,
            r2,
            n_train: 100,
            n_test: 20,
            n_features: 3,
            parameter_count: 10,
            epochs: 7,
            best_epoch: 4,
        }
    }

    fn report() -> MetricsReport {
        let mut r = MetricsReport::new("monthly", "y", 1);
        r.push(&["a".into(), "y".into()], cell("b", 2, 0.5));
        r.push(&["a".into(), "y".into()], cell("b", 1, 0.9));
        r.push(&["y".into()], cell("a", 1, 0.7));
        r
    }

    #[test]
    fn cells_sorted() {
        let r = report();
        let keys: Vec<_> = r.cells.iter().map(|c| (c.variant.as_str(), c.horizon)).collect();
        assert_eq!(keys, [("a", 1), ("b", 1), ("b", 2)]);
        assert_eq!(r.horizons(), [1, 2]);
        assert_eq!(r.variants(), ["a", "b"]);
    }

    #[test]
    fn exports_have_expected_shape() {
        let r = report();
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["variants"]["b"]["horizons"]["2"]["r2"], 0.5);
        assert!(json["variants"]["a"]["horizons"]["1"]["mae_pct"].is_null());
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 4);
        let table = r.to_table();
        assert_eq!(table.lines().filter(|l| l.starts_with("| b |")).count(), 5);
        assert!(table.contains("| a | R² | 0.7000 | - |"));
        let svg = r.r2_svg();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
