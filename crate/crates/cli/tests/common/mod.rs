#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causalcast_cli::schema::TABLE_ONE;
use causalcast_core::{generate, Link, ScmSpec};
use chrono::NaiveDate;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_causalcast")
}

pub fn causalcast(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file under `dir` with its bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if dir.exists() {
        walk(dir, dir, &mut out);
    }
    out
}

/// Daily CSV with the eleven Table-1 columns. Sea ice extent depends on lagged
/// surface pressure, longwave radiation, snowfall and salinity plus a seasonal
/// cycle; a few cells are blank.
pub fn write_table_one_daily(path: &Path, start: NaiveDate, days: usize, seed: u64) {
    let mut spec = ScmSpec::new(11, seed).with_burn_in(200);
    for j in 0..10 {
        spec = spec.with_mechanism(j, vec![Link::new(j, 1, 0.7)], 1.0);
    }
    spec = spec.with_mechanism(
        10,
        vec![
            Link::new(10, 1, 0.6),
            Link::new(0, 1, 0.3),
            Link::new(5, 1, -0.3),
            Link::new(7, 2, 0.25),
            Link::new(9, 1, 0.2),
        ],
        0.5,
    );
    let (frame, _) = generate(&spec, days).unwrap();
    let values = frame.values();
    let mut text = String::from("date");
    for (name, ..) in TABLE_ONE {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    let mut date = start;
    for t in 0..days {
        text.push_str(&date.format("%Y-%m-%d").to_string());
        let season = (2.0 * std::f64::consts::PI * t as f64 / 365.25).cos();
        for (j, &(_, _, lo, hi)) in TABLE_ONE.iter().enumerate() {
            text.push(',');
            if j == 3 && t % 97 == 50 {
                continue;
            }
            let mid = (lo + hi) / 2.0;
            let half = (hi - lo) / 2.0;
            let z = values[(t, j)] * 0.08 + if j == 10 || j == 3 { 0.4 * season } else { 0.0 };
            let v = (mid + half * z).clamp(lo + 1e-3 * half, hi - 1e-3 * half);
            text.push_str(&format!("{v:.6}"));
        }
        text.push('\n');
        date = date.succ_opt().unwrap();
    }
    std::fs::write(path, text).unwrap();
}

/// Small, fast pipeline configuration over `daily`.
pub fn write_small_config(path: &Path, daily: &Path, out: &Path) {
    let text = format!(
        r#"seed = 3
output_dir = "{out}"

[data]
daily = "{daily}"

[split]
train_end = "2013-12-31"
val_fraction = 0.1

[discovery]
tau_max = 3

[model]
lookback = 8
gru_units = 6
lstm_units = 6
dense_units = 4

[train]
max_epochs = 3
batch_size = 64
"#,
        out = out.display(),
        daily = daily.display()
    );
    std::fs::write(path, text).unwrap();
}
