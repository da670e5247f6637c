//! Subcommand implementations. Every command reads and writes files under the
//! output directory only, so reruns with the same inputs are byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use causalcast_core::{
    aggregate_to_monthly, generate, impute_linear, load_csv, normalize, split_by_date, to_csv_string, Cadence,
    CausalGraph, NormalizationParams, TimeSeriesFrame,
};
use causalcast_discovery::{feature_select, mvgc_graph, pcmciplus_run};
use causalcast_eval::{evaluate_cell, prepare, train_cell, MetricsReport, Variant};
use causalcast_neural::{Checkpoint, History};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::{FeatureSource, Method, PipelineConfig, SchemaChoice, VariantConfig};
use crate::error::{CliError, Result};
use crate::schema::table_one;

/// The date `steps` rows after `date`.
fn next_dates(cadence: Cadence, date: NaiveDate, steps: usize) -> NaiveDate {
    (0..steps).fold(date, |d, _| cadence.next(d))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub struct Paths {
    root: PathBuf,
}

impl Paths {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn frame(&self, cadence: Cadence) -> PathBuf {
        self.root.join("preprocessed").join(format!("{cadence}.csv"))
    }

    fn normalized(&self, cadence: Cadence) -> PathBuf {
        self.root.join("preprocessed").join(format!("{cadence}_normalized.csv"))
    }

    fn normalization(&self, cadence: Cadence) -> PathBuf {
        self.root.join("preprocessed").join(format!("{cadence}_normalization.json"))
    }

    pub fn edges(&self, cadence: Cadence, method: Method) -> PathBuf {
        self.root.join("discovery").join(format!("{cadence}_{}.edges", method.slug()))
    }

    pub fn features(&self, cadence: Cadence, method: Method) -> PathBuf {
        self.root.join("discovery").join(format!("{cadence}_{}_features.json", method.slug()))
    }

    pub fn checkpoint(&self, variant: &str, horizon: usize) -> PathBuf {
        self.root.join("models").join(variant).join(format!("h{horizon}.json"))
    }

    fn history(&self, variant: &str, horizon: usize) -> PathBuf {
        self.root.join("models").join(variant).join(format!("h{horizon}_history.json"))
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    fn forecast(&self, variant: &str) -> PathBuf {
        self.root.join("forecasts").join(format!("{variant}.csv"))
    }

    fn synth(&self) -> PathBuf {
        self.root.join("synth")
    }
}

/// Selected features written by `discover`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFile {
    pub method: Method,
    pub cadence: Cadence,
    pub target: String,
    pub features: Vec<String>,
}

fn load_input(path: &Path, schema: SchemaChoice) -> Result<TimeSeriesFrame> {
    if !path.exists() {
        return Err(CliError::data(format!("input file {} does not exist", path.display())));
    }
    let schema = match schema {
        SchemaChoice::Table1 => table_one(),
        SchemaChoice::Header => Vec::new(),
    };
    load_csv(path, &schema).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_stage(paths: &Paths, cadence: Cadence) -> Result<TimeSeriesFrame> {
    let path = paths.frame(cadence);
    if !path.exists() {
        return Err(CliError::data(format!(
            "{} not found; run `preprocess` first",
            path.display()
        )));
    }
    load_csv(&path, &[]).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn summary(cadence: Cadence, f: &TimeSeriesFrame, imputed: usize) -> String {
    let ts = f.timestamps();
    format!(
        "{cadence}: {} rows x {} variables, {} to {}, {imputed} missing values imputed",
        f.n_rows(),
        f.n_vars(),
        ts[0],
        ts[ts.len() - 1]
    )
}

pub fn preprocess(config: &PipelineConfig, paths: &Paths) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut frames: Vec<(Cadence, TimeSeriesFrame, usize)> = Vec::new();
    let daily = match &config.data.daily {
        Some(p) => {
            let raw = load_input(p, config.data.schema)?;
            let missing = raw.missing_count();
            Some((impute_linear(&raw)?, missing))
        }
        None => None,
    };
    let monthly = match (&config.data.monthly, &daily) {
        (Some(p), _) => {
            let raw = load_input(p, config.data.schema)?;
            let missing = raw.missing_count();
            Some((impute_linear(&raw)?, missing))
        }
        (None, Some((d, _))) => Some((aggregate_to_monthly(d)?, 0)),
        (None, None) => None,
    };
    if let Some((f, m)) = daily {
        frames.push((Cadence::Daily, f, m));
    }
    if let Some((f, m)) = monthly {
        frames.push((Cadence::Monthly, f, m));
    }
    if frames.is_empty() {
        return Err(CliError::config("no input data configured (data.daily / data.monthly)"));
    }
    for (cadence, frame, imputed) in frames {
        frame.index_of(&config.target)?;
        let split = split_by_date(&frame, config.split.train_end, config.split.val_fraction)?;
        let (_, params) = normalize(&split.train, None)?;
        let (scaled, _) = normalize(&frame, Some(&params))?;
        write_file(&paths.frame(cadence), &to_csv_string(&frame)?)?;
        write_file(&paths.normalized(cadence), &to_csv_string(&scaled)?)?;
        write_file(&paths.normalization(cadence), &to_json(&params)?)?;
        out.push(summary(cadence, &frame, imputed));
    }
    Ok(out)
}

fn discovery_rows(config: &PipelineConfig, frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
    let split = split_by_date(frame, config.split.train_end, 0.0)?;
    Ok(split.train)
}

fn run_method(config: &PipelineConfig, frame: &TimeSeriesFrame, method: Method) -> Result<CausalGraph> {
    match method {
        Method::Mvgc => {
            let order = config.discovery.mvgc.order.unwrap_or(config.discovery.tau_max);
            if order == 0 {
                return Err(CliError::config("MVGC needs a lag order of at least 1"));
            }
            Ok(mvgc_graph(frame, order, config.discovery.mvgc.alpha, config.discovery.mvgc.correction)?)
        }
        Method::PcmciPlus => Ok(pcmciplus_run(frame, &config.pcmci_config())?),
    }
}

pub fn discover(config: &PipelineConfig, paths: &Paths) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for &cadence in &config.discovery.cadences {
        let frame = discovery_rows(config, &load_stage(paths, cadence)?)?;
        frame.index_of(&config.target)?;
        for method in config.methods() {
            let graph = run_method(config, &frame, method)?;
            let features = feature_select(&graph, &config.target)?;
            write_file(&paths.edges(cadence, method), &graph.to_edge_list(true))?;
            let file = FeatureFile {
                method,
                cadence,
                target: config.target.clone(),
                features: features.clone(),
            };
            write_file(&paths.features(cadence, method), &to_json(&file)?)?;
            out.push(format!(
                "{cadence} {}: {} edges; features ({}): {}",
                method.slug(),
                graph.len(),
                features.len(),
                features.join(", ")
            ));
        }
    }
    Ok(out)
}

/// Input features of a variant, checked against the frame.
pub fn resolve_features(config: &PipelineConfig, paths: &Paths, v: &VariantConfig, frame: &TimeSeriesFrame) -> Result<Vec<String>> {
    let features = match v.source {
        FeatureSource::All => frame
            .names()
            .into_iter()
            .filter(|n| *n != config.target)
            .map(str::to_string)
            .collect(),
        FeatureSource::List => v.features.clone().unwrap_or_default(),
        FeatureSource::Mvgc | FeatureSource::PcmciPlus => {
            let method = if v.source == FeatureSource::Mvgc { Method::Mvgc } else { Method::PcmciPlus };
            let on = v.discovered_on.unwrap_or(v.cadence);
            let path = paths.features(on, method);
            if !path.exists() {
                return Err(CliError::data(format!(
                    "{} not found; run `discover` first",
                    path.display()
                )));
            }
            let file: FeatureFile = read_json(&path)?;
            file.features
        }
    };
    if features.is_empty() {
        return Err(CliError::data(format!("variant {:?} has no input features", v.name)));
    }
    for f in &features {
        if frame.index_of(f).is_err() {
            return Err(CliError::data(format!(
                "variant {:?}: feature {f:?} is not a variable of the {} frame",
                v.name, v.cadence
            )));
        }
    }
    Ok(features)
}

fn selected_variants<'a>(config: &'a PipelineConfig, name: Option<&str>) -> Result<Vec<&'a VariantConfig>> {
    match name {
        Some(n) => Ok(vec![config.variant(n)?]),
        None => Ok(config.variants.iter().collect()),
    }
}

pub fn train(config: &PipelineConfig, paths: &Paths, variant: Option<&str>) -> Result<Vec<String>> {
    let variants = selected_variants(config, variant)?;
    // Resolve everything before the first (slow) training run.
    let mut jobs = Vec::new();
    for v in variants {
        let frame = load_stage(paths, v.cadence)?;
        let features = resolve_features(config, paths, v, &frame)?;
        jobs.push((v, frame, features));
    }
    let train_config = config.train_config();
    let mut out = Vec::new();
    for (v, frame, features) in jobs {
        let data = prepare(&frame, &config.target, config.split.train_end, config.split.val_fraction)?;
        let variant = Variant {
            name: v.name.clone(),
            features,
        };
        for &h in &config.horizons {
            let steps = h * config.steps_per_horizon(v.cadence);
            let (checkpoint, history) = train_cell(&data, &variant, steps, &config.model, &train_config)?;
            write_file(&paths.checkpoint(&v.name, h), &checkpoint.to_json()?)?;
            write_file(&paths.history(&v.name, h), &to_json(&history)?)?;
            let val = history
                .val_loss
                .get(history.best_epoch.saturating_sub(1))
                .map_or_else(|| "n/a".to_string(), |l| format!("{l:.6}"));
            out.push(format!(
                "{} h={h}: {} features, {} parameters, {} epochs, best epoch {} (val MSE {val})",
                v.name,
                variant.features.len(),
                history.parameter_count,
                history.epochs(),
                history.best_epoch
            ));
        }
    }
    Ok(out)
}

pub fn evaluate(config: &PipelineConfig, paths: &Paths, variant: Option<&str>) -> Result<Vec<String>> {
    let variants = selected_variants(config, variant)?;
    let missing: Vec<String> = variants
        .iter()
        .flat_map(|v| config.horizons.iter().map(move |&h| (v, h)))
        .filter(|(v, h)| !paths.checkpoint(&v.name, *h).exists() || !paths.history(&v.name, *h).exists())
        .map(|(v, h)| format!("({}, {h})", v.name))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::data(format!(
            "missing checkpoints for (variant, horizon): {}; run `train` first",
            missing.join(", ")
        )));
    }
    let mut by_cadence: BTreeMap<&'static str, (Cadence, Vec<&VariantConfig>)> = BTreeMap::new();
    for v in variants {
        by_cadence
            .entry(v.cadence.as_str())
            .or_insert_with(|| (v.cadence, Vec::new()))
            .1
            .push(v);
    }
    let mut out = Vec::new();
    for (_, (cadence, vs)) in by_cadence {
        let frame = load_stage(paths, cadence)?;
        let data = prepare(&frame, &config.target, config.split.train_end, config.split.val_fraction)?;
        let mut report = MetricsReport::new(cadence.as_str(), &config.target, config.seed);
        for v in vs {
            for &h in &config.horizons {
                let checkpoint = Checkpoint::load(&paths.checkpoint(&v.name, h))?;
                let history: History = read_json(&paths.history(&v.name, h))?;
                let cell = evaluate_cell(&data, &v.name, h, &checkpoint, &history)?;
                report.push(&checkpoint.features, cell);
            }
        }
        let stem = match variant {
            Some(name) => format!("{cadence}_{name}"),
            None => cadence.as_str().to_string(),
        };
        report.write_all(&paths.reports(), &stem)?;
        out.push(report.to_table());
    }
    Ok(out)
}

pub fn forecast(config: &PipelineConfig, paths: &Paths, variant: Option<&str>) -> Result<Vec<String>> {
    let variants = selected_variants(config, variant)?;
    let mut out = Vec::new();
    for v in variants {
        let frame = load_stage(paths, v.cadence)?;
        let mut csv = String::from("horizon,steps,issued,valid,forecast\n");
        for &h in &config.horizons {
            let path = paths.checkpoint(&v.name, h);
            if !path.exists() {
                return Err(CliError::data(format!(
                    "missing checkpoint for ({}, {h}): {}",
                    v.name,
                    path.display()
                )));
            }
            let ck = Checkpoint::load(&path)?;
            let value = forecast_latest(&frame, &ck)?;
            let issued = *frame.timestamps().last().expect("non-empty frame");
            let valid = next_dates(frame.cadence(), issued, ck.horizon);
            csv.push_str(&format!("{h},{},{issued},{valid},{value:.10e}\n", ck.horizon));
            out.push(format!("{} h={h}: {} forecast for {valid}: {value:.4}", v.name, ck.target));
        }
        write_file(&paths.forecast(&v.name), &csv)?;
    }
    Ok(out)
}

/// Forecast from the last `lookback` rows of `frame`, in physical units.
pub fn forecast_latest(frame: &TimeSeriesFrame, ck: &Checkpoint) -> Result<f64> {
    let norm: &NormalizationParams = ck
        .normalization
        .as_ref()
        .ok_or_else(|| CliError::data("checkpoint has no normalization parameters"))?;
    let n = frame.n_rows();
    if n < ck.lookback {
        return Err(CliError::data(format!(
            "need {} rows for a forecast, frame has {n}",
            ck.lookback
        )));
    }
    let refs: Vec<&str> = ck.features.iter().map(String::as_str).collect();
    let window = frame.select(&refs)?.slice_rows(n - ck.lookback, n)?;
    let mut x = window.complete_values()?.to_owned();
    for (j, name) in ck.features.iter().enumerate() {
        let k = norm.index_of(name)?;
        x.column_mut(j).mapv_inplace(|v| norm.apply(k, v));
    }
    let (z, _) = ck.model.forward_window(x.view(), None)?;
    let t = norm.index_of(&ck.target)?;
    Ok(norm.invert(t, z))
}

pub fn synth(config: &PipelineConfig, paths: &Paths, seed_override: Option<u64>) -> Result<Vec<String>> {
    let s = config
        .synth
        .as_ref()
        .ok_or_else(|| CliError::config("no [synth] section in the configuration"))?;
    let mut spec = s.spec.clone();
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let (frame, truth) = generate(&spec, s.rows)?;
    let dir = paths.synth();
    write_file(&dir.join("frame.csv"), &to_csv_string(&frame)?)?;
    write_file(&dir.join("truth.edges"), &truth.to_edge_list(true))?;
    Ok(vec![format!(
        "synth: {} rows x {} variables, {} true edges",
        frame.n_rows(),
        frame.n_vars(),
        truth.len()
    )])
}
