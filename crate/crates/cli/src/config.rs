//! Declarative pipeline configuration (TOML). Every field has a default, so an
//! empty file describes the full daily + monthly experiment.

use std::path::{Path, PathBuf};

use causalcast_core::{Cadence, Correction, ScmSpec};
use causalcast_discovery::PcmciConfig;
use causalcast_eval::Architecture;
use causalcast_neural::{AdamConfig, TrainConfig};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::schema::TARGET;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaChoice {
    /// Eleven named variables with physical ranges.
    Table1,
    /// Whatever columns the file has, unchecked.
    Header,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub daily: Option<PathBuf>,
    /// When absent the monthly frame is the calendar-month mean of the daily one.
    pub monthly: Option<PathBuf>,
    pub schema: SchemaChoice,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            daily: Some(PathBuf::from("data/daily.csv")),
            monthly: None,
            schema: SchemaChoice::Table1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// ISO date; rows after it are test rows.
    pub train_end: NaiveDate,
    pub val_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_end: NaiveDate::from_ymd_opt(2013, 12, 31).expect("valid date"),
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MvgcSection {
    /// VAR order; defaults to `tau_max`.
    pub order: Option<usize>,
    pub alpha: f64,
    pub correction: Correction,
}

impl Default for MvgcSection {
    fn default() -> Self {
        Self {
            order: None,
            alpha: 0.05,
            correction: Correction::BenjaminiHochberg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcmciSection {
    pub alpha_pc: f64,
    pub alpha_mci: f64,
    pub max_conds: Option<usize>,
    pub contemporaneous: bool,
}

impl Default for PcmciSection {
    fn default() -> Self {
        let d = PcmciConfig::default();
        Self {
            alpha_pc: d.alpha_pc,
            alpha_mci: d.alpha_mci,
            max_conds: d.max_conds,
            contemporaneous: d.contemporaneous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    /// Any of `mvgc`, `pcmci+`.
    pub methods: Vec<String>,
    pub cadences: Vec<Cadence>,
    pub tau_max: usize,
    pub mvgc: MvgcSection,
    pub pcmci: PcmciSection,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            methods: vec!["mvgc".into(), "pcmci+".into()],
            cadences: vec![Cadence::Daily, Cadence::Monthly],
            tau_max: 21,
            mvgc: MvgcSection::default(),
            pcmci: PcmciSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mvgc")]
    Mvgc,
    #[serde(rename = "pcmci+")]
    PcmciPlus,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mvgc" => Ok(Method::Mvgc),
            "pcmci+" | "pcmciplus" => Ok(Method::PcmciPlus),
            _ => Err(CliError::config(format!(
                "unknown discovery method {s:?} (expected mvgc or pcmci+)"
            ))),
        }
    }

    /// File-name stem.
    pub fn slug(self) -> &'static str {
        match self {
            Method::Mvgc => "mvgc",
            Method::PcmciPlus => "pcmciplus",
        }
    }
}

/// Where a variant's input features come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    /// Every variable except the target.
    All,
    Mvgc,
    #[serde(rename = "pcmci+")]
    PcmciPlus,
    /// The explicit `features` list.
    List,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    pub cadence: Cadence,
    pub source: FeatureSource,
    /// Cadence whose discovery output supplies the features (defaults to `cadence`).
    #[serde(default)]
    pub discovered_on: Option<Cadence>,
    #[serde(default)]
    pub features: Option<Vec<String>>,
}

impl VariantConfig {
    fn new(name: &str, cadence: Cadence, source: FeatureSource) -> Self {
        Self {
            name: name.into(),
            cadence,
            source,
            discovered_on: None,
            features: None,
        }
    }
}

fn default_variants() -> Vec<VariantConfig> {
    use Cadence::{Daily, Monthly};
    use FeatureSource::*;
    vec![
        VariantConfig::new("vanilla_daily", Daily, All),
        VariantConfig::new("gc_daily", Daily, Mvgc),
        VariantConfig::new("pcmci_daily", Daily, PcmciPlus),
        VariantConfig::new("vanilla_monthly", Monthly, All),
        VariantConfig::new("gc_monthly", Monthly, Mvgc),
        VariantConfig::new("pcmci_monthly", Monthly, PcmciPlus),
        VariantConfig {
            discovered_on: Some(Daily),
            ..VariantConfig::new("dpcmci_monthly", Monthly, PcmciPlus)
        },
    ]
}

/// Training settings; the seed is the top-level `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            min_delta: d.min_delta,
            learning_rate: d.adam.lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub rows: usize,
    pub spec: ScmSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub target: String,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub discovery: DiscoveryConfig,
    pub model: Architecture,
    pub train: TrainSection,
    /// Lead times; months for both cadences.
    pub horizons: Vec<usize>,
    /// Daily rows per one-month lead.
    pub daily_steps_per_month: usize,
    pub variants: Vec<VariantConfig>,
    pub synth: Option<SynthConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            target: TARGET.into(),
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            discovery: DiscoveryConfig::default(),
            model: Architecture::default(),
            train: TrainSection::default(),
            horizons: (1..=6).collect(),
            daily_steps_per_month: 30,
            variants: default_variants(),
            synth: None,
        }
    }
}

impl PipelineConfig {
    /// Parse TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut c: PipelineConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("invalid configuration: {e}")))?;
        c.resolve_paths(base);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read configuration {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = self.data.daily.as_mut() {
            fix(p);
        }
        if let Some(p) = self.data.monthly.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.discovery.methods {
            Method::parse(m)?;
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|&h| !(1..=6).contains(&h)) {
            return Err(CliError::config("horizons must be a non-empty subset of 1..=6"));
        }
        if self.daily_steps_per_month == 0 {
            return Err(CliError::config("daily_steps_per_month must be positive"));
        }
        if !(0.0..1.0).contains(&self.split.val_fraction) {
            return Err(CliError::config("split.val_fraction must lie in [0, 1)"));
        }
        self.train_config().validate()?;
        self.model.model_config(1).validate()?;
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].iter().any(|w| w.name == v.name) {
                return Err(CliError::config(format!("duplicate variant name {:?}", v.name)));
            }
            if v.name.is_empty() || v.name.contains(['/', '\\']) {
                return Err(CliError::config(format!("invalid variant name {:?}", v.name)));
            }
            match (v.source, &v.features) {
                (FeatureSource::List, None) => {
                    return Err(CliError::config(format!(
                        "variant {:?} uses source = \"list\" without a features list",
                        v.name
                    )))
                }
                (FeatureSource::List, Some(_)) | (_, None) => {}
                (_, Some(_)) => {
                    return Err(CliError::config(format!(
                        "variant {:?} lists features but its source is not \"list\"",
                        v.name
                    )))
                }
            }
            if matches!(v.source, FeatureSource::Mvgc | FeatureSource::PcmciPlus) {
                let method = if v.source == FeatureSource::Mvgc { "mvgc" } else { "pcmci+" };
                let on = v.discovered_on.unwrap_or(v.cadence);
                if !self.discovery.methods.iter().any(|m| Method::parse(m).ok() == Method::parse(method).ok())
                    || !self.discovery.cadences.contains(&on)
                {
                    return Err(CliError::config(format!(
                        "variant {:?} needs {method} discovery on {on} data, which is not configured",
                        v.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        self.discovery
            .methods
            .iter()
            .map(|m| Method::parse(m).expect("validated"))
            .collect()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            min_delta: self.train.min_delta,
            seed: self.seed,
            adam: AdamConfig {
                lr: self.train.learning_rate,
                ..AdamConfig::default()
            },
        }
    }

    pub fn pcmci_config(&self) -> PcmciConfig {
        PcmciConfig {
            tau_max: self.discovery.tau_max,
            alpha_pc: self.discovery.pcmci.alpha_pc,
            alpha_mci: self.discovery.pcmci.alpha_mci,
            max_conds: self.discovery.pcmci.max_conds,
            contemporaneous: self.discovery.pcmci.contemporaneous,
        }
    }

    pub fn steps_per_horizon(&self, cadence: Cadence) -> usize {
        match cadence {
            Cadence::Daily => self.daily_steps_per_month,
            Cadence::Monthly => 1,
        }
    }

    pub fn variant(&self, name: &str) -> Result<&VariantConfig> {
        self.variants.iter().find(|v| v.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
            CliError::config(format!("unknown variant {name:?} (configured: {})", known.join(", ")))
        })
    }
}
