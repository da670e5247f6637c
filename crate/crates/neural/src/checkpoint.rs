//! JSON model checkpoints.

use std::path::Path;

use causalcast_core::NormalizationParams;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ForecastModel;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to reload a model and predict bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ForecastModel,
    pub features: Vec<String>,
    pub target: String,
    pub lookback: usize,
    pub horizon: usize,
    pub normalization: Option<NormalizationParams>,
}

impl Checkpoint {
    pub fn new(
        model: ForecastModel,
        features: Vec<String>,
        target: String,
        horizon: usize,
        normalization: Option<NormalizationParams>,
    ) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            lookback: model.config.lookback,
            model,
            features,
            target,
            horizon,
            normalization,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                c.version
            )));
        }
        if c.features.len() != c.model.config.n_features || c.lookback != c.model.config.lookback {
            return Err(Error::Checkpoint("feature list or lookback disagrees with the model".into()));
        }
        c.model.config.validate()?;
        c.model.params.check(&c.model.config)?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}
