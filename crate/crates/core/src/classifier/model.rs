use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureKind};
use crate::preprocess::BandSpec;

pub const MODEL_VERSION: u32 = 1;
pub const ORIENTATION: &str = "positive = burst";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub family: FeatureKind,
    pub band: String,
}

impl From<&FeatureId> for SelectedFeature {
    fn from(id: &FeatureId) -> Self {
        SelectedFeature {
            family: id.kind,
            band: id.band.clone(),
        }
    }
}

impl SelectedFeature {
    pub fn id(&self) -> FeatureId {
        FeatureId::new(self.family, self.band.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub n_subjects: usize,
    pub n_training_rows: usize,
    pub c: f64,
    pub auc_threshold: f64,
    /// Median per-subject oriented AUC of each selected feature.
    pub selection_auc: Vec<f64>,
    pub solver_iterations: usize,
    pub solver_converged: bool,
    pub relative_duality_gap: f64,
    pub seed: u64,
    /// Peak separation chosen for the TA envelope, seconds.
    pub min_separation: Option<f64>,
}

/// Standardise-then-dot linear scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub version: u32,
    pub bands: Vec<BandSpec>,
    pub selected_features: Vec<SelectedFeature>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub orientation: String,
    pub training_metadata: TrainingMetadata,
}

impl LinearModel {
    pub fn validate(&self) -> Result<()> {
        let k = self.selected_features.len();
        if k == 0 || self.means.len() != k || self.stds.len() != k || self.weights.len() != k {
            return Err(Error::validation(format!(
                "model lists {k} features but {} means, {} stds and {} weights",
                self.means.len(),
                self.stds.len(),
                self.weights.len()
            )));
        }
        if self.stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::validation("model standard deviations must be positive"));
        }
        let finite = self.means.iter().chain(&self.weights).all(|v| v.is_finite()) && self.bias.is_finite();
        if !finite {
            return Err(Error::validation("model parameters must be finite"));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Unsupported(format!("model version {}", self.version)));
        }
        if self.orientation != ORIENTATION {
            return Err(Error::validation(format!("unknown score orientation '{}'", self.orientation)));
        }
        Ok(())
    }

    pub fn feature_ids(&self) -> Vec<FeatureId> {
        self.selected_features.iter().map(SelectedFeature::id).collect()
    }

    /// `w·z + b` with `z = (v − mean) / std`.
    pub fn score_row(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .zip(self.means.iter().zip(&self.stds))
            .map(|((w, v), (m, s))| w * (v - m) / s)
            .sum::<f64>()
            + self.bias
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation(format!("cannot serialise model: {e}")))
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<LinearModel> {
        let m: LinearModel = toml::from_str(text).map_err(|e| {
            let location = e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "document".into());
            Error::parse(path, location, e.message())
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LinearModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }
}
