//! End-to-end glue: raw electrodes → bipolar montage → preprocessing →
//! features → scores → TA envelope.

use serde::{Deserialize, Serialize};

use crate::classifier::{decision_score, LinearModel, ScoreTrace};
use crate::error::Result;
use crate::features::{build_feature_matrices, FeatureConfig, FeatureMatrix};
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::signal_io::{derive_bipolar_montage, Recording, NEONATAL_BIPOLAR_PAIRS};
use crate::ta_envelope::{decide_ta, filtered_score, peak_spline_envelope, EnvelopeParams, TaDecision, DEFAULT_EPOCH_MINUTES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
}

/// Bipolar montage when the recording holds the referential electrodes,
/// otherwise the channels as given.
pub fn montage(raw: &Recording) -> Result<Recording> {
    let has_all = NEONATAL_BIPOLAR_PAIRS
        .iter()
        .all(|(a, b)| raw.channel_index(a).is_some() && raw.channel_index(b).is_some());
    if has_all {
        derive_bipolar_montage(raw, &NEONATAL_BIPOLAR_PAIRS)
    } else {
        Ok(raw.clone())
    }
}

/// Montage and preprocessing of a raw recording.
pub fn prepare(raw: &Recording, cfg: &PipelineConfig) -> Result<Recording> {
    preprocess(&montage(raw)?, &cfg.preprocess)
}

/// Per-channel feature matrices of a raw recording.
pub fn raw_to_features(raw: &Recording, cfg: &PipelineConfig) -> Result<Vec<FeatureMatrix>> {
    build_feature_matrices(&prepare(raw, cfg)?, &cfg.features)
}

pub fn score_channels(model: &LinearModel, matrices: &[FeatureMatrix]) -> Result<Vec<ScoreTrace>> {
    matrices.iter().map(|fm| decision_score(model, fm)).collect()
}

/// Channel-averaged filtered score, its envelope and the thresholded decision.
#[derive(Debug, Clone)]
pub struct TaOutput {
    pub filtered: ScoreTrace,
    pub decision: TaDecision,
}

pub fn detect_from_scores(scores: &[ScoreTrace], params: &EnvelopeParams, ta: Option<&[Option<bool>]>) -> Result<TaOutput> {
    params.validate()?;
    let filtered = filtered_score(scores, params.median_window)?;
    let fs = filtered.sample_rate;
    let env = peak_spline_envelope(&filtered.values, params.min_separation, fs);
    let none = vec![None; env.len()];
    let decision = decide_ta(&env, params.threshold, DEFAULT_EPOCH_MINUTES, fs, ta.unwrap_or(&none));
    Ok(TaOutput { filtered, decision })
}

pub fn detect_from_features(model: &LinearModel, matrices: &[FeatureMatrix], params: &EnvelopeParams) -> Result<TaOutput> {
    detect_from_scores(&score_channels(model, matrices)?, params, None)
}
