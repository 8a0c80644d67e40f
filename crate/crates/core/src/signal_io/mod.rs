//! Recordings, annotation tracks and the file formats that carry them.
//!
//! Two recording formats are understood: continuous EDF (16-bit, physical
//! scaling to µV) and a plain CSV layout used for fixtures and intermediate
//! pipeline products. Annotations live in a separate CSV with columns
//! `onset_s,duration_s,scope,label`.

mod annotations;
mod csv;
mod edf;
mod montage;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use annotations::{read_annotations, write_annotations, Annotation, AnnotationTrack, Label, Scope};
pub use csv::{read_recording_csv, sidecar_path, mask_path, write_recording_csv};
pub use edf::read_recording_edf;
pub use montage::{derive_bipolar_montage, NEONATAL_BIPOLAR_PAIRS};

use crate::error::{Error, Result};

/// Multi-channel EEG in µV with a per-sample validity mask.
///
/// A `false` in the mask marks a rejected or missing sample; its amplitude is
/// kept so downstream stages can audit what was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    channel_labels: Vec<String>,
    sample_rate: f64,
    samples: Vec<Vec<f64>>,
    validity: Vec<Vec<bool>>,
}

impl Recording {
    /// All samples valid.
    pub fn new(channel_labels: Vec<String>, sample_rate: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        let validity = samples.iter().map(|c| vec![true; c.len()]).collect();
        Self::with_validity(channel_labels, sample_rate, samples, validity)
    }

    pub fn with_validity(
        channel_labels: Vec<String>,
        sample_rate: f64,
        samples: Vec<Vec<f64>>,
        validity: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::validation(format!("sample rate must be positive, got {sample_rate}")));
        }
        if channel_labels.len() != samples.len() || validity.len() != samples.len() {
            return Err(Error::validation(format!(
                "{} labels, {} sample channels and {} mask channels",
                channel_labels.len(),
                samples.len(),
                validity.len()
            )));
        }
        if let Some(first) = samples.first() {
            let n = first.len();
            for (label, (ch, mask)) in channel_labels.iter().zip(samples.iter().zip(&validity)) {
                if ch.len() != n {
                    return Err(Error::validation(format!(
                        "channel '{label}' has {} samples, expected {n}",
                        ch.len()
                    )));
                }
                if mask.len() != n {
                    return Err(Error::validation(format!(
                        "validity mask of channel '{label}' has length {}, expected {n}",
                        mask.len()
                    )));
                }
            }
        }
        Ok(Recording {
            channel_labels,
            sample_rate,
            samples,
            validity,
        })
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn validity(&self) -> &[Vec<bool>] {
        &self.validity
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l == label)
    }

    pub fn into_parts(self) -> (Vec<String>, f64, Vec<Vec<f64>>, Vec<Vec<bool>>) {
        (self.channel_labels, self.sample_rate, self.samples, self.validity)
    }

    /// Same recording with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Recording {
        let mut out = self.clone();
        for ch in &mut out.samples {
            ch.iter_mut().for_each(|v| *v *= factor);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordingFormat {
    Edf,
    Csv,
}

impl FromStr for RecordingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "edf" => Ok(RecordingFormat::Edf),
            "csv" => Ok(RecordingFormat::Csv),
            other => Err(Error::Unsupported(format!("recording format '{other}' (expected edf or csv)"))),
        }
    }
}

impl fmt::Display for RecordingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordingFormat::Edf => "edf",
            RecordingFormat::Csv => "csv",
        })
    }
}

impl RecordingFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "edf" => Some(RecordingFormat::Edf),
            "csv" => Some(RecordingFormat::Csv),
            _ => None,
        }
    }
}

/// Read a recording. For CSV the sample rate comes from `sample_rate` or,
/// when absent, from the sidecar metadata file next to `path`.
pub fn read_recording(path: &Path, format: RecordingFormat, sample_rate: Option<f64>) -> Result<Recording> {
    match format {
        RecordingFormat::Edf => read_recording_edf(path),
        RecordingFormat::Csv => read_recording_csv(path, sample_rate),
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_channels() {
        let err = Recording::new(
            vec!["a".into(), "b".into()],
            64.0,
            vec![vec![0.0; 3], vec![0.0; 2]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("channel 'b'"));
    }

    #[test]
    fn rejects_non_positive_rate() {
        assert!(Recording::new(vec!["a".into()], 0.0, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn format_from_str() {
        assert_eq!("EDF".parse::<RecordingFormat>().unwrap(), RecordingFormat::Edf);
        assert!("bdf".parse::<RecordingFormat>().is_err());
    }
}
