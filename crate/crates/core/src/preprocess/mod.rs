//! Artifact rejection, anti-alias low-pass with decimation, and zero-phase
//! Butterworth band filtering.

mod butterworth;
mod fir;

use serde::{Deserialize, Serialize};

pub use butterworth::{Biquad, ButterKind, Butterworth};
pub use fir::{filter_centered, hamming_lowpass, magnitude as fir_magnitude};

use crate::error::{Error, Result};
use crate::signal_io::Recording;

/// Butterworth order used for every band filter.
pub const BUTTER_ORDER: usize = 5;

/// A band whose upper corner sits at or above this fraction of Nyquist is
/// realised as a high-pass at its lower corner (the input is already low-passed).
pub const HIGHPASS_SWITCH: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

impl BandSpec {
    pub fn new(low: f64, high: f64) -> Self {
        BandSpec {
            name: format!("{low}-{high}"),
            low,
            high,
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.low > 0.0 && self.low < self.high && self.high <= fs / 2.0) {
            return Err(Error::validation(format!(
                "band '{}' ({}-{} Hz) must satisfy 0 < low < high <= {} Hz",
                self.name,
                self.low,
                self.high,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// The four analysis bands: 0.5–4, 4–7, 7–13 and 13–30 Hz.
pub fn analysis_bands() -> Vec<BandSpec> {
    vec![
        BandSpec::new(0.5, 4.0),
        BandSpec::new(4.0, 7.0),
        BandSpec::new(7.0, 13.0),
        BandSpec::new(13.0, 30.0),
    ]
}

/// Broadband range used by the fractal dimension and as the total-power range.
pub fn broadband() -> BandSpec {
    BandSpec::new(0.5, 30.0)
}

/// Band for the envelope–derivative operator.
pub fn edo_band() -> BandSpec {
    BandSpec::new(0.5, 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    FirLowpass { length: usize, cutoff: f64 },
    ButterworthBandpass { order: usize, low: f64, high: f64 },
}

impl FilterSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        match *self {
            FilterSpec::FirLowpass { length, cutoff } => {
                if length % 2 == 0 {
                    return Err(Error::validation(format!("FIR length {length} must be odd")));
                }
                if !(cutoff > 0.0 && cutoff < fs / 2.0) {
                    return Err(Error::validation(format!("FIR cutoff {cutoff} Hz above Nyquist of {fs} Hz")));
                }
            }
            FilterSpec::ButterworthBandpass { order, low, high } => {
                if order == 0 {
                    return Err(Error::validation("Butterworth order must be positive"));
                }
                BandSpec::new(low, high).validate(fs)?;
            }
        }
        Ok(())
    }
}

/// Design the zero-phase band filter for `band` at `fs`.
pub fn design_for_band(band: &BandSpec, fs: f64) -> Result<Butterworth> {
    band.validate(fs)?;
    if band.high >= HIGHPASS_SWITCH * fs / 2.0 {
        Butterworth::highpass(BUTTER_ORDER, band.low, fs)
    } else {
        Butterworth::bandpass(BUTTER_ORDER, band.low, band.high, fs)
    }
}

/// Mark samples with `|x| > threshold` invalid; amplitudes are kept.
pub fn reject_artifacts(rec: &Recording, threshold: f64) -> Result<Recording> {
    if !(threshold > 0.0) {
        return Err(Error::validation(format!("artifact threshold must be positive, got {threshold}")));
    }
    let validity = rec
        .samples()
        .iter()
        .zip(rec.validity())
        .map(|(ch, mask)| ch.iter().zip(mask).map(|(x, &ok)| ok && x.abs() <= threshold).collect())
        .collect();
    Recording::with_validity(
        rec.channel_labels().to_vec(),
        rec.sample_rate(),
        rec.samples().to_vec(),
        validity,
    )
}

/// Invalidate every sample within `half` samples of an invalid one.
pub fn dilate_invalid(mask: &[bool], half: usize) -> Vec<bool> {
    let n = mask.len();
    let mut prefix = vec![0usize; n + 1];
    for (i, &ok) in mask.iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(!ok);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            prefix[hi] == prefix[lo]
        })
        .collect()
}

/// Integer decimation factor `from / to`, or an error when it is not integral.
pub fn decimation_factor(from: f64, to: f64) -> Result<usize> {
    if !(to > 0.0) {
        return Err(Error::validation(format!("target rate must be positive, got {to}")));
    }
    let r = from / to;
    let d = r.round();
    if d < 1.0 || (r - d).abs() > 1e-9 * r {
        return Err(Error::validation(format!(
            "target rate {to} Hz does not divide sample rate {from} Hz"
        )));
    }
    Ok(d as usize)
}

/// Windowed-sinc low-pass of `length` taps at `cutoff`, group delay removed,
/// then keep every D-th sample where D = fs / target_rate.
///
/// An output sample is invalid when any input in its decimation window, or
/// within the filter's half-length of it, was invalid.
pub fn fir_lowpass_downsample(rec: &Recording, cutoff: f64, length: usize, target_rate: f64) -> Result<Recording> {
    let fs = rec.sample_rate();
    let d = decimation_factor(fs, target_rate)?;
    if !(cutoff > 0.0 && cutoff < target_rate / 2.0) {
        return Err(Error::validation(format!(
            "cutoff {cutoff} Hz must lie below the output Nyquist {} Hz",
            target_rate / 2.0
        )));
    }
    FilterSpec::FirLowpass { length, cutoff }.validate(fs)?;
    let taps = hamming_lowpass(length, cutoff, fs);
    let half = (length - 1) / 2;
    let n = rec.n_samples();
    let n_out = n.div_ceil(d);

    let mut samples = Vec::with_capacity(rec.n_channels());
    let mut validity = Vec::with_capacity(rec.n_channels());
    for (ch, mask) in rec.samples().iter().zip(rec.validity()) {
        let y = filter_centered(ch, &taps);
        samples.push((0..n_out).map(|j| y[j * d]).collect());
        let dil = dilate_invalid(mask, half);
        validity.push(
            (0..n_out)
                .map(|j| dil[j * d..((j + 1) * d).min(n)].iter().all(|&ok| ok))
                .collect(),
        );
    }
    Recording::with_validity(rec.channel_labels().to_vec(), target_rate, samples, validity)
}

/// Zero-phase Butterworth filtering of one channel into `band`.
pub fn butter_bandpass_zerophase(x: &[f64], band: &BandSpec, fs: f64) -> Result<Vec<f64>> {
    let filt = design_for_band(band, fs)?;
    if x.len() <= 6 * BUTTER_ORDER {
        return Err(Error::validation(format!(
            "signal of {} samples too short for band filtering",
            x.len()
        )));
    }
    filt.filtfilt(x)
}

/// Filter every channel of `rec` into `band`, dilating invalid samples over
/// the filter's effective support.
pub fn filter_recording(rec: &Recording, band: &BandSpec) -> Result<Recording> {
    let fs = rec.sample_rate();
    let filt = design_for_band(band, fs)?;
    let support = filt.support_half_width();
    let mut samples = Vec::with_capacity(rec.n_channels());
    let mut validity = Vec::with_capacity(rec.n_channels());
    for (ch, mask) in rec.samples().iter().zip(rec.validity()) {
        if ch.len() <= 6 * BUTTER_ORDER {
            return Err(Error::validation(format!(
                "signal of {} samples too short for band filtering",
                ch.len()
            )));
        }
        samples.push(filt.filtfilt(ch)?);
        validity.push(dilate_invalid(mask, support));
    }
    Recording::with_validity(rec.channel_labels().to_vec(), fs, samples, validity)
}

/// One filtered recording per band, in band order.
pub fn band_decompose(rec: &Recording, bands: &[BandSpec]) -> Result<Vec<Recording>> {
    bands.iter().map(|b| filter_recording(rec, b)).collect()
}

/// Settings of the acquisition-side preprocessing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// µV; larger absolute amplitudes are rejected.
    pub artifact_threshold: f64,
    pub fir_length: usize,
    pub fir_cutoff: f64,
    pub target_rate: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            artifact_threshold: 1500.0,
            fir_length: 4001,
            fir_cutoff: 30.0,
            target_rate: 64.0,
        }
    }
}

/// Artifact rejection followed by low-pass and decimation. A recording already
/// at the target rate is only artifact-screened.
pub fn preprocess(rec: &Recording, cfg: &PreprocessConfig) -> Result<Recording> {
    let screened = reject_artifacts(rec, cfg.artifact_threshold)?;
    if (rec.sample_rate() - cfg.target_rate).abs() < 1e-9 {
        return Ok(screened);
    }
    fir_lowpass_downsample(&screened, cfg.fir_cutoff, cfg.fir_length, cfg.target_rate)
}
