//! Per-epoch spectral shape: relative band power and the log–log line fit.
//!
//! Each epoch is Hamming-windowed and transformed without zero padding. Bin
//! `k` sits at `k·fs/N`. A bin exactly on a band edge belongs to the lower
//! band; the lower edge of the total range is inclusive.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::fft::power_spectrum;
use crate::preprocess::BandSpec;
use crate::stats::line_fit;

const EDGE_TOL: f64 = 1e-9;

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Windowed power spectrum of one epoch with the bin frequencies.
pub struct EpochSpectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl EpochSpectrum {
    pub fn compute(x: &[f64], fs: f64, window: &[f64], planner: &mut FftPlanner<f64>) -> Self {
        let n = x.len();
        let windowed: Vec<f64> = x.iter().zip(window).map(|(v, w)| v * w).collect();
        let power = power_spectrum(&windowed, planner);
        let freqs = (0..power.len()).map(|k| k as f64 * fs / n as f64).collect();
        EpochSpectrum { freqs, power }
    }

    /// Indices of bins in `band`, with `total` deciding whether the band's lower edge is inclusive.
    pub fn band_bins(&self, band: &BandSpec, total: &BandSpec) -> Vec<usize> {
        self.freqs
            .iter()
            .enumerate()
            .filter(|(_, &f)| in_band(f, band, total))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn in_band(f: f64, band: &BandSpec, total: &BandSpec) -> bool {
    let above_low = if (band.low - total.low).abs() < EDGE_TOL {
        f >= band.low - EDGE_TOL
    } else {
        f > band.low + EDGE_TOL
    };
    above_low && f <= band.high + EDGE_TOL
}

/// Band power over total power in `total`. `None` when the total is zero.
pub fn relative_power(spec: &EpochSpectrum, band: &BandSpec, total: &BandSpec) -> Option<f64> {
    let p_total: f64 = spec.band_bins(total, total).iter().map(|&k| spec.power[k]).sum();
    if !(p_total > 0.0) {
        return None;
    }
    let p_band: f64 = spec.band_bins(band, total).iter().map(|&k| spec.power[k]).sum();
    Some(p_band / p_total)
}

/// r² of the least-squares line through `(ln f, ln P)`. `None` with fewer
/// than three bins, a zero power bin, or a log-spectrum without variance.
pub fn loglog_fit_r2(freqs: &[f64], power: &[f64]) -> Option<f64> {
    if freqs.len() < 3 || power.iter().any(|&p| !(p > 0.0)) || freqs.iter().any(|&f| !(f > 0.0)) {
        return None;
    }
    let l: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let y: Vec<f64> = power.iter().map(|p| p.ln()).collect();
    let fit = line_fit(&l, &y)?;
    let mean_sq = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    if fit.ss_tot <= 1e-12 * y.len() as f64 * (1.0 + mean_sq) {
        return None;
    }
    Some(1.0 - fit.ss_res / fit.ss_tot)
}

pub fn spectral_fit_r2(spec: &EpochSpectrum, band: &BandSpec, total: &BandSpec) -> Option<f64> {
    let bins = spec.band_bins(band, total);
    let f: Vec<f64> = bins.iter().map(|&k| spec.freqs[k]).collect();
    let p: Vec<f64> = bins.iter().map(|&k| spec.power[k]).collect();
    loglog_fit_r2(&f, &p)
}

/// Relative band power of every 2-s epoch of `x` (epochs given as sample slices).
pub fn relative_spectral_power(
    x: &[f64],
    fs: f64,
    band: &BandSpec,
    total: &BandSpec,
    slices: &[(usize, usize)],
) -> Vec<Option<f64>> {
    per_epoch(x, fs, slices, |s| relative_power(s, band, total))
}

/// Log–log fit r² of every epoch of `x` over `band`.
pub fn spectral_fit_r2_epochs(
    x: &[f64],
    fs: f64,
    band: &BandSpec,
    total: &BandSpec,
    slices: &[(usize, usize)],
) -> Vec<Option<f64>> {
    per_epoch(x, fs, slices, |s| spectral_fit_r2(s, band, total))
}

fn per_epoch(
    x: &[f64],
    fs: f64,
    slices: &[(usize, usize)],
    f: impl Fn(&EpochSpectrum) -> Option<f64>,
) -> Vec<Option<f64>> {
    let mut planner = FftPlanner::new();
    let mut window: Vec<f64> = Vec::new();
    slices
        .iter()
        .map(|&(s, e)| {
            if window.len() != e - s {
                window = hamming(e - s);
            }
            f(&EpochSpectrum::compute(&x[s..e], fs, &window, &mut planner))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{analysis_bands, broadband};

    fn tone(freqs: &[f64], n: usize, fs: f64) -> Vec<f64> {
        (0..n)
            .map(|i| freqs.iter().map(|f| (2.0 * PI * f * i as f64 / fs).sin()).sum())
            .collect()
    }

    fn spectrum(x: &[f64]) -> EpochSpectrum {
        EpochSpectrum::compute(x, 64.0, &hamming(x.len()), &mut FftPlanner::new())
    }

    #[test]
    fn pure_tone_power_in_one_band() {
        let s = spectrum(&tone(&[2.0], 128, 64.0));
        let bands = analysis_bands();
        let p: Vec<f64> = bands.iter().map(|b| relative_power(&s, b, &broadband()).unwrap()).collect();
        assert!(p[0] >= 0.95, "{p:?}");
        assert!(p[1..].iter().all(|&v| v <= 0.05));
    }

    #[test]
    fn two_tones_split_power() {
        let s = spectrum(&tone(&[2.0, 10.0], 128, 64.0));
        let lo = relative_power(&s, &BandSpec::new(0.5, 4.0), &broadband()).unwrap();
        let mid = relative_power(&s, &BandSpec::new(7.0, 13.0), &broadband()).unwrap();
        assert!((lo - 0.5).abs() < 0.05 && (mid - 0.5).abs() < 0.05, "{lo} {mid}");
    }

    #[test]
    fn bands_tile_total_range() {
        let x: Vec<f64> = (0..128).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let s = spectrum(&x);
        let sum: f64 = analysis_bands()
            .iter()
            .map(|b| relative_power(&s, b, &broadband()).unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-6);
        // boundary bin at 4 Hz belongs to the lower band only
        assert!(in_band(4.0, &BandSpec::new(0.5, 4.0), &broadband()));
        assert!(!in_band(4.0, &BandSpec::new(4.0, 7.0), &broadband()));
        assert!(in_band(0.5, &BandSpec::new(0.5, 4.0), &broadband()));
    }

    #[test]
    fn zero_epoch_is_invalid() {
        assert!(relative_power(&spectrum(&[0.0; 128]), &BandSpec::new(0.5, 4.0), &broadband()).is_none());
    }

    #[test]
    fn exact_power_law_gives_unit_r2() {
        let f: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let p: Vec<f64> = f.iter().map(|v| 3.0 * v.powi(-2)).collect();
        assert!((loglog_fit_r2(&f, &p).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_spectrum_and_few_bins_are_invalid() {
        let f = [1.0, 2.0, 3.0, 4.0];
        assert!(loglog_fit_r2(&f, &[2.0; 4]).is_none());
        assert!(loglog_fit_r2(&f[..2], &[1.0, 2.0]).is_none());
        assert!(loglog_fit_r2(&f, &[1.0, 0.0, 2.0, 3.0]).is_none());
    }
}
