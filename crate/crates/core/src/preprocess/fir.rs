use std::f64::consts::PI;

use crate::fft::convolve;

/// Windowed-sinc low-pass taps (Hamming window), normalised to unit DC gain.
pub fn hamming_lowpass(length: usize, cutoff: f64, fs: f64) -> Vec<f64> {
    let m = (length - 1) as f64 / 2.0;
    let fc = cutoff / fs;
    let mut h: Vec<f64> = (0..length)
        .map(|n| {
            let t = n as f64 - m;
            let sinc = if t == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * t).sin() / (PI * t) };
            let w = if length == 1 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * PI * n as f64 / (length - 1) as f64).cos()
            };
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Apply symmetric taps with the group delay removed: output `n` is centred on
/// input `n`; samples beyond either end count as zero.
pub fn filter_centered(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let delay = (taps.len() - 1) / 2;
    let full = convolve(x, taps);
    full[delay..delay + x.len()].to_vec()
}

/// Magnitude of the FIR response at `f` Hz.
pub fn magnitude(taps: &[f64], f: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * f / fs;
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, h)| {
        (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin())
    });
    (re * re + im * im).sqrt()
}
