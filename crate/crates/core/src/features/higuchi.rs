//! Higuchi fractal dimension.

use crate::stats::line_fit;

/// Default largest scale for 1-s epochs at 64 Hz.
pub const DEFAULT_K_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiguchiEstimate {
    /// Clamped to `[1, 2]`.
    pub fd: f64,
    /// Negated slope of the log–log fit before clamping.
    pub raw: f64,
    pub clamped: bool,
}

/// Normalised curve length `L_m(k)` for offset `m` (1-based, `1 ≤ m ≤ k`).
pub fn curve_length(x: &[f64], m: usize, k: usize) -> Option<f64> {
    let n = x.len();
    if m == 0 || k == 0 || m > n {
        return None;
    }
    let count = (n - m) / k;
    if count == 0 {
        return None;
    }
    let start = m - 1;
    let sum: f64 = (1..=count)
        .map(|i| (x[start + i * k] - x[start + (i - 1) * k]).abs())
        .sum();
    Some(sum * (n - 1) as f64 / (count * k * k) as f64)
}

/// Mean of `L_m(k)` over `m = 1..=k`.
pub fn mean_curve_length(x: &[f64], k: usize) -> Option<f64> {
    let lengths: Option<Vec<f64>> = (1..=k).map(|m| curve_length(x, m, k)).collect();
    let lengths = lengths?;
    Some(lengths.iter().sum::<f64>() / k as f64)
}

/// Fractal dimension of one epoch from scales `1..=k_max`. `None` when the
/// epoch is too short or has zero curve length at some scale.
pub fn higuchi_fd(x: &[f64], k_max: usize) -> Option<HiguchiEstimate> {
    if k_max < 2 || x.len() < 2 * k_max {
        return None;
    }
    let mut log_k = Vec::with_capacity(k_max);
    let mut log_l = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let l = mean_curve_length(x, k)?;
        if !(l > 0.0 && l.is_finite()) {
            return None;
        }
        log_k.push((k as f64).ln());
        log_l.push(l.ln());
    }
    let fit = line_fit(&log_k, &log_l)?;
    let raw = -fit.slope;
    let fd = raw.clamp(1.0, 2.0);
    Some(HiguchiEstimate {
        fd,
        raw,
        clamped: fd != raw,
    })
}
