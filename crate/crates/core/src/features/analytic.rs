//! Features read off the analytic signal: envelope, instantaneous frequency
//! and the envelope–derivative operator.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::fft::analytic_signal;
use crate::stats::median_in_place;

/// Analytic amplitude below this fraction of the channel maximum leaves the
/// phase undefined.
pub const PHASE_AMPLITUDE_FLOOR: f64 = 1e-8;

/// `e(n) = |x(n) + jH[x](n)|²`.
pub fn envelope(z: &[Complex64]) -> Vec<f64> {
    z.iter().map(|c| c.norm_sqr()).collect()
}

/// Median over the valid samples of each epoch; `None` if the epoch has none.
pub fn epoch_medians(values: &[f64], usable: &[bool], slices: &[(usize, usize)]) -> Vec<Option<f64>> {
    let mut buf = Vec::new();
    slices
        .iter()
        .map(|&(s, e)| {
            buf.clear();
            buf.extend((s..e).filter(|&i| usable[i]).map(|i| values[i]));
            median_in_place(&mut buf)
        })
        .collect()
}

/// Per-epoch median envelope of a band-filtered channel (µV²). The analytic
/// signal is taken over the whole channel before epoching.
pub fn envelope_feature(x_band: &[f64], valid: &[bool], slices: &[(usize, usize)]) -> Vec<Option<f64>> {
    let z = analytic_signal(x_band);
    epoch_medians(&envelope(&z), valid, slices)
}

/// Instantaneous frequency by central differences of the analytic phase:
/// `f(n) = fs/(4π) · ((φ(n+1) − φ(n−1)) mod 2π)`, in `[0, fs/2)`.
///
/// Returns the per-sample estimate and whether it is defined (interior sample,
/// both neighbours above the amplitude floor).
pub fn instantaneous_frequency(z: &[Complex64], fs: f64) -> (Vec<f64>, Vec<bool>) {
    let n = z.len();
    let mut f = vec![0.0; n];
    let mut defined = vec![false; n];
    let peak = z.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let floor = PHASE_AMPLITUDE_FLOOR * peak;
    for i in 1..n.saturating_sub(1) {
        let (a, b) = (z[i - 1], z[i + 1]);
        if a.norm() <= floor || b.norm() <= floor {
            continue;
        }
        let d = (b.arg() - a.arg()).rem_euclid(2.0 * PI);
        f[i] = fs / (4.0 * PI) * d;
        defined[i] = true;
    }
    (f, defined)
}

/// Per-epoch median instantaneous frequency (Hz) of a band-filtered channel.
pub fn instantaneous_frequency_feature(
    x_band: &[f64],
    valid: &[bool],
    fs: f64,
    slices: &[(usize, usize)],
) -> Vec<Option<f64>> {
    let z = analytic_signal(x_band);
    if_epochs(&z, valid, fs, slices)
}

pub(crate) fn if_epochs(z: &[Complex64], valid: &[bool], fs: f64, slices: &[(usize, usize)]) -> Vec<Option<f64>> {
    let (f, defined) = instantaneous_frequency(z, fs);
    let usable: Vec<bool> = defined.iter().zip(valid).map(|(a, b)| *a && *b).collect();
    epoch_medians(&f, &usable, slices)
}

/// Envelope–derivative operator trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EdoTrace {
    pub values: Vec<f64>,
    /// Samples that came out below `-1e-6·max` before clamping to zero.
    pub flagged: usize,
}

/// Envelope–derivative operator of `x` with `h = H[x]`:
///
/// `Γ(n) = ¼[x²(n+1) + x²(n−1) + h²(n+1) + h²(n−1)] − ½[x(n+1)x(n−1) + h(n+1)h(n−1)]`
///
/// which equals `¼[(x(n+1) − x(n−1))² + (h(n+1) − h(n−1))²]` and so is
/// non-negative; rounding negatives are clamped. The two end samples copy
/// their neighbour. `None` below three samples.
pub fn envelope_derivative_operator(x: &[f64]) -> Option<EdoTrace> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    let h: Vec<f64> = analytic_signal(x).iter().map(|c| c.im).collect();
    let mut g = vec![0.0; n];
    for i in 1..n - 1 {
        let (xp, xm, hp, hm) = (x[i + 1], x[i - 1], h[i + 1], h[i - 1]);
        g[i] = 0.25 * (xp * xp + xm * xm + hp * hp + hm * hm) - 0.5 * (xp * xm + hp * hm);
    }
    g[0] = g[1];
    g[n - 1] = g[n - 2];
    let max = g.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut flagged = 0;
    for v in &mut g {
        if *v < 0.0 {
            if *v < -1e-6 * max {
                flagged += 1;
            }
            *v = 0.0;
        }
    }
    if flagged > 0 {
        log::warn!("envelope-derivative operator: {flagged} samples clamped from below -1e-6·max");
    }
    Some(EdoTrace { values: g, flagged })
}
