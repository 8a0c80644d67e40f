//! Butterworth design as cascaded second-order sections, and zero-phase
//! (forward-backward) application.
//!
//! Design follows the usual analog-prototype route: prototype poles on the
//! left half of the unit circle, frequency transformation with pre-warped
//! corners, bilinear transform, then pole pairing into biquads.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// One biquad `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Steady-state transposed direct-form II state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let y = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z2 = b2 - a2 * y;
        let z1 = b1 - a1 * y + z2;
        [z1, z2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ButterKind {
    Bandpass { low: f64, high: f64 },
    Highpass { cutoff: f64 },
}

/// A designed digital Butterworth filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    pub kind: ButterKind,
    pub order: usize,
    pub fs: f64,
    pub sections: Vec<Biquad>,
}

fn prototype_poles(order: usize) -> Vec<Complex64> {
    (1..=order)
        .map(|k| {
            let theta = PI * (2 * k + order - 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f / fs).tan()
}

fn bilinear(p: Complex64, fs: f64) -> Complex64 {
    let fs2 = 2.0 * fs;
    (fs2 + p) / (fs2 - p)
}

/// Pair digital poles into denominators: conjugate pairs first, then real
/// poles two at a time, a single leftover real pole as a first-order section.
fn pair_poles(poles: &[Complex64]) -> Result<Vec<[f64; 3]>> {
    let tol = 1e-10;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= tol).map(|p| p.re).collect();
    let n_neg = poles.iter().filter(|p| p.im < -tol).count();
    if n_neg != complex.len() {
        return Err(Error::FilterDesign("poles do not form conjugate pairs".into()));
    }
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.total_cmp(b));
    let mut dens: Vec<[f64; 3]> = complex.iter().map(|p| [1.0, -2.0 * p.re, p.norm_sqr()]).collect();
    for pair in real.chunks(2) {
        match *pair {
            [r1, r2] => dens.push([1.0, -(r1 + r2), r1 * r2]),
            [r] => dens.push([1.0, -r, 0.0]),
            _ => unreachable!(),
        }
    }
    Ok(dens)
}

impl Butterworth {
    pub fn bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<Self> {
        let nyq = fs / 2.0;
        if !(order > 0 && low > 0.0 && low < high && high < nyq) {
            return Err(Error::validation(format!(
                "bandpass {low}-{high} Hz of order {order} invalid at fs {fs} Hz"
            )));
        }
        check_ratio(low / fs)?;
        check_ratio((nyq - high) / fs)?;
        let w1 = prewarp(low, fs);
        let w2 = prewarp(high, fs);
        let bw = w2 - w1;
        let w0 = (w1 * w2).sqrt();
        let mut poles = Vec::with_capacity(2 * order);
        for p in prototype_poles(order) {
            let half = p * (bw / 2.0);
            let disc = (half * half - w0 * w0).sqrt();
            poles.push(bilinear(half + disc, fs));
            poles.push(bilinear(half - disc, fs));
        }
        let dens = pair_poles(&poles)?;
        // order zeros at z = 1 and order at z = -1: one of each per section
        let sections = dens.into_iter().map(|a| Biquad { b: [1.0, 0.0, -1.0], a }).collect();
        let centre = 2.0 * (w0 / (2.0 * fs)).atan();
        Self::finish(ButterKind::Bandpass { low, high }, order, fs, sections, centre)
    }

    pub fn highpass(order: usize, cutoff: f64, fs: f64) -> Result<Self> {
        let nyq = fs / 2.0;
        if !(order > 0 && cutoff > 0.0 && cutoff < nyq) {
            return Err(Error::validation(format!(
                "highpass {cutoff} Hz of order {order} invalid at fs {fs} Hz"
            )));
        }
        check_ratio(cutoff / fs)?;
        let w0 = prewarp(cutoff, fs);
        let poles: Vec<Complex64> = prototype_poles(order)
            .into_iter()
            .map(|p| bilinear(w0 / p, fs))
            .collect();
        let dens = pair_poles(&poles)?;
        let sections = dens
            .into_iter()
            .map(|a| {
                let b = if a[2] == 0.0 { [1.0, -1.0, 0.0] } else { [1.0, -2.0, 1.0] };
                Biquad { b, a }
            })
            .collect();
        Self::finish(ButterKind::Highpass { cutoff }, order, fs, sections, PI)
    }

    fn finish(kind: ButterKind, order: usize, fs: f64, mut sections: Vec<Biquad>, norm_at: f64) -> Result<Self> {
        for s in &sections {
            let r = Complex64::new(s.a[1] * s.a[1] - 4.0 * s.a[2], 0.0).sqrt();
            let p1 = (-s.a[1] + r) / 2.0;
            let p2 = (-s.a[1] - r) / 2.0;
            if p1.norm() >= 1.0 - 1e-12 || p2.norm() >= 1.0 - 1e-12 {
                return Err(Error::FilterDesign(format!(
                    "pole on or outside the unit circle for {kind:?} at fs {fs}"
                )));
            }
        }
        let mut filt = Butterworth {
            kind,
            order,
            fs,
            sections: std::mem::take(&mut sections),
        };
        let g = filt.response_at_omega(norm_at).norm();
        if !(g.is_finite() && g > 1e-12) {
            return Err(Error::FilterDesign(format!("degenerate passband gain {g} for {kind:?}")));
        }
        for c in &mut filt.sections[0].b {
            *c /= g;
        }
        Ok(filt)
    }

    fn response_at_omega(&self, omega: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Complex frequency response of the single (causal) pass at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        self.response_at_omega(2.0 * PI * f / self.fs)
    }

    /// Number of poles of the digital filter.
    pub fn n_poles(&self) -> usize {
        self.sections.iter().map(|s| if s.a[2] == 0.0 { 1 } else { 2 }).sum()
    }

    /// Edge padding used by [`Butterworth::filtfilt`]: three times the filter order.
    pub fn pad_len(&self) -> usize {
        3 * self.n_poles()
    }

    /// Magnitude the Butterworth design promises at `f` Hz for one pass:
    /// `1 / sqrt(1 + ε^(2n))` with `ε` from the pre-warped analog frequency.
    pub fn designed_magnitude(&self, f: f64) -> f64 {
        let w = prewarp(f, self.fs);
        let n = self.order as i32;
        let eps = match self.kind {
            ButterKind::Bandpass { low, high } => {
                let (w1, w2) = (prewarp(low, self.fs), prewarp(high, self.fs));
                ((w * w - w1 * w2) / (w * (w2 - w1))).abs()
            }
            ButterKind::Highpass { cutoff } => prewarp(cutoff, self.fs) / w,
        };
        1.0 / (1.0 + eps.powi(2 * n)).sqrt()
    }

    /// Single causal pass with transposed direct-form II sections.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        self.filter_with_state(x, None)
    }

    fn filter_with_state(&self, x: &[f64], init: Option<f64>) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut scale = 1.0;
        for s in &self.sections {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            let (mut z1, mut z2) = match init {
                Some(x0) => {
                    let zi = s.step_state();
                    (zi[0] * x0 * scale, zi[1] * x0 * scale)
                }
                None => (0.0, 0.0),
            };
            scale *= (b0 + b1 + b2) / (1.0 + a1 + a2);
            for v in y.iter_mut() {
                let xin = *v;
                let out = b0 * xin + z1;
                z1 = b1 * xin - a1 * out + z2;
                z2 = b2 * xin - a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Zero-phase forward-backward filtering. Each end is extended by odd
    /// reflection over [`Butterworth::pad_len`] samples and each pass starts
    /// from the steady state for its first sample; the padding is trimmed.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        let n = x.len();
        if n <= pad {
            return Err(Error::validation(format!(
                "signal of {n} samples too short for zero-phase filtering (needs more than {pad})"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let fwd = self.filter_with_state(&ext, Some(ext[0]));
        let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
        let start = rev[0];
        rev = self.filter_with_state(&rev, Some(start));
        rev.reverse();
        Ok(rev[pad..pad + n].to_vec())
    }

    /// Half-width, in samples, beyond which the zero-phase impulse response
    /// stays below 1e-3 of its peak. Used to propagate rejected samples.
    pub fn support_half_width(&self) -> usize {
        let half = (self.fs * 30.0) as usize;
        let mut imp = vec![0.0; 2 * half + 1];
        imp[half] = 1.0;
        let Ok(h) = self.filtfilt(&imp) else {
            return half;
        };
        let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        h.iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 1e-3 * peak)
            .map(|(i, _)| i.abs_diff(half))
            .max()
            .unwrap_or(0)
    }

    /// Coefficients as CSV, one section per row: `b0,b1,b2,a0,a1,a2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("b0,b1,b2,a0,a1,a2\n");
        for s in &self.sections {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?}",
                s.b[0], s.b[1], s.b[2], s.a[0], s.a[1], s.a[2]
            );
        }
        out
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if r < 1e-5 {
        Err(Error::FilterDesign(format!(
            "corner within {r:e} of the band edge (relative to fs); coefficients would be ill-conditioned"
        )))
    } else {
        Ok(())
    }
}
