//! Labelled synthetic neonatal EEG.
//!
//! Each electrode carries independent band-limited 1/f noise. A schedule of
//! blocks alternates TA (bursts and inter-bursts of 3–10 s) with non-TA
//! activity (continuous, mid-amplitude segments). Every interval gets its own
//! peak-to-peak target per electrode, and gain changes are blended with
//! raised-cosine ramps so no sample-level discontinuity marks a boundary.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_io::{Annotation, AnnotationTrack, Label, Recording, Scope};

pub const ELECTRODES: [&str; 5] = ["F3", "F4", "T3", "T4", "Cz"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    pub fs: f64,
    /// µV peak-to-peak.
    pub burst_amp: (f64, f64),
    pub interburst_amp: (f64, f64),
    pub nonta_amp: (f64, f64),
    /// Seconds, burst / inter-burst / non-TA segment length.
    pub segment_durations: (f64, f64),
    /// Seconds, base length of a TA + non-TA block pair.
    pub block_durations: (f64, f64),
    pub ta_fraction: f64,
    /// µV RMS of additive low-passed noise.
    pub noise_floor: f64,
    /// Carrier pass band, Hz.
    pub carrier_band: (f64, f64),
    /// Seconds, width of the gain cross-fade at each boundary.
    pub ramp: f64,
    pub electrodes: Vec<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            duration: 1800.0,
            fs: 256.0,
            burst_amp: (50.0, 150.0),
            interburst_amp: (25.0, 50.0),
            nonta_amp: (40.0, 80.0),
            segment_durations: (3.0, 10.0),
            block_durations: (120.0, 360.0),
            ta_fraction: 0.5,
            noise_floor: 2.0,
            carrier_band: (0.5, 12.0),
            ramp: 0.25,
            electrodes: ELECTRODES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && 0.0 < a && a <= b;
        let checks = [
            (self.duration.is_finite() && self.duration >= 10.0, "duration must be at least 10 s"),
            (self.fs.is_finite() && self.fs >= 64.0, "sample rate must be at least 64 Hz"),
            (range_ok(self.burst_amp), "burst amplitude range"),
            (range_ok(self.interburst_amp), "inter-burst amplitude range"),
            (range_ok(self.nonta_amp), "non-TA amplitude range"),
            (range_ok(self.segment_durations), "segment duration range"),
            (range_ok(self.block_durations), "block duration range"),
            ((0.0..=1.0).contains(&self.ta_fraction), "ta_fraction must lie in [0, 1]"),
            (self.noise_floor.is_finite() && self.noise_floor >= 0.0, "noise floor must be >= 0"),
            (
                range_ok(self.carrier_band) && self.carrier_band.1 < self.fs / 2.0,
                "carrier band must lie below Nyquist",
            ),
            (self.ramp >= 0.0 && self.ramp < self.segment_durations.0, "ramp shorter than the shortest segment"),
            (!self.electrodes.is_empty(), "at least one electrode"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::validation(format!("invalid synthetic config: {msg}"))),
            None => Ok(()),
        }
    }
}

/// One constant-gain stretch of the schedule, in samples.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    start: usize,
    end: usize,
    label: Label,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Split `[start, end)` into segments of random length, folding a remainder
/// shorter than `min_tail` into the previous segment.
fn split(rng: &mut ChaCha8Rng, start: usize, end: usize, range: (f64, f64), fs: f64, min_tail: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut s = start;
    while s < end {
        let len = ((uniform(rng, range) * fs).round() as usize).max(1);
        let e = (s + len).min(end);
        if e - s < min_tail && !out.is_empty() {
            out.last_mut().unwrap().1 = e;
        } else {
            out.push((s, e));
        }
        s = e;
    }
    out
}

/// Block and interval layout; also returns the TA / non-TA blocks.
fn schedule(cfg: &SynthConfig, rng: &mut ChaCha8Rng, n: usize) -> (Vec<(usize, usize, bool)>, Vec<Interval>) {
    let fs = cfg.fs;
    let min_tail = fs.round() as usize;
    let mut blocks: Vec<(usize, usize, bool)> = Vec::new();
    let mut s = 0;
    let mut ta = rng.random_bool(0.5);
    while s < n {
        let base = uniform(rng, cfg.block_durations);
        let frac = if ta { cfg.ta_fraction } else { 1.0 - cfg.ta_fraction };
        let len = (2.0 * frac * base * fs).round() as usize;
        if len > 0 {
            let e = (s + len).min(n);
            match blocks.last_mut() {
                Some(last) if e - s < min_tail => last.1 = e,
                Some(last) if last.2 == ta => last.1 = e,
                _ => blocks.push((s, e, ta)),
            }
            s = e;
        }
        ta = !ta;
    }

    let mut intervals = Vec::new();
    for &(bs, be, is_ta) in &blocks {
        let mut burst = rng.random_bool(0.5);
        for (s, e) in split(rng, bs, be, cfg.segment_durations, fs, min_tail) {
            let label = match (is_ta, burst) {
                (true, true) => Label::Burst,
                (true, false) => Label::Interburst,
                (false, _) => Label::NonTa,
            };
            intervals.push(Interval { start: s, end: e, label });
            burst = !burst;
        }
    }
    (blocks, intervals)
}

/// Gaussian noise shaped to `1/f` power inside `band`, zero elsewhere.
fn pink_band_noise(rng: &mut ChaCha8Rng, n: usize, fs: f64, band: (f64, f64), planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        *c *= if f >= band.0 && f <= band.1 { 1.0 / f.sqrt() } else { 0.0 };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

fn peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    hi - lo
}

/// Samples of an interval away from the cross-fades.
fn core(iv: &Interval, half_ramp: usize) -> (usize, usize) {
    let s = iv.start + half_ramp;
    let e = iv.end.saturating_sub(half_ramp);
    if s < e {
        (s, e)
    } else {
        (iv.start, iv.end)
    }
}

/// Piecewise-constant gains joined by raised-cosine cross-fades centred on
/// each boundary.
fn gain_trace(intervals: &[Interval], gains: &[f64], n: usize, ramp: usize) -> Vec<f64> {
    let mut g = vec![0.0; n];
    for (iv, &k) in intervals.iter().zip(gains) {
        g[iv.start..iv.end].iter_mut().for_each(|v| *v = k);
    }
    if ramp >= 2 {
        for w in 1..intervals.len() {
            let b = intervals[w].start;
            let (g0, g1) = (gains[w - 1], gains[w]);
            let s = b.saturating_sub(ramp / 2);
            let e = (b + ramp - ramp / 2).min(n);
            for (i, v) in g.iter_mut().enumerate().take(e).skip(s) {
                let u = (i - s) as f64 / ramp as f64;
                *v = g0 + (g1 - g0) * 0.5 * (1.0 - (PI * u).cos());
            }
        }
    }
    g
}

fn amp_range(cfg: &SynthConfig, label: Label) -> (f64, f64) {
    match label {
        Label::Burst => cfg.burst_amp,
        Label::Interburst => cfg.interburst_amp,
        _ => cfg.nonta_amp,
    }
}

/// A recording of referential electrodes in µV plus global annotations.
/// Deterministic in `cfg`.
pub fn generate_recording(cfg: &SynthConfig) -> Result<(Recording, AnnotationTrack)> {
    cfg.validate()?;
    let fs = cfg.fs;
    let n = (cfg.duration * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (blocks, intervals) = schedule(cfg, &mut rng, n);
    let ramp = (cfg.ramp * fs).round() as usize;
    let half_ramp = ramp / 2;
    let mut planner = FftPlanner::new();

    let mut channels = Vec::with_capacity(cfg.electrodes.len());
    for _ in &cfg.electrodes {
        let mut erng = ChaCha8Rng::seed_from_u64(rng.random::<u64>());
        let carrier = pink_band_noise(&mut erng, n, fs, cfg.carrier_band, &mut planner);
        let gains: Vec<f64> = intervals
            .iter()
            .map(|iv| {
                let target = uniform(&mut erng, amp_range(cfg, iv.label));
                let (s, e) = core(iv, half_ramp);
                let pp = peak_to_peak(&carrier[s..e]);
                if pp > 0.0 {
                    target / pp
                } else {
                    0.0
                }
            })
            .collect();
        let g = gain_trace(&intervals, &gains, n, ramp);
        let noise = if cfg.noise_floor > 0.0 {
            let mut v = pink_band_noise(&mut erng, n, fs, (0.5, 30.0), &mut planner);
            let rms = (v.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
            let k = if rms > 0.0 { cfg.noise_floor / rms } else { 0.0 };
            v.iter_mut().for_each(|x| *x *= k);
            v
        } else {
            vec![0.0; n]
        };
        channels.push(carrier.iter().zip(&g).zip(&noise).map(|((c, g), w)| c * g + w).collect());
    }
    let rec = Recording::new(cfg.electrodes.clone(), fs, channels)?;

    let t = |i: usize| i as f64 / fs;
    let mut entries = Vec::new();
    for &(s, e, is_ta) in &blocks {
        let label = if is_ta { Label::Ta } else { Label::NonTa };
        entries.push(Annotation::new(t(s), t(e) - t(s), Scope::Global, label));
    }
    for iv in intervals.iter().filter(|iv| iv.label != Label::NonTa) {
        entries.push(Annotation::new(t(iv.start), t(iv.end) - t(iv.start), Scope::Global, iv.label));
    }
    entries.sort_by(|a, b| a.onset.total_cmp(&b.onset).then(a.label.cmp(&b.label).reverse()));
    let ann = AnnotationTrack::new(entries)?;
    Ok((rec, ann))
}

/// Peak-to-peak of every burst core on every electrode; exposed for checks.
pub fn burst_core_peak_to_peak(rec: &Recording, ann: &AnnotationTrack, ramp: f64) -> Vec<f64> {
    let fs = rec.sample_rate();
    let half = ((ramp * fs).round() as usize) / 2;
    let mut out = Vec::new();
    for a in ann.entries().iter().filter(|a| a.label == Label::Burst) {
        let iv = Interval {
            start: (a.onset * fs).round() as usize,
            end: (a.end() * fs).round() as usize,
            label: a.label,
        };
        let (s, e) = core(&iv, half);
        for ch in rec.samples() {
            out.push(peak_to_peak(&ch[s..e]));
        }
    }
    out
}
