//! From burst confidence score to TA activity: moving median per channel,
//! masked channel average, peak-to-peak spline envelope, threshold.

pub mod spline;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{auc, ScoreTrace};
use crate::error::{Error, Result};
use crate::signal_io::fmt_f64;
use spline::NaturalSpline;

pub const DEFAULT_MEDIAN_WINDOW: f64 = 3.0;
pub const DEFAULT_THRESHOLD: f64 = 2.06;
pub const DEFAULT_EPOCH_MINUTES: f64 = 20.0;
pub const MIN_SEPARATION_RANGE: (f64, f64) = (2.5, 50.0);
/// Every 16th sample (4 Hz at 64 Hz) when scoring candidate separations.
pub const SWEEP_DECIMATION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    /// Seconds.
    pub median_window: f64,
    /// Seconds.
    pub min_separation: f64,
    pub threshold: f64,
}

impl EnvelopeParams {
    pub fn new(min_separation: f64) -> Self {
        EnvelopeParams {
            median_window: DEFAULT_MEDIAN_WINDOW,
            min_separation,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = MIN_SEPARATION_RANGE;
        if !(self.median_window > 0.0 && self.median_window.is_finite()) {
            return Err(Error::validation(format!("median window {} must be > 0", self.median_window)));
        }
        if !(self.min_separation >= lo && self.min_separation <= hi) {
            return Err(Error::validation(format!(
                "minimum peak separation {} s outside [{lo}, {hi}]",
                self.min_separation
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::validation("threshold must be finite"));
        }
        Ok(())
    }
}

/// `{2.5, 5.0, …, 50.0}`.
pub fn min_separation_grid() -> Vec<f64> {
    (1..=20).map(|k| 2.5 * k as f64).collect()
}

/// Odd window length in samples for `window` seconds (at least 3).
pub fn median_window_samples(window: f64, fs: f64) -> usize {
    let w = ((window * fs).round() as usize).max(3);
    w | 1
}

/// Centred running median; the window shrinks at the edges.
pub fn moving_median(x: &[f64], window: f64, fs: f64) -> Vec<f64> {
    let n = x.len();
    let half = median_window_samples(window, fs) / 2;
    let mut sorted: Vec<f64> = Vec::with_capacity(2 * half + 1);
    let insert = |s: &mut Vec<f64>, v: f64| {
        let at = s.partition_point(|&u| u.total_cmp(&v).is_lt());
        s.insert(at, v);
    };
    for &v in x.iter().take(half.min(n)) {
        insert(&mut sorted, v);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i + half < n {
            insert(&mut sorted, x[i + half]);
        }
        if i > half {
            let v = x[i - half - 1];
            let at = sorted.partition_point(|&u| u.total_cmp(&v).is_lt());
            sorted.remove(at);
        }
        let k = sorted.len();
        out.push(if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        });
    }
    out
}

/// Per-sample mean over the channels valid at that sample. Where no channel
/// is valid the plain mean is returned and the sample is marked invalid.
pub fn average_channels(traces: &[ScoreTrace]) -> Result<ScoreTrace> {
    let first = traces.first().ok_or_else(|| Error::validation("no channels to average"))?;
    let n = first.values.len();
    if traces.iter().any(|t| t.values.len() != n || t.valid.len() != n) {
        return Err(Error::validation("channel score traces differ in length"));
    }
    let mut values = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let (sum, count) = traces
            .iter()
            .filter(|t| t.valid[i])
            .fold((0.0, 0usize), |(s, c), t| (s + t.values[i], c + 1));
        if count > 0 {
            values.push(sum / count as f64);
            valid.push(true);
        } else {
            values.push(traces.iter().map(|t| t.values[i]).sum::<f64>() / traces.len() as f64);
            valid.push(false);
        }
    }
    Ok(ScoreTrace {
        channel: "mean".into(),
        sample_rate: first.sample_rate,
        values,
        valid,
    })
}

/// Moving median of every channel followed by the masked channel average.
pub fn filtered_score(traces: &[ScoreTrace], median_window: f64) -> Result<ScoreTrace> {
    let smoothed: Vec<ScoreTrace> = traces
        .iter()
        .map(|t| ScoreTrace {
            values: moving_median(&t.values, median_window, t.sample_rate),
            ..t.clone()
        })
        .collect();
    average_channels(&smoothed)
}

/// Interior local maxima: strictly above both neighbours, with a flat top
/// reported at its midpoint (lower middle for even widths).
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Maxima accepted in order of decreasing height (earlier first on ties),
/// dropping any within `min_sep` samples of one already accepted. Sorted by position.
pub fn select_peaks(x: &[f64], min_sep: usize) -> Vec<usize> {
    let mut cand = local_maxima(x);
    cand.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut taken = vec![false; x.len()];
    let mut accepted = Vec::new();
    for p in cand {
        let lo = p.saturating_sub(min_sep.saturating_sub(1));
        let hi = (p + min_sep).min(x.len());
        if taken[lo..hi].iter().any(|&t| t) {
            continue;
        }
        taken[p] = true;
        accepted.push(p);
    }
    accepted.sort_unstable();
    accepted
}

/// Natural cubic spline through the selected peaks, evaluated at every
/// sample and held flat beyond the outermost peaks. With one peak the
/// envelope is flat at its height; with no interior maximum it is the trace.
pub fn peak_spline_envelope(x: &[f64], min_sep: f64, fs: f64) -> Vec<f64> {
    let sep = ((min_sep * fs).round() as usize).max(2);
    let peaks = select_peaks(x, sep);
    match peaks.len() {
        0 => x.to_vec(),
        1 => vec![x[peaks[0]]; x.len()],
        _ => {
            let xs = peaks.iter().map(|&p| p as f64).collect();
            let ys = peaks.iter().map(|&p| x[p]).collect();
            NaturalSpline::new(xs, ys)
                .expect("peak positions are strictly increasing")
                .eval_sorted((0..x.len()).map(|i| i as f64))
        }
    }
}

/// Filtered score of one training recording with its per-sample TA state.
#[derive(Debug, Clone)]
pub struct SweepRecording {
    pub filtered: Vec<f64>,
    pub sample_rate: f64,
    pub ta: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationSweep {
    pub best: f64,
    /// `(candidate, mean AUC)` in grid order; NaN where no recording had both classes.
    pub table: Vec<(f64, f64)>,
}

/// Envelope AUC against TA labels on every `decimation`-th labelled sample.
pub fn envelope_auc(env: &[f64], ta: &[Option<bool>], decimation: usize) -> Option<f64> {
    let (s, l): (Vec<f64>, Vec<bool>) = (0..env.len())
        .step_by(decimation.max(1))
        .filter_map(|i| ta[i].map(|t| (env[i], t)))
        .unzip();
    auc(&s, &l).ok()
}

/// Candidate with the highest mean per-recording envelope AUC; ties go to
/// the smaller separation.
pub fn optimize_min_separation(recordings: &[SweepRecording], grid: &[f64]) -> Result<SeparationSweep> {
    if recordings.is_empty() {
        return Err(Error::validation("no training recordings for the peak separation sweep"));
    }
    if grid.is_empty() {
        return Err(Error::validation("empty peak separation grid"));
    }
    let mut table = Vec::with_capacity(grid.len());
    for &sep in grid {
        let aucs: Vec<f64> = recordings
            .iter()
            .filter_map(|r| envelope_auc(&peak_spline_envelope(&r.filtered, sep, r.sample_rate), &r.ta, SWEEP_DECIMATION))
            .collect();
        let mean = if aucs.is_empty() {
            f64::NAN
        } else {
            aucs.iter().sum::<f64>() / aucs.len() as f64
        };
        table.push((sep, mean));
    }
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &(sep, m) in &table {
        if m > best.1 {
            best = (sep, m);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        log::warn!("no training recording has both TA and non-TA samples; using the smallest separation");
    }
    Ok(SeparationSweep { best: best.0, table })
}

/// One fixed-length evaluation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochDecision {
    pub start_s: f64,
    pub end_s: f64,
    /// Ground truth when the epoch is entirely TA or entirely non-TA.
    pub truth: Option<bool>,
    /// Mean envelope over the epoch.
    pub score: f64,
    pub predicted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaDecision {
    pub envelope: Vec<f64>,
    pub binary_ta: Vec<bool>,
    pub epochs: Vec<EpochDecision>,
}

/// Threshold the envelope per sample and summarise complete `epoch_minutes`
/// epochs; a trailing partial epoch is not scored.
pub fn decide_ta(envelope: &[f64], threshold: f64, epoch_minutes: f64, fs: f64, ta: &[Option<bool>]) -> TaDecision {
    let binary_ta: Vec<bool> = envelope.iter().map(|&e| e > threshold).collect();
    let len = (epoch_minutes * 60.0 * fs).round() as usize;
    let mut epochs = Vec::new();
    if len > 0 {
        for k in 0..envelope.len() / len {
            let (s, e) = (k * len, (k + 1) * len);
            let truth = match ta.get(s) {
                Some(&Some(first)) if ta[s..e].iter().all(|&v| v == Some(first)) => Some(first),
                _ => None,
            };
            let score = envelope[s..e].iter().sum::<f64>() / len as f64;
            epochs.push(EpochDecision {
                start_s: s as f64 / fs,
                end_s: e as f64 / fs,
                truth,
                score,
                predicted: score > threshold,
            });
        }
    }
    TaDecision {
        envelope: envelope.to_vec(),
        binary_ta,
        epochs,
    }
}

/// Write `t_s,score_mean,envelope,binary_ta` and a TOML sidecar with the parameters.
pub fn write_envelope_csv(
    path: &Path,
    fs: f64,
    score_mean: &[f64],
    decision: &TaDecision,
    params: &EnvelopeParams,
) -> Result<()> {
    let mut out = String::from("t_s,score_mean,envelope,binary_ta\n");
    for (i, (s, (e, b))) in score_mean
        .iter()
        .zip(decision.envelope.iter().zip(&decision.binary_ta))
        .enumerate()
    {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(i as f64 / fs), fmt_f64(*s), fmt_f64(*e), u8::from(*b));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;

    #[derive(Serialize)]
    struct Sidecar<'a> {
        sample_rate: f64,
        params: &'a EnvelopeParams,
        epoch_minutes: f64,
    }
    let meta = toml::to_string(&Sidecar {
        sample_rate: fs,
        params,
        epoch_minutes: DEFAULT_EPOCH_MINUTES,
    })
    .map_err(|e| Error::validation(format!("cannot serialise envelope metadata: {e}")))?;
    let side = path.with_extension("meta.toml");
    fs::write(&side, meta).map_err(|e| Error::io(&side, e))
}
