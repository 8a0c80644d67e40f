use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::auc;
use crate::error::{Error, Result};
use crate::stats::quantile;

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 20_240_101;
/// Fewer subjects than this give no interval.
pub const MIN_BOOTSTRAP_SUBJECTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn add(self, o: ConfusionCounts) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| (self.tp + self.tn) as f64 / n as f64)
    }

    pub fn sensitivity(&self) -> Option<f64> {
        let p = self.tp + self.fn_;
        (p > 0).then(|| self.tp as f64 / p as f64)
    }

    pub fn specificity(&self) -> Option<f64> {
        let n = self.tn + self.fp;
        (n > 0).then(|| self.tn as f64 / n as f64)
    }

    /// `2TP / (2TP + FP + FN)`.
    pub fn f1(&self) -> Option<f64> {
        let d = 2 * self.tp + self.fp + self.fn_;
        (d > 0).then(|| (2 * self.tp) as f64 / d as f64)
    }

    /// Cohen's kappa in the integer form
    /// `2(TP·TN − FN·FP) / ((TP+FP)(FP+TN) + (TP+FN)(FN+TN))`,
    /// algebraically equal to `(p_o − p_e) / (1 − p_e)`. `None` when chance
    /// agreement is already perfect.
    pub fn kappa(&self) -> Option<f64> {
        let (tp, fp, tn, fn_) = (self.tp as i128, self.fp as i128, self.tn as i128, self.fn_ as i128);
        let num = 2 * (tp * tn - fn_ * fp);
        let den = (tp + fp) * (fp + tn) + (tp + fn_) * (fn_ + tn);
        (den != 0).then(|| num as f64 / den as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub auc: Option<f64>,
    pub kappa: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub threshold: f64,
    pub counts: ConfusionCounts,
}

impl MetricEntry {
    pub fn from_counts(counts: ConfusionCounts, auc: Option<f64>, threshold: f64) -> Self {
        MetricEntry {
            auc,
            kappa: counts.kappa(),
            f1: counts.f1(),
            accuracy: counts.accuracy(),
            sensitivity: counts.sensitivity(),
            specificity: counts.specificity(),
            threshold,
            counts,
        }
    }
}

/// Threshold metrics with `score > threshold` as positive, plus the
/// threshold-free AUC (missing when one class is absent).
pub fn compute_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<MetricEntry> {
    if scores.len() != labels.len() {
        return Err(Error::validation("scores and labels differ in length"));
    }
    let predicted: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();
    let counts = ConfusionCounts::from_predictions(&predicted, labels);
    Ok(MetricEntry::from_counts(counts, auc(scores, labels).ok(), threshold))
}

/// Threshold at which sensitivity and specificity are closest, placed midway
/// between adjacent distinct scores (lowest such threshold on ties).
pub fn equal_error_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::validation("equal-error threshold needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // threshold below everything: all predicted positive
    let mut best_t = scores[order[0]] - 1.0;
    let mut best_gap = 1.0f64;
    let (mut fn_, mut tn) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        while i < order.len() && scores[order[i]] == v {
            if labels[order[i]] {
                fn_ += 1;
            } else {
                tn += 1;
            }
            i += 1;
        }
        let sens = (n_pos - fn_) as f64 / n_pos as f64;
        let spec = tn as f64 / n_neg as f64;
        let gap = (sens - spec).abs();
        if gap < best_gap {
            best_gap = gap;
            best_t = if i < order.len() { 0.5 * (v + scores[order[i]]) } else { v + 1.0 };
        }
    }
    Ok(best_t)
}

/// Percentile bootstrap over subjects of `statistic`; `None` with fewer than
/// ten values. Deterministic in `seed`.
pub fn bootstrap_interval(
    values: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
    statistic: impl Fn(&mut [f64]) -> f64,
) -> Option<(f64, f64)> {
    let n = values.len();
    if n < MIN_BOOTSTRAP_SUBJECTS || resamples == 0 || !(level > 0.0 && level < 1.0) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = values[rng.random_range(0..n)];
            }
            statistic(&mut buf)
        })
        .collect();
    stats.sort_unstable_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Some((quantile(&stats, alpha), quantile(&stats, 1.0 - alpha)))
}

pub fn median_statistic(v: &mut [f64]) -> f64 {
    crate::stats::median_in_place(v).unwrap_or(f64::NAN)
}

pub fn mean_statistic(v: &mut [f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
