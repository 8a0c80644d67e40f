//! Leave-one-subject-out evaluation and the metric suite.

pub mod metrics;
mod report;

use serde::{Deserialize, Serialize};

pub use metrics::{
    bootstrap_interval, compute_metrics, equal_error_threshold, mean_statistic, median_statistic, ConfusionCounts,
    MetricEntry, DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_BOOTSTRAP_SEED,
};

use crate::classifier::{
    auc, epoch_scores, hold_to_samples, label_epochs, select_from_aucs, subject_feature_aucs, train_linear_svm_on,
    EpochScores, LabeledEpochs, LinearModel, SubjectAucs, TrainConfig,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signal_io::{AnnotationTrack, Label};
use crate::stats::median_in_place;
use crate::ta_envelope::{
    decide_ta, filtered_score, min_separation_grid, optimize_min_separation, peak_spline_envelope, EpochDecision,
    SweepRecording, DEFAULT_EPOCH_MINUTES, DEFAULT_MEDIAN_WINDOW, DEFAULT_THRESHOLD, SWEEP_DECIMATION,
};

/// One held-out subject and the subjects used to train for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test: usize,
    pub train: Vec<usize>,
}

pub fn loso_split(subject_ids: &[String]) -> Result<Vec<Fold>> {
    if subject_ids.len() < 2 {
        return Err(Error::validation(format!(
            "leave-one-subject-out needs at least 2 subjects, got {}",
            subject_ids.len()
        )));
    }
    for (i, s) in subject_ids.iter().enumerate() {
        if subject_ids[..i].contains(s) {
            return Err(Error::validation(format!("duplicate subject id '{s}'")));
        }
    }
    let n = subject_ids.len();
    Ok((0..n)
        .map(|test| Fold {
            test,
            train: (0..n).filter(|&j| j != test).collect(),
        })
        .collect())
}

/// Per-channel features of one subject with its annotations.
#[derive(Debug, Clone)]
pub struct SubjectData {
    pub name: String,
    pub matrices: Vec<FeatureMatrix>,
    pub annotations: AnnotationTrack,
}

impl SubjectData {
    fn n_samples(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.n_samples)
    }

    fn sample_rate(&self) -> f64 {
        self.matrices.first().map_or(64.0, |m| m.sample_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub median_window: f64,
    pub min_separation_grid: Vec<f64>,
    /// Threshold reported alongside the equal-error one.
    pub fixed_threshold: f64,
    pub epoch_minutes: f64,
    pub bootstrap_level: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train: TrainConfig::default(),
            median_window: DEFAULT_MEDIAN_WINDOW,
            min_separation_grid: min_separation_grid(),
            fixed_threshold: DEFAULT_THRESHOLD,
            epoch_minutes: DEFAULT_EPOCH_MINUTES,
            bootstrap_level: 0.95,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            bootstrap_seed: DEFAULT_BOOTSTRAP_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub subject: String,
    pub selected_features: Vec<String>,
    pub min_separation: f64,
    pub eer_threshold: f64,
    /// Burst vs inter-burst AUC of the channel-averaged epoch score; NaN if undefined.
    pub burst_auc: f64,
    /// Median over channels of the single-channel burst AUC.
    pub burst_auc_single: f64,
    pub burst_auc_channels: Vec<f64>,
    /// Per-sample TA detection at the equal-error threshold.
    pub ta: MetricEntry,
    pub ta_fixed: MetricEntry,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub start_s: f64,
    pub end_s: f64,
    pub truth: Option<bool>,
    pub score: f64,
}

impl From<&EpochDecision> for EpochRecord {
    fn from(e: &EpochDecision) -> Self {
        EpochRecord {
            start_s: e.start_s,
            end_s: e.end_s,
            truth: e.truth,
            score: e.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    /// Subjects with a defined value.
    pub n: usize,
    pub median: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoReport {
    pub n_subjects: usize,
    pub config: EvalConfig,
    pub aggregates: Vec<Aggregate>,
    /// Held-out samples of all folds, each at its fold's equal-error threshold.
    pub pooled_eer: MetricEntry,
    pub pooled_fixed: MetricEntry,
    /// Pure 20-minute epochs of all folds; AUC over the epoch mean envelope.
    pub pooled_epochs: MetricEntry,
    /// How many folds selected each feature.
    pub selection_counts: Vec<(String, usize)>,
    pub folds: Vec<FoldResult>,
}

fn nan_if_none(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Burst labels of a channel's epoch grid, `None` outside bursts/inter-bursts.
fn burst_labels(fm: &FeatureMatrix, ann: &AnnotationTrack, channel: &str) -> Vec<Option<bool>> {
    fm.epoch_centers
        .iter()
        .map(|&t| match ann.burst_label_at(channel, t) {
            Some(Label::Burst) => Some(true),
            Some(Label::Interburst) => Some(false),
            _ => None,
        })
        .collect()
}

fn labelled_auc(scores: &[Option<f64>], labels: &[Option<bool>]) -> Option<f64> {
    let (s, l): (Vec<f64>, Vec<bool>) = scores
        .iter()
        .zip(labels)
        .filter_map(|(s, l)| Some(((*s)?, (*l)?)))
        .unzip();
    auc(&s, &l).ok()
}

/// Mean over channels with a score at each epoch.
fn average_epoch_scores(per_channel: &[EpochScores]) -> Vec<Option<f64>> {
    let n = per_channel.iter().map(|e| e.scores.len()).min().unwrap_or(0);
    (0..n)
        .map(|r| {
            let v: Vec<f64> = per_channel.iter().filter_map(|e| e.scores[r]).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// Burst AUCs of a subject under `model`: (channel-averaged, per channel).
pub fn burst_aucs(model: &LinearModel, subject: &SubjectData) -> Result<(Option<f64>, Vec<Option<f64>>)> {
    let es: Vec<EpochScores> = subject.matrices.iter().map(|fm| epoch_scores(model, fm)).collect::<Result<_>>()?;
    let per_channel = subject
        .matrices
        .iter()
        .zip(&es)
        .map(|(fm, e)| labelled_auc(&e.scores, &burst_labels(fm, &subject.annotations, &fm.channel)))
        .collect();
    let averaged = match subject.matrices.first() {
        Some(fm) => labelled_auc(&average_epoch_scores(&es), &burst_labels(fm, &subject.annotations, "")),
        None => None,
    };
    Ok((averaged, per_channel))
}

/// Channel-averaged, median-filtered score of a subject under `model`.
fn subject_filtered(model: &LinearModel, subject: &SubjectData, median_window: f64) -> Result<Vec<f64>> {
    let traces = subject
        .matrices
        .iter()
        .map(|fm| Ok(hold_to_samples(&epoch_scores(model, fm)?, fm.n_samples, fm.sample_rate)))
        .collect::<Result<Vec<_>>>()?;
    Ok(filtered_score(&traces, median_window)?.values)
}

/// Per-sample TA state from annotations that apply to the whole recording.
pub fn global_ta_states(subject: &SubjectData) -> Vec<Option<bool>> {
    subject
        .annotations
        .ta_sample_states("", subject.n_samples(), subject.sample_rate())
}

fn labelled_pairs(values: &[f64], ta: &[Option<bool>], step: usize) -> (Vec<f64>, Vec<bool>) {
    (0..values.len())
        .step_by(step.max(1))
        .filter_map(|i| ta[i].map(|t| (values[i], t)))
        .unzip()
}

struct FoldContext<'a> {
    subjects: &'a [SubjectData],
    labeled: &'a LabeledEpochs,
    aucs: &'a SubjectAucs,
    ta_states: &'a [Vec<Option<bool>>],
    bands: &'a [crate::preprocess::BandSpec],
    cfg: &'a EvalConfig,
}

impl FoldContext<'_> {
    fn run(&self, fold: &Fold) -> Result<FoldResult> {
        let mut keep = vec![false; self.subjects.len()];
        fold.train.iter().for_each(|&j| keep[j] = true);
        if keep[fold.test] {
            return Err(Error::validation("test subject appears in its own training fold"));
        }
        let selection = select_from_aucs(self.aucs, &keep, self.cfg.train.auc_threshold)?;
        let mut model = train_linear_svm_on(self.labeled, Some(&keep), &selection, self.bands, &self.cfg.train)?;

        let sweep: Vec<SweepRecording> = fold
            .train
            .iter()
            .map(|&j| {
                Ok(SweepRecording {
                    filtered: subject_filtered(&model, &self.subjects[j], self.cfg.median_window)?,
                    sample_rate: self.subjects[j].sample_rate(),
                    ta: self.ta_states[j].clone(),
                })
            })
            .collect::<Result<_>>()?;
        let best = optimize_min_separation(&sweep, &self.cfg.min_separation_grid)?.best;
        model.training_metadata.min_separation = Some(best);

        let (mut pool_s, mut pool_l) = (Vec::new(), Vec::new());
        for r in &sweep {
            let env = peak_spline_envelope(&r.filtered, best, r.sample_rate);
            let (s, l) = labelled_pairs(&env, &r.ta, SWEEP_DECIMATION);
            pool_s.extend(s);
            pool_l.extend(l);
        }
        drop(sweep);
        let eer = equal_error_threshold(&pool_s, &pool_l).unwrap_or(self.cfg.fixed_threshold);

        let test = &self.subjects[fold.test];
        let (burst_auc, per_channel) = burst_aucs(&model, test)?;
        let mut chan: Vec<f64> = per_channel.iter().flatten().copied().collect();
        let single = median_in_place(&mut chan);

        let filtered = subject_filtered(&model, test, self.cfg.median_window)?;
        let fs = test.sample_rate();
        let env = peak_spline_envelope(&filtered, best, fs);
        let (s, l) = labelled_pairs(&env, &self.ta_states[fold.test], 1);
        let ta = compute_metrics(&s, &l, eer)?;
        let ta_fixed = compute_metrics(&s, &l, self.cfg.fixed_threshold)?;
        let decision = decide_ta(&env, eer, self.cfg.epoch_minutes, fs, &self.ta_states[fold.test]);

        log::info!(
            "fold {}: burst AUC {:.3} (single {:.3}), TA AUC {}, min_sep {best} s, threshold {eer:.3}",
            test.name,
            nan_if_none(burst_auc),
            nan_if_none(single),
            ta.auc.map_or("n/a".into(), |a| format!("{a:.3}")),
        );
        Ok(FoldResult {
            subject: test.name.clone(),
            selected_features: model.feature_ids().iter().map(ToString::to_string).collect(),
            min_separation: best,
            eer_threshold: eer,
            burst_auc: nan_if_none(burst_auc),
            burst_auc_single: nan_if_none(single),
            burst_auc_channels: per_channel.into_iter().map(nan_if_none).collect(),
            ta,
            ta_fixed,
            epochs: decision.epochs.iter().map(EpochRecord::from).collect(),
        })
    }
}

/// Full LOSO protocol: feature selection, SVM training, peak-separation sweep
/// and equal-error threshold inside each training fold; burst and TA metrics
/// on the held-out subject.
pub fn run_loso(subjects: &[SubjectData], cfg: &EvalConfig) -> Result<LosoReport> {
    let names: Vec<String> = subjects.iter().map(|s| s.name.clone()).collect();
    let folds = loso_split(&names)?;
    let bands = cfg_bands(subjects);

    let mut parts = Vec::new();
    for s in subjects {
        for fm in &s.matrices {
            parts.push(label_epochs(fm, &s.annotations, &s.name));
        }
    }
    let labeled = LabeledEpochs::concat(parts)?;
    // concat keeps subject names in first-appearance order, so row subject
    // indices coincide with positions in `subjects`
    if labeled.subject_names != names {
        return Err(Error::validation("every subject needs at least one channel of features"));
    }
    let aucs = subject_feature_aucs(&labeled);
    let ta_states: Vec<Vec<Option<bool>>> = subjects.iter().map(global_ta_states).collect();

    let ctx = FoldContext {
        subjects,
        labeled: &labeled,
        aucs: &aucs,
        ta_states: &ta_states,
        bands: &bands,
        cfg,
    };
    // folds are independent; results are gathered back in fold order
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(folds.len());
    let mut slots: Vec<Option<Result<FoldResult>>> = (0..folds.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = folds.len().div_ceil(workers);
        for (fold_chunk, slot_chunk) in folds.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            let ctx = &ctx;
            scope.spawn(move || {
                for (fold, slot) in fold_chunk.iter().zip(slot_chunk) {
                    *slot = Some(ctx.run(fold));
                }
            });
        }
    });
    let results = slots
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Err(Error::Numerical("fold worker did not finish".into()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarise(results, subjects.len(), cfg))
}

fn cfg_bands(subjects: &[SubjectData]) -> Vec<crate::preprocess::BandSpec> {
    let mut bands = Vec::new();
    if let Some(fm) = subjects.first().and_then(|s| s.matrices.first()) {
        for id in &fm.feature_names {
            if let Some((lo, hi)) = id.band.split_once('-') {
                if let (Ok(lo), Ok(hi)) = (lo.parse(), hi.parse()) {
                    let b = crate::preprocess::BandSpec::new(lo, hi);
                    if !bands.contains(&b) {
                        bands.push(b);
                    }
                }
            }
        }
    }
    bands
}

fn summarise(folds: Vec<FoldResult>, n_subjects: usize, cfg: &EvalConfig) -> LosoReport {
    type Getter = fn(&FoldResult) -> Option<f64>;
    let fields: [(&str, Getter); 10] = [
        ("burst_auc", |f| Some(f.burst_auc)),
        ("burst_auc_single_channel", |f| Some(f.burst_auc_single)),
        ("ta_auc", |f| f.ta.auc),
        ("ta_kappa", |f| f.ta.kappa),
        ("ta_f1", |f| f.ta.f1),
        ("ta_accuracy", |f| f.ta.accuracy),
        ("ta_sensitivity", |f| f.ta.sensitivity),
        ("ta_specificity", |f| f.ta.specificity),
        ("min_separation", |f| Some(f.min_separation)),
        ("eer_threshold", |f| Some(f.eer_threshold)),
    ];
    let aggregates = fields
        .iter()
        .enumerate()
        .map(|(k, (name, get))| {
            let mut v: Vec<f64> = folds.iter().filter_map(get).filter(|x| x.is_finite()).collect();
            let ci = bootstrap_interval(
                &v,
                cfg.bootstrap_level,
                cfg.bootstrap_resamples,
                cfg.bootstrap_seed.wrapping_add(k as u64),
                median_statistic,
            );
            Aggregate {
                metric: name.to_string(),
                n: v.len(),
                median: median_in_place(&mut v).unwrap_or(f64::NAN),
                ci_low: ci.map(|c| c.0),
                ci_high: ci.map(|c| c.1),
            }
        })
        .collect();

    let pooled = |get: fn(&FoldResult) -> ConfusionCounts| {
        folds.iter().fold(ConfusionCounts::default(), |acc, f| acc.add(get(f)))
    };
    let pooled_eer = MetricEntry::from_counts(pooled(|f| f.ta.counts), None, f64::NAN);
    let pooled_fixed = MetricEntry::from_counts(pooled(|f| f.ta_fixed.counts), None, cfg.fixed_threshold);

    let mut ep_pred = Vec::new();
    let mut ep_truth = Vec::new();
    let mut ep_score = Vec::new();
    for f in &folds {
        for e in &f.epochs {
            if let Some(t) = e.truth {
                ep_pred.push(e.score > f.eer_threshold);
                ep_truth.push(t);
                ep_score.push(e.score);
            }
        }
    }
    let pooled_epochs = MetricEntry::from_counts(
        ConfusionCounts::from_predictions(&ep_pred, &ep_truth),
        auc(&ep_score, &ep_truth).ok(),
        f64::NAN,
    );

    let mut selection_counts: Vec<(String, usize)> = Vec::new();
    for f in &folds {
        for s in &f.selected_features {
            match selection_counts.iter_mut().find(|(n, _)| n == s) {
                Some((_, c)) => *c += 1,
                None => selection_counts.push((s.clone(), 1)),
            }
        }
    }

    LosoReport {
        n_subjects,
        config: cfg.clone(),
        aggregates,
        pooled_eer,
        pooled_fixed,
        pooled_epochs,
        selection_counts,
        folds,
    }
}

impl LosoReport {
    pub fn aggregate(&self, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.metric == metric)
    }
}
