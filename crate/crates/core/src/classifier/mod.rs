//! Burst / inter-burst classifier: per-feature AUC screening, z-scoring and a
//! linear SVM whose decision value is the burst confidence score.

pub mod auc;
pub mod model;
pub mod svm;

use serde::{Deserialize, Serialize};

pub use auc::{auc, oriented};
pub use model::{LinearModel, SelectedFeature, TrainingMetadata, MODEL_VERSION, ORIENTATION};
pub use svm::{SolverConfig, SvmProblem, SvmSolution};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureMatrix};
use crate::preprocess::BandSpec;
use crate::signal_io::{AnnotationTrack, Label};
use crate::stats::median_in_place;

pub const DEFAULT_AUC_THRESHOLD: f64 = 0.6;

/// Feature rows inside TA with their burst (true) / inter-burst (false) label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEpochs {
    pub feature_names: Vec<FeatureId>,
    /// Row-major; NaN where invalid.
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub labels: Vec<bool>,
    /// Index into `subject_names` per row.
    pub subjects: Vec<usize>,
    pub subject_names: Vec<String>,
    pub epoch_centers: Vec<f64>,
}

impl LabeledEpochs {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let i = r * self.n_cols() + c;
        self.valid[i].then_some(self.values[i])
    }

    /// Stack several sets with identical columns; subjects with the same
    /// name are merged.
    pub fn concat(parts: Vec<LabeledEpochs>) -> Result<LabeledEpochs> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| Error::validation("no labelled epochs to combine"))?;
        for p in it {
            if p.feature_names != out.feature_names {
                return Err(Error::validation("labelled epochs have different feature columns"));
            }
            let remap: Vec<usize> = p
                .subject_names
                .iter()
                .map(|name| match out.subject_names.iter().position(|s| s == name) {
                    Some(i) => i,
                    None => {
                        out.subject_names.push(name.clone());
                        out.subject_names.len() - 1
                    }
                })
                .collect();
            out.values.extend(p.values);
            out.valid.extend(p.valid);
            out.labels.extend(p.labels);
            out.subjects.extend(p.subjects.iter().map(|&s| remap[s]));
            out.epoch_centers.extend(p.epoch_centers);
        }
        Ok(out)
    }

    /// Rows whose subject is in `keep`.
    pub fn filter_subjects(&self, keep: &[bool]) -> LabeledEpochs {
        let c = self.n_cols();
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&r| keep[self.subjects[r]]).collect();
        LabeledEpochs {
            feature_names: self.feature_names.clone(),
            values: rows.iter().flat_map(|&r| self.values[r * c..(r + 1) * c].iter().copied()).collect(),
            valid: rows.iter().flat_map(|&r| self.valid[r * c..(r + 1) * c].iter().copied()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            subjects: rows.iter().map(|&r| self.subjects[r]).collect(),
            subject_names: self.subject_names.clone(),
            epoch_centers: rows.iter().map(|&r| self.epoch_centers[r]).collect(),
        }
    }
}

/// Keep the epochs whose centre lies in a burst or inter-burst interval
/// applying to the matrix's channel.
pub fn label_epochs(fm: &FeatureMatrix, ann: &AnnotationTrack, subject: &str) -> LabeledEpochs {
    let c = fm.n_cols();
    let mut out = LabeledEpochs {
        feature_names: fm.feature_names.clone(),
        values: Vec::new(),
        valid: Vec::new(),
        labels: Vec::new(),
        subjects: Vec::new(),
        subject_names: vec![subject.to_string()],
        epoch_centers: Vec::new(),
    };
    for (r, &t) in fm.epoch_centers.iter().enumerate() {
        let label = match ann.burst_label_at(&fm.channel, t) {
            Some(Label::Burst) => true,
            Some(Label::Interburst) => false,
            _ => continue,
        };
        out.values.extend_from_slice(&fm.values[r * c..(r + 1) * c]);
        out.valid.extend_from_slice(&fm.valid[r * c..(r + 1) * c]);
        out.labels.push(label);
        out.subjects.push(0);
        out.epoch_centers.push(t);
    }
    out
}

/// Oriented AUC of every feature within every subject; `None` where a
/// subject lacks one of the classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectAucs {
    pub feature_names: Vec<FeatureId>,
    /// `[subject][feature]`
    pub aucs: Vec<Vec<Option<f64>>>,
}

pub fn subject_feature_aucs(data: &LabeledEpochs) -> SubjectAucs {
    let n_subj = data.subject_names.len();
    let mut by_subject: Vec<Vec<usize>> = vec![Vec::new(); n_subj];
    for (r, &s) in data.subjects.iter().enumerate() {
        by_subject[s].push(r);
    }
    let aucs = by_subject
        .iter()
        .map(|rows| {
            (0..data.n_cols())
                .map(|c| {
                    let (v, l): (Vec<f64>, Vec<bool>) = rows
                        .iter()
                        .filter_map(|&r| data.get(r, c).map(|v| (v, data.labels[r])))
                        .unzip();
                    auc(&v, &l).ok().map(oriented)
                })
                .collect()
        })
        .collect();
    SubjectAucs {
        feature_names: data.feature_names.clone(),
        aucs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub column: usize,
    pub id: FeatureId,
    pub median_auc: f64,
}

/// Features whose median oriented AUC over the subjects in `subjects` exceeds `threshold`.
pub fn select_from_aucs(aucs: &SubjectAucs, subjects: &[bool], threshold: f64) -> Result<Vec<FeatureSelection>> {
    let n_used = aucs
        .aucs
        .iter()
        .zip(subjects)
        .filter(|(a, &keep)| keep && a.iter().any(Option::is_some))
        .count();
    if n_used < 2 {
        return Err(Error::validation(format!("feature selection needs at least 2 subjects, got {n_used}")));
    }
    let mut out = Vec::new();
    for (c, id) in aucs.feature_names.iter().enumerate() {
        let mut vals: Vec<f64> = aucs
            .aucs
            .iter()
            .zip(subjects)
            .filter(|(_, &keep)| keep)
            .filter_map(|(a, _)| a[c])
            .collect();
        if let Some(m) = median_in_place(&mut vals) {
            if m > threshold {
                out.push(FeatureSelection {
                    column: c,
                    id: id.clone(),
                    median_auc: m,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::validation(format!(
            "no feature has median AUC above {threshold}; review the selection threshold"
        )));
    }
    Ok(out)
}

pub fn select_features(data: &LabeledEpochs, threshold: f64) -> Result<Vec<FeatureSelection>> {
    let aucs = subject_feature_aucs(data);
    select_from_aucs(&aucs, &vec![true; data.subject_names.len()], threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub auc_threshold: f64,
    pub solver: SolverConfig,
    /// Use every `train_stride`-th usable row when fitting the SVM.
    pub train_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            auc_threshold: DEFAULT_AUC_THRESHOLD,
            solver: SolverConfig::default(),
            train_stride: 1,
        }
    }
}

/// Standardise the chosen columns and fit the SVM on rows where all of them are valid.
pub fn train_linear_svm(
    data: &LabeledEpochs,
    selection: &[FeatureSelection],
    bands: &[BandSpec],
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    train_linear_svm_on(data, None, selection, bands, cfg)
}

/// As [`train_linear_svm`], restricted to rows of subjects flagged in `subjects`.
pub fn train_linear_svm_on(
    data: &LabeledEpochs,
    subjects: Option<&[bool]>,
    selection: &[FeatureSelection],
    bands: &[BandSpec],
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::validation(format!("C must be positive, got {}", cfg.c)));
    }
    let stride = cfg.train_stride.max(1);
    let rows: Vec<usize> = (0..data.n_rows())
        .filter(|&r| subjects.is_none_or(|keep| keep[data.subjects[r]]))
        .filter(|&r| selection.iter().all(|f| data.get(r, f.column).is_some()))
        .step_by(stride)
        .collect();
    let labels: Vec<bool> = rows.iter().map(|&r| data.labels[r]).collect();
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::validation("SVM training needs burst and inter-burst epochs"));
    }

    let mut kept = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for f in selection {
        let col: Vec<f64> = rows.iter().map(|&r| data.values[r * data.n_cols() + f.column]).collect();
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
        if !(s > 1e-12 * m.abs().max(1e-300)) || !s.is_finite() {
            log::warn!("dropping feature {} with zero variance on the training rows", f.id);
            continue;
        }
        kept.push(f);
        means.push(m);
        stds.push(s);
    }
    if kept.is_empty() {
        return Err(Error::validation("every selected feature has zero variance"));
    }

    let d = kept.len();
    let mut x = Vec::with_capacity(rows.len() * d);
    for &r in &rows {
        for (j, f) in kept.iter().enumerate() {
            x.push((data.values[r * data.n_cols() + f.column] - means[j]) / stds[j]);
        }
    }
    let problem = SvmProblem::balanced(x, d, &labels, cfg.c)?;
    let sol = svm::solve(&problem, &cfg.solver);
    if !sol.w.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("SVM weights are not finite".into()));
    }

    let n_subjects = {
        let mut seen = vec![false; data.subject_names.len()];
        rows.iter().for_each(|&r| seen[data.subjects[r]] = true);
        seen.iter().filter(|&&s| s).count()
    };
    let model = LinearModel {
        version: MODEL_VERSION,
        bands: bands.to_vec(),
        selected_features: kept.iter().map(|f| SelectedFeature::from(&f.id)).collect(),
        means,
        stds,
        weights: sol.w[..d].to_vec(),
        bias: sol.w[d],
        orientation: ORIENTATION.into(),
        training_metadata: TrainingMetadata {
            n_subjects,
            n_training_rows: rows.len(),
            c: cfg.c,
            auc_threshold: cfg.auc_threshold,
            selection_auc: kept.iter().map(|f| f.median_auc).collect(),
            solver_iterations: sol.iterations,
            solver_converged: sol.converged,
            relative_duality_gap: sol.relative_gap(),
            seed: cfg.solver.seed,
            min_separation: None,
        },
    };
    model.validate()?;
    Ok(model)
}

/// Feature selection followed by SVM training.
pub fn fit_classifier(data: &LabeledEpochs, bands: &[BandSpec], cfg: &TrainConfig) -> Result<LinearModel> {
    let selection = select_features(data, cfg.auc_threshold)?;
    train_linear_svm(data, &selection, bands, cfg)
}

/// Decision values on a channel's epoch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochScores {
    pub channel: String,
    pub epoch_centers: Vec<f64>,
    pub scores: Vec<Option<f64>>,
}

pub fn epoch_scores(model: &LinearModel, fm: &FeatureMatrix) -> Result<EpochScores> {
    let cols = model
        .feature_ids()
        .iter()
        .map(|id| {
            fm.column_index(id)
                .ok_or_else(|| Error::validation(format!("feature column '{id}' missing from channel '{}'", fm.channel)))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut buf = vec![0.0; cols.len()];
    let scores = (0..fm.n_rows())
        .map(|r| {
            for (b, &c) in buf.iter_mut().zip(&cols) {
                *b = fm.get(r, c)?;
            }
            Some(model.score_row(&buf))
        })
        .collect();
    Ok(EpochScores {
        channel: fm.channel.clone(),
        epoch_centers: fm.epoch_centers.clone(),
        scores,
    })
}

/// Per-sample confidence score. `valid` is false where the value was filled
/// in from a neighbouring epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrace {
    pub channel: String,
    pub sample_rate: f64,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Zero-order hold of epoch scores onto samples `i/fs`, each sample taking
/// the epoch with the nearest centre (earlier on ties). Invalid epochs borrow
/// the nearest valid epoch's score.
pub fn hold_to_samples(es: &EpochScores, n_samples: usize, fs: f64) -> ScoreTrace {
    let filled = fill_nearest(&es.scores);
    let mut values = vec![0.0; n_samples];
    let mut valid = vec![false; n_samples];
    if !es.epoch_centers.is_empty() {
        let c = &es.epoch_centers;
        let mut j = 0;
        for i in 0..n_samples {
            let t = i as f64 / fs;
            while j + 1 < c.len() && (c[j + 1] - t).abs() < (c[j] - t).abs() {
                j += 1;
            }
            if let Some(v) = filled[j] {
                values[i] = v;
                valid[i] = es.scores[j].is_some();
            }
        }
    }
    ScoreTrace {
        channel: es.channel.clone(),
        sample_rate: fs,
        values,
        valid,
    }
}

fn fill_nearest(v: &[Option<f64>]) -> Vec<Option<f64>> {
    let n = v.len();
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for i in 0..n {
        if v[i].is_some() {
            last = Some(i);
        }
        prev[i] = last;
    }
    let mut out = vec![None; n];
    let mut next = None;
    for i in (0..n).rev() {
        if v[i].is_some() {
            next = Some(i);
        }
        out[i] = match (prev[i], next) {
            (Some(p), Some(q)) => v[if i - p <= q - i { p } else { q }],
            (Some(p), None) => v[p],
            (None, Some(q)) => v[q],
            (None, None) => None,
        };
    }
    out
}

/// Per-sample decision score of one channel.
pub fn decision_score(model: &LinearModel, fm: &FeatureMatrix) -> Result<ScoreTrace> {
    Ok(hold_to_samples(&epoch_scores(model, fm)?, fm.n_samples, fm.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::preprocess::analysis_bands;
    use crate::signal_io::{Annotation, Scope};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ids(n: usize) -> Vec<FeatureId> {
        (0..n).map(|i| FeatureId::new(FeatureKind::Envelope, format!("b{i}"))).collect()
    }

    /// Two subjects; column 0 separates the classes, column 1 is noise.
    fn toy(seed: u64, n: usize) -> LabeledEpochs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut subjects = Vec::new();
        for i in 0..n {
            let l = i % 3 == 0;
            values.push(if l { 2.0 } else { -1.0 } + 0.3 * nd.sample(&mut rng));
            values.push(nd.sample(&mut rng));
            labels.push(l);
            subjects.push(i % 2);
        }
        LabeledEpochs {
            feature_names: ids(2),
            valid: vec![true; values.len()],
            values,
            labels,
            subjects,
            subject_names: vec!["s0".into(), "s1".into()],
            epoch_centers: (0..n).map(|i| i as f64).collect(),
        }
    }

    #[test]
    fn labelling_uses_centre_and_half_open_intervals() {
        let ann = AnnotationTrack::new(vec![
            Annotation::new(10.0, 10.0, Scope::Global, Label::Ta),
            Annotation::new(10.0, 2.5, Scope::Global, Label::Interburst),
            Annotation::new(12.5, 2.5, Scope::Global, Label::Burst),
            Annotation::new(15.0, 5.0, Scope::Global, Label::Interburst),
        ])
        .unwrap();
        let fm = FeatureMatrix {
            channel: "F3-T3".into(),
            feature_names: ids(1),
            epoch_centers: vec![5.0, 11.0, 12.5, 13.75, 20.5],
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            valid: vec![true; 5],
            n_samples: 64 * 30,
            sample_rate: 64.0,
        };
        let le = label_epochs(&fm, &ann, "s");
        assert_eq!(le.epoch_centers, vec![11.0, 12.5, 13.75]);
        assert_eq!(le.labels, vec![false, true, true]);
        assert_eq!(le.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn selection_keeps_informative_feature() {
        let sel = select_features(&toy(1, 3000), DEFAULT_AUC_THRESHOLD).unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].column, 0);
        assert!(sel[0].median_auc > 0.99);
    }

    #[test]
    fn selection_needs_two_subjects_and_a_passing_feature() {
        let mut d = toy(2, 300);
        d.subjects.iter_mut().for_each(|s| *s = 0);
        assert!(select_features(&d, 0.6).is_err());
        assert!(select_features(&toy(2, 300), 1.0).is_err());
    }

    #[test]
    fn trained_model_separates_toy_data() {
        let d = toy(3, 600);
        let m = fit_classifier(&d, &analysis_bands(), &TrainConfig::default()).unwrap();
        assert!(m.training_metadata.solver_converged);
        assert!(m.weights[0] > 0.0);
        let correct = (0..d.n_rows())
            .filter(|&r| (m.score_row(&[d.values[2 * r]]) > 0.0) == d.labels[r])
            .count();
        assert_eq!(correct, d.n_rows());
    }

    #[test]
    fn single_class_training_is_error() {
        let mut d = toy(4, 90);
        d.labels.iter_mut().for_each(|l| *l = true);
        let sel = vec![FeatureSelection { column: 0, id: d.feature_names[0].clone(), median_auc: 1.0 }];
        assert!(train_linear_svm(&d, &sel, &[], &TrainConfig::default()).is_err());
    }

    #[test]
    fn zero_variance_feature_dropped() {
        let mut d = toy(5, 300);
        for r in 0..d.n_rows() {
            d.values[2 * r + 1] = 4.0;
        }
        let sel: Vec<FeatureSelection> = (0..2)
            .map(|c| FeatureSelection { column: c, id: d.feature_names[c].clone(), median_auc: 0.9 })
            .collect();
        let m = train_linear_svm(&d, &sel, &[], &TrainConfig::default()).unwrap();
        assert_eq!(m.selected_features.len(), 1);
    }

    #[test]
    fn affine_rescaling_leaves_scores_unchanged() {
        let d = toy(6, 600);
        let mut e = d.clone();
        for r in 0..e.n_rows() {
            e.values[2 * r] = 250.0 * e.values[2 * r] - 3.0;
        }
        let sel = |d: &LabeledEpochs| vec![FeatureSelection { column: 0, id: d.feature_names[0].clone(), median_auc: 1.0 }];
        let a = train_linear_svm(&d, &sel(&d), &[], &TrainConfig::default()).unwrap();
        let b = train_linear_svm(&e, &sel(&e), &[], &TrainConfig::default()).unwrap();
        for r in 0..d.n_rows() {
            let sa = a.score_row(&[d.values[2 * r]]);
            let sb = b.score_row(&[e.values[2 * r]]);
            assert!((sa - sb).abs() < 1e-9, "{sa} {sb}");
        }
    }

    #[test]
    fn hold_and_fill() {
        let es = EpochScores {
            channel: "c".into(),
            epoch_centers: vec![0.5, 0.75, 1.0, 1.25],
            scores: vec![Some(1.0), None, None, Some(4.0)],
        };
        let tr = hold_to_samples(&es, 96, 64.0);
        assert_eq!(tr.values[0], 1.0);
        // t = 0.75 s -> epoch 1, filled from epoch 0 (ties go earlier)
        assert_eq!(tr.values[48], 1.0);
        assert!(!tr.valid[48]);
        // t = 1.0 s -> epoch 2, nearer to epoch 3
        assert_eq!(tr.values[64], 4.0);
        assert_eq!(tr.values[95], 4.0);
        assert!(tr.valid[95]);
    }

    #[test]
    fn missing_column_is_error() {
        let m = fit_classifier(&toy(7, 300), &[], &TrainConfig::default()).unwrap();
        let fm = FeatureMatrix {
            channel: "c".into(),
            feature_names: vec![FeatureId::new(FeatureKind::Edo, "x")],
            epoch_centers: vec![0.5],
            values: vec![1.0],
            valid: vec![true],
            n_samples: 64,
            sample_rate: 64.0,
        };
        assert!(decision_score(&m, &fm).is_err());
    }
}
