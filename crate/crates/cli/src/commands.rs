use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use tadetect::classifier::{fit_classifier, label_epochs, LabeledEpochs, LinearModel, ScoreTrace, TrainConfig};
use tadetect::evaluation::{run_loso, EvalConfig, SubjectData};
use tadetect::features::{build_feature_matrices, FeatureMatrix};
use tadetect::pipeline::{detect_from_scores, prepare, raw_to_features, score_channels, PipelineConfig};
use tadetect::signal_io::{read_annotations, write_annotations, write_recording_csv};
use tadetect::synth::{generate_recording, SynthConfig};
use tadetect::ta_envelope::{
    filtered_score, min_separation_grid, optimize_min_separation, write_envelope_csv, EnvelopeParams,
    SweepRecording,
};
use tadetect::{Error, Result};

use crate::args::{DetectArgs, EvalArgs, FeaturesArgs, InputKind, PreprocessArgs, ScoreArgs, SynthArgs, TrainArgs};
use crate::files::{
    create_dir, discover, kind_of, load_recording, par_map, read_features, read_scores, stems, to_toml, write_features,
    write_scores, write_text, ANNOTATION_SUFFIX,
};

/// `<out>/<command>.meta.toml`: the options as given plus resolved defaults.
fn write_meta<O: Serialize, R: Serialize>(out: &Path, command: &str, options: &O, resolved: &R) -> Result<()> {
    #[derive(Serialize)]
    struct Meta<'a, O, R> {
        command: &'a str,
        version: &'a str,
        options: &'a O,
        resolved: &'a R,
    }
    let text = to_toml(&Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        options,
        resolved,
    })?;
    write_text(&out.join(format!("{command}.meta.toml")), &text)
}

fn all<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    if a.subjects == 0 {
        return Err(Error::validation("--subjects must be at least 1"));
    }
    create_dir(&a.out)?;
    let configs: Vec<(String, SynthConfig)> = (0..a.subjects)
        .map(|i| {
            let cfg = SynthConfig {
                seed: a.seed.wrapping_add(i as u64),
                duration: a.duration,
                fs: a.fs,
                ta_fraction: a.ta_fraction,
                ..SynthConfig::default()
            };
            (format!("subject_{i:03}"), cfg)
        })
        .collect();
    all(par_map(&configs, |(name, cfg)| {
        let (rec, ann) = generate_recording(cfg)?;
        write_recording_csv(&rec, &a.out.join(format!("{name}.csv")))?;
        write_annotations(&ann, &a.out.join(format!("{name}{ANNOTATION_SUFFIX}")))
    }))?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        subjects: Vec<&'a SynthConfig>,
    }
    write_meta(&a.out, "synth", a, &Resolved {
        subjects: configs.iter().map(|(_, c)| c).collect(),
    })
}

pub fn preprocess(a: &PreprocessArgs) -> Result<()> {
    let names = stems(&a.io.input)?;
    create_dir(&a.out)?;
    let mut cfg = PipelineConfig::default();
    cfg.preprocess.artifact_threshold = a.artifact_threshold;
    let jobs: Vec<_> = a.io.input.iter().zip(&names).collect();
    all(par_map(&jobs, |(path, name)| {
        let rec = prepare(&load_recording(path, a.io.format, a.io.fs)?, &cfg)?;
        write_recording_csv(&rec, &a.out.join(format!("{name}.pre.csv")))
    }))?;
    write_meta(&a.out, "preprocess", a, &cfg.preprocess)
}

pub fn features(a: &FeaturesArgs) -> Result<()> {
    let names = stems(&a.io.input)?;
    create_dir(&a.out)?;
    let cfg = PipelineConfig::default();
    let jobs: Vec<_> = a.io.input.iter().zip(&names).collect();
    all(par_map(&jobs, |(path, name)| {
        let matrices = raw_to_features(&load_recording(path, a.io.format, a.io.fs)?, &cfg)?;
        write_features(&a.out, name, &cfg.features, &matrices).map(|_| ())
    }))?;
    write_meta(&a.out, "features", a, &cfg)
}

/// Feature matrices of an input that is either a recording or a manifest.
fn matrices_of(path: &Path, kind: InputKind, a: &crate::args::InputArgs) -> Result<Vec<FeatureMatrix>> {
    match kind_of(path, kind) {
        InputKind::Features => read_features(path),
        InputKind::Score => Err(Error::validation(format!("{}: expected a recording or features manifest", path.display()))),
        _ => raw_to_features(&load_recording(path, a.format, a.fs)?, &PipelineConfig::default()),
    }
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let names = stems(&a.io.input)?;
    let model = LinearModel::load(&a.model)?;
    create_dir(&a.out)?;
    let jobs: Vec<_> = a.io.input.iter().zip(&names).collect();
    all(par_map(&jobs, |(path, name)| {
        let traces = score_channels(&model, &matrices_of(path, a.input_kind, &a.io)?)?;
        write_scores(&a.out.join(format!("{name}.scores.csv")), &traces)
    }))?;
    write_meta(&a.out, "score", a, &model.training_metadata)
}

fn epochs_csv(decision: &tadetect::ta_envelope::TaDecision) -> String {
    let mut out = String::from("start_s,end_s,score,predicted,truth\n");
    for e in &decision.epochs {
        let truth = e.truth.map_or("", |t| if t { "1" } else { "0" });
        let _ = writeln!(out, "{:?},{:?},{:?},{},{truth}", e.start_s, e.end_s, e.score, u8::from(e.predicted));
    }
    out
}

pub fn detect_ta(a: &DetectArgs) -> Result<()> {
    let names = stems(&a.io.input)?;
    let model = a.model.as_deref().map(LinearModel::load).transpose()?;
    let min_sep = a
        .min_sep
        .or_else(|| model.as_ref().and_then(|m| m.training_metadata.min_separation))
        .ok_or_else(|| Error::validation("no --min-sep given and the model does not store one"))?;
    let params = EnvelopeParams {
        median_window: a.median_window,
        min_separation: min_sep,
        threshold: a.threshold,
    };
    params.validate()?;
    let annotations = a.annotations.as_deref().map(read_annotations).transpose()?;
    create_dir(&a.out)?;

    let jobs: Vec<_> = a.io.input.iter().zip(&names).collect();
    all(par_map(&jobs, |(path, name)| {
        let traces: Vec<ScoreTrace> = match kind_of(path, a.input_kind) {
            InputKind::Score => read_scores(path)?,
            kind => {
                let model = model
                    .as_ref()
                    .ok_or_else(|| Error::validation("--model is required unless the input is a score file"))?;
                score_channels(model, &matrices_of(path, kind, &a.io)?)?
            }
        };
        let n = traces.first().map_or(0, |t| t.values.len());
        let fs = traces.first().map_or(64.0, |t| t.sample_rate);
        let ta = annotations.as_ref().map(|ann| ann.ta_sample_states("", n, fs));
        let out = detect_from_scores(&traces, &params, ta.as_deref())?;
        write_envelope_csv(
            &a.out.join(format!("{name}.envelope.csv")),
            fs,
            &out.filtered.values,
            &out.decision,
            &params,
        )?;
        write_text(&a.out.join(format!("{name}.epochs.csv")), &epochs_csv(&out.decision))
    }))?;
    write_meta(&a.out, "detect-ta", a, &params)
}

/// Features and annotations of every annotated recording in `dir`.
fn load_subjects(dir: &Path, fs: Option<f64>) -> Result<Vec<SubjectData>> {
    let found = discover(dir)?;
    let cfg = PipelineConfig::default();
    all(par_map(&found, |f| {
        let (rec, ann) = f.load(fs)?;
        Ok(SubjectData {
            name: f.name.clone(),
            matrices: build_feature_matrices(&prepare(&rec, &cfg)?, &cfg.features)?,
            annotations: ann,
        })
    }))
}

fn train_config(c: f64, auc_threshold: f64, stride: usize, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig {
        c,
        auc_threshold,
        train_stride: stride,
        ..TrainConfig::default()
    };
    cfg.solver.seed = seed;
    cfg
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let subjects = load_subjects(&a.data, a.fs)?;
    let parts: Vec<LabeledEpochs> = subjects
        .iter()
        .flat_map(|s| s.matrices.iter().map(|fm| label_epochs(fm, &s.annotations, &s.name)))
        .collect();
    let data = LabeledEpochs::concat(parts)?;
    let cfg = train_config(a.c, a.auc_threshold, a.train_stride, a.seed);
    let mut model = fit_classifier(&data, &PipelineConfig::default().features.bands, &cfg)?;

    let grid = match a.min_sep {
        Some(v) => vec![v],
        None => min_separation_grid(),
    };
    let sweep: Vec<SweepRecording> = all(par_map(&subjects, |s| {
        let traces = score_channels(&model, &s.matrices)?;
        let filtered = filtered_score(&traces, a.median_window)?;
        Ok(SweepRecording {
            ta: s.annotations.ta_sample_states("", filtered.values.len(), filtered.sample_rate),
            sample_rate: filtered.sample_rate,
            filtered: filtered.values,
        })
    }))?;
    let best = optimize_min_separation(&sweep, &grid)?;
    model.training_metadata.min_separation = Some(best.best);

    create_dir(&a.out)?;
    model.save(&a.out.join("model.toml"))?;
    #[derive(Serialize)]
    struct Resolved {
        train: TrainConfig,
        min_separation_sweep: Vec<(f64, f64)>,
    }
    write_meta(&a.out, "train", a, &Resolved {
        train: cfg,
        min_separation_sweep: best.table,
    })
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let subjects = load_subjects(&a.data, a.fs)?;
    let cfg = EvalConfig {
        train: train_config(a.c, a.auc_threshold, a.train_stride, a.seed),
        median_window: a.median_window,
        fixed_threshold: a.threshold,
        bootstrap_resamples: a.bootstrap_resamples,
        bootstrap_seed: a.seed,
        ..EvalConfig::default()
    };
    let report = run_loso(&subjects, &cfg)?;
    report.write(&a.out)?;
    print!("{}", report.to_table());
    write_meta(&a.out, "eval", a, &cfg)
}
