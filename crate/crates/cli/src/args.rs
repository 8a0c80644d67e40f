use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tadetect::ta_envelope::{DEFAULT_MEDIAN_WINDOW, DEFAULT_THRESHOLD};

#[derive(Debug, Parser)]
#[command(name = "tadetect", version, about = "Burst and trace alternant detection for neonatal EEG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labelled synthetic recordings.
    Synth(SynthArgs),
    /// Bipolar montage, artifact rejection, low-pass and decimation to 64 Hz.
    Preprocess(PreprocessArgs),
    /// Per-channel feature matrices.
    Features(FeaturesArgs),
    /// Select features and fit the linear SVM on annotated recordings.
    Train(TrainArgs),
    /// Per-sample decision scores.
    Score(ScoreArgs),
    /// TA envelope and binary decisions.
    DetectTa(DetectArgs),
    /// Leave-one-subject-out evaluation.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Edf,
    Csv,
}

/// What `--input` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// Guess from the file name.
    Auto,
    /// A recording (EDF or CSV), raw or preprocessed.
    Raw,
    /// A `*.features.toml` manifest.
    Features,
    /// A `*.scores.csv` trace file.
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Folds {
    Loso,
}

/// Recordings to read.
#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Input file; repeat for several recordings.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Input format; guessed from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Sample rate in Hz for CSV inputs without a metadata file.
    #[arg(long)]
    pub fs: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds per recording.
    #[arg(long, default_value_t = 1800.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 256.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 1)]
    pub subjects: usize,
    #[arg(long, default_value_t = 0.5)]
    pub ta_fraction: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// µV; larger absolute amplitudes are marked invalid.
    #[arg(long, default_value_t = 1500.0)]
    pub artifact_threshold: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Directory of recordings, each with a `<name>.annotations.csv`.
    #[arg(long)]
    pub data: PathBuf,
    /// Sample rate for CSV recordings without a metadata file.
    #[arg(long)]
    pub fs: Option<f64>,
    /// SVM regularisation.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = tadetect::classifier::DEFAULT_AUC_THRESHOLD)]
    pub auc_threshold: f64,
    /// Fit on every n-th labelled epoch.
    #[arg(long, default_value_t = 1)]
    pub train_stride: usize,
    #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
    pub median_window: f64,
    /// Fix the peak separation instead of optimising it on the training data.
    #[arg(long)]
    pub min_sep: Option<f64>,
    /// Seed of the solver's coordinate order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; the model is written to `model.toml`.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Auto)]
    pub input_kind: InputKind,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Needed unless the input is a score file and `--min-sep` is given.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputKind::Auto)]
    pub input_kind: InputKind,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Seconds.
    #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
    pub median_window: f64,
    /// Seconds; defaults to the value stored in the model.
    #[arg(long)]
    pub min_sep: Option<f64>,
    /// Annotation file giving the true state of each 20-min epoch.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long, value_enum, default_value_t = Folds::Loso)]
    pub folds: Folds,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = tadetect::classifier::DEFAULT_AUC_THRESHOLD)]
    pub auc_threshold: f64,
    #[arg(long, default_value_t = 1)]
    pub train_stride: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
    pub median_window: f64,
    #[arg(long, default_value_t = tadetect::evaluation::DEFAULT_BOOTSTRAP_RESAMPLES)]
    pub bootstrap_resamples: usize,
    /// Seeds the solver and the bootstrap.
    #[arg(long, default_value_t = tadetect::evaluation::DEFAULT_BOOTSTRAP_SEED)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
