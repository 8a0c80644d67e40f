//! Output naming, the features manifest and data-directory discovery.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use tadetect::classifier::ScoreTrace;
use tadetect::features::{FeatureConfig, FeatureMatrix};
use tadetect::signal_io::{
    read_annotations, read_recording, write_recording_csv, AnnotationTrack, Recording, RecordingFormat,
};
use tadetect::{Error, Result};

use crate::args::{Format, InputKind};

const TAGS: [&str; 4] = [".pre", ".features", ".scores", ".envelope"];
pub const ANNOTATION_SUFFIX: &str = ".annotations.csv";

/// `d/r.pre.csv` -> `r`; the name every output of `r` is derived from.
pub fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = match name.rsplit_once('.') {
        Some((head, _)) if !head.is_empty() => head.to_string(),
        _ => name,
    };
    for tag in TAGS {
        if let Some(head) = s.strip_suffix(tag) {
            s = head.to_string();
            break;
        }
    }
    s
}

/// Distinct stems, so that outputs of several inputs never collide.
pub fn stems(inputs: &[PathBuf]) -> Result<Vec<String>> {
    let out: Vec<String> = inputs.iter().map(|p| stem(p)).collect();
    for (i, s) in out.iter().enumerate() {
        if out[..i].contains(s) {
            return Err(Error::validation(format!("two inputs share the output name '{s}'")));
        }
    }
    Ok(out)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::validation(format!("cannot serialise metadata: {e}")))
}

pub fn kind_of(path: &Path, requested: InputKind) -> InputKind {
    if requested != InputKind::Auto {
        return requested;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if name.ends_with(".features.toml") {
        InputKind::Features
    } else if name.ends_with(".scores.csv") {
        InputKind::Score
    } else {
        InputKind::Raw
    }
}

pub fn load_recording(path: &Path, format: Option<Format>, fs: Option<f64>) -> Result<Recording> {
    let format = match format {
        Some(Format::Edf) => RecordingFormat::Edf,
        Some(Format::Csv) => RecordingFormat::Csv,
        None => RecordingFormat::from_path(path).ok_or_else(|| {
            Error::Unsupported(format!("{}: cannot tell the format, pass --format", path.display()))
        })?,
    };
    read_recording(path, format, fs)
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelFiles {
    channel: String,
    values: String,
    valid: String,
}

/// Index of the per-channel feature CSVs of one recording.
#[derive(Debug, Serialize, Deserialize)]
struct FeatureManifest {
    sample_rate: f64,
    n_samples: usize,
    config: FeatureConfig,
    channels: Vec<ChannelFiles>,
}

pub fn write_features(dir: &Path, stem: &str, cfg: &FeatureConfig, matrices: &[FeatureMatrix]) -> Result<PathBuf> {
    let first = matrices.first().ok_or_else(|| Error::validation("no channels to write"))?;
    let mut channels = Vec::with_capacity(matrices.len());
    for fm in matrices {
        let values = format!("{stem}.{}.features.csv", fm.channel);
        let valid = format!("{stem}.{}.valid.csv", fm.channel);
        fm.write_csv(&dir.join(&values), &dir.join(&valid))?;
        channels.push(ChannelFiles {
            channel: fm.channel.clone(),
            values,
            valid,
        });
    }
    let manifest = FeatureManifest {
        sample_rate: first.sample_rate,
        n_samples: first.n_samples,
        config: cfg.clone(),
        channels,
    };
    let path = dir.join(format!("{stem}.features.toml"));
    write_text(&path, &to_toml(&manifest)?)?;
    Ok(path)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureMatrix>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: FeatureManifest =
        toml::from_str(&text).map_err(|e| Error::parse(path, "manifest", e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    m.channels
        .iter()
        .map(|c| FeatureMatrix::read_csv(&dir.join(&c.values), &dir.join(&c.valid), &c.channel, m.n_samples, m.sample_rate))
        .collect()
}

/// Score traces stored as a recording: one column per channel plus a mask.
pub fn write_scores(path: &Path, traces: &[ScoreTrace]) -> Result<()> {
    let fs = traces.first().map_or(64.0, |t| t.sample_rate);
    let rec = Recording::with_validity(
        traces.iter().map(|t| t.channel.clone()).collect(),
        fs,
        traces.iter().map(|t| t.values.clone()).collect(),
        traces.iter().map(|t| t.valid.clone()).collect(),
    )?;
    write_recording_csv(&rec, path)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreTrace>> {
    let rec = read_recording(path, RecordingFormat::Csv, None)?;
    let fs = rec.sample_rate();
    let (labels, _, samples, validity) = rec.into_parts();
    Ok(labels
        .into_iter()
        .zip(samples.into_iter().zip(validity))
        .map(|(channel, (values, valid))| ScoreTrace {
            channel,
            sample_rate: fs,
            values,
            valid,
        })
        .collect())
}

/// A recording of a data directory with its annotation track.
pub struct Annotated {
    pub name: String,
    pub recording: PathBuf,
    pub annotations: PathBuf,
}

impl Annotated {
    pub fn load(&self, fs: Option<f64>) -> Result<(Recording, AnnotationTrack)> {
        Ok((load_recording(&self.recording, None, fs)?, read_annotations(&self.annotations)?))
    }
}

/// Every `<name>.annotations.csv` with a `<name>.edf` or `<name>.csv` beside
/// it, sorted by name.
pub fn discover(dir: &Path) -> Result<Vec<Annotated>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let file = entry.file_name().to_string_lossy().into_owned();
        let Some(name) = file.strip_suffix(ANNOTATION_SUFFIX) else {
            continue;
        };
        let recording = ["edf", "csv"]
            .iter()
            .map(|ext| dir.join(format!("{name}.{ext}")))
            .find(|p| p.is_file())
            .ok_or_else(|| Error::validation(format!("no recording for annotations '{file}' in {}", dir.display())))?;
        out.push(Annotated {
            name: name.to_string(),
            recording,
            annotations: entry.path(),
        });
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    if out.is_empty() {
        return Err(Error::validation(format!("no annotated recordings in {}", dir.display())));
    }
    Ok(out)
}

/// Map in parallel, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if items.is_empty() {
        return Vec::new();
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    let chunk = items.len().div_ceil(workers);
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (xs, slots) in items.chunks(chunk).zip(out.chunks_mut(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (x, slot) in xs.iter().zip(slots) {
                    *slot = Some(f(x));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("worker finished")).collect()
}
