use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{fmt_f64, Recording};
use crate::error::{Error, Result};

const TIME_COLUMNS: [&str; 4] = ["t", "t_s", "time", "time_s"];

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    sample_rate: f64,
}

/// `rec.csv` -> `rec.meta.toml`
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.toml")
}

/// `rec.csv` -> `rec.mask.csv`
pub fn mask_path(path: &Path) -> PathBuf {
    path.with_extension("mask.csv")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::parse(path, "line 1", "empty file, expected a header row"))?;
    let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                path,
                format!("line {}", idx + 1),
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        rows.push(fields);
    }
    Ok(Table { header, rows })
}

fn has_time_column(header: &[String]) -> bool {
    header
        .first()
        .is_some_and(|h| TIME_COLUMNS.contains(&h.to_ascii_lowercase().as_str()))
}

/// Read a CSV recording: a header of channel labels (optionally preceded by a
/// time column named `t`), then one row per sample in µV.
///
/// The sample rate is `sample_rate` when given, otherwise the `sample_rate`
/// key of the sidecar `*.meta.toml`. A companion `*.mask.csv` of 0/1 values,
/// when present, supplies the validity mask.
pub fn read_recording_csv(path: &Path, sample_rate: Option<f64>) -> Result<Recording> {
    let table = read_table(path)?;
    let skip = usize::from(has_time_column(&table.header));
    let labels: Vec<String> = table.header[skip..].to_vec();
    if labels.is_empty() {
        return Err(Error::parse(path, "line 1", "header names no channels"));
    }
    let mut samples = vec![Vec::with_capacity(table.rows.len()); labels.len()];
    for (r, row) in table.rows.iter().enumerate() {
        for (c, field) in row[skip..].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(
                    path,
                    format!("line {}, column {}", r + 2, c + skip + 1),
                    format!("'{field}' is not a number"),
                )
            })?;
            samples[c].push(v);
        }
    }

    let fs = match sample_rate {
        Some(fs) => fs,
        None => {
            let meta = sidecar_path(path);
            let text = fs::read_to_string(&meta).map_err(|_| {
                Error::validation(format!(
                    "sample rate for {} not given and sidecar {} unreadable",
                    path.display(),
                    meta.display()
                ))
            })?;
            let sidecar: Sidecar = toml::from_str(&text)
                .map_err(|e| Error::parse(&meta, "sidecar", e.to_string()))?;
            sidecar.sample_rate
        }
    };

    let mpath = mask_path(path);
    let validity = if mpath.exists() {
        let mt = read_table(&mpath)?;
        let mskip = usize::from(has_time_column(&mt.header));
        if mt.header[mskip..] != labels[..] || mt.rows.len() != table.rows.len() {
            return Err(Error::parse(&mpath, "line 1", "mask shape does not match recording"));
        }
        let mut validity = vec![Vec::with_capacity(mt.rows.len()); labels.len()];
        for (r, row) in mt.rows.iter().enumerate() {
            for (c, field) in row[mskip..].iter().enumerate() {
                let ok = match field.as_str() {
                    "1" => true,
                    "0" => false,
                    other => {
                        return Err(Error::parse(
                            &mpath,
                            format!("line {}, column {}", r + 2, c + mskip + 1),
                            format!("mask value '{other}' is not 0 or 1"),
                        ))
                    }
                };
                validity[c].push(ok);
            }
        }
        validity
    } else {
        samples.iter().map(|c| vec![true; c.len()]).collect()
    };

    Recording::with_validity(labels, fs, samples, validity)
}

/// Write `rec` as CSV with a leading `t` column, plus the sidecar carrying the
/// sample rate and the companion mask file.
pub fn write_recording_csv(rec: &Recording, path: &Path) -> Result<()> {
    let n = rec.n_samples();
    let fs = rec.sample_rate();
    let mut out = String::with_capacity(n * (rec.n_channels() + 1) * 12);
    let mut mask = String::with_capacity(n * (rec.n_channels() * 2 + 8));
    out.push('t');
    mask.push('t');
    for label in rec.channel_labels() {
        out.push(',');
        out.push_str(label);
        mask.push(',');
        mask.push_str(label);
    }
    out.push('\n');
    mask.push('\n');
    for i in 0..n {
        let t = fmt_f64(i as f64 / fs);
        out.push_str(&t);
        mask.push_str(&t);
        for (ch, valid) in rec.samples().iter().zip(rec.validity()) {
            let _ = write!(out, ",{:?}", ch[i]);
            mask.push_str(if valid[i] { ",1" } else { ",0" });
        }
        out.push('\n');
        mask.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let mpath = mask_path(path);
    fs::write(&mpath, mask).map_err(|e| Error::io(&mpath, e))?;
    let meta = sidecar_path(path);
    let text = toml::to_string(&Sidecar { sample_rate: fs }).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))?;
    Ok(())
}
