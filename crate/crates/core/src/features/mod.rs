//! Per-epoch feature extraction.
//!
//! Eighteen candidate columns per channel: envelope, relative power, log–log
//! spectral fit r² and instantaneous frequency in each of the four analysis
//! bands, plus broadband Higuchi fractal dimension and the envelope–derivative
//! operator. Everything lands on one grid of 1-s epochs advancing by 0.25 s;
//! 2-s spectral epochs are matched to grid rows by nearest centre.

pub mod analytic;
pub mod epochs;
pub mod higuchi;
pub mod spectral;

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use analytic::{
    envelope, envelope_derivative_operator, envelope_feature, instantaneous_frequency,
    instantaneous_frequency_feature, EdoTrace,
};
pub use epochs::{epoch_slices, EpochGrid};
pub use higuchi::{higuchi_fd, HiguchiEstimate, DEFAULT_K_MAX};
pub use spectral::{loglog_fit_r2, relative_spectral_power, spectral_fit_r2_epochs};

use crate::error::{Error, Result};
use crate::fft::analytic_signal;
use crate::preprocess::{analysis_bands, broadband, design_for_band, dilate_invalid, edo_band, BandSpec};
use crate::signal_io::Recording;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "envelope")]
    Envelope,
    #[serde(rename = "rpsd")]
    RelativePower,
    #[serde(rename = "r2")]
    SpectralFit,
    #[serde(rename = "if")]
    InstFrequency,
    #[serde(rename = "fd")]
    FractalDimension,
    #[serde(rename = "edo")]
    Edo,
}

impl FeatureKind {
    pub fn token(self) -> &'static str {
        match self {
            FeatureKind::Envelope => "envelope",
            FeatureKind::RelativePower => "rpsd",
            FeatureKind::SpectralFit => "r2",
            FeatureKind::InstFrequency => "if",
            FeatureKind::FractalDimension => "fd",
            FeatureKind::Edo => "edo",
        }
    }

    /// Whether the feature scales with signal power (µV²) rather than being
    /// amplitude-invariant.
    pub fn is_power_like(self) -> bool {
        matches!(self, FeatureKind::Envelope | FeatureKind::Edo)
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "envelope" => FeatureKind::Envelope,
            "rpsd" => FeatureKind::RelativePower,
            "r2" => FeatureKind::SpectralFit,
            "if" => FeatureKind::InstFrequency,
            "fd" => FeatureKind::FractalDimension,
            "edo" => FeatureKind::Edo,
            other => return Err(Error::validation(format!("unknown feature '{other}'"))),
        })
    }
}

/// A feature column: family plus band name, rendered `<family>__<band>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureId {
    pub kind: FeatureKind,
    pub band: String,
}

impl FeatureId {
    pub fn new(kind: FeatureKind, band: impl Into<String>) -> Self {
        FeatureId {
            kind,
            band: band.into(),
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}__{}", self.kind.token(), self.band)
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, band) = s
            .split_once("__")
            .ok_or_else(|| Error::validation(format!("feature name '{s}' lacks '__<band>'")))?;
        Ok(FeatureId::new(kind.parse()?, band))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub bands: Vec<BandSpec>,
    pub broadband: BandSpec,
    pub edo_band: BandSpec,
    /// Seconds, for envelope, fractal dimension and EDO.
    pub short_epoch: f64,
    /// Seconds, for the spectral features and instantaneous frequency.
    pub long_epoch: f64,
    pub higuchi_k_max: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            bands: analysis_bands(),
            broadband: broadband(),
            edo_band: edo_band(),
            short_epoch: 1.0,
            long_epoch: 2.0,
            higuchi_k_max: DEFAULT_K_MAX,
        }
    }
}

impl FeatureConfig {
    /// Column order: envelope×bands, rpsd×bands, r2×bands, if×bands, fd, edo.
    pub fn feature_ids(&self) -> Vec<FeatureId> {
        let mut ids = Vec::with_capacity(4 * self.bands.len() + 2);
        for kind in [
            FeatureKind::Envelope,
            FeatureKind::RelativePower,
            FeatureKind::SpectralFit,
            FeatureKind::InstFrequency,
        ] {
            ids.extend(self.bands.iter().map(|b| FeatureId::new(kind, b.name.clone())));
        }
        ids.push(FeatureId::new(FeatureKind::FractalDimension, self.broadband.name.clone()));
        ids.push(FeatureId::new(FeatureKind::Edo, self.edo_band.name.clone()));
        ids
    }
}

/// Features of one channel on the common epoch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub channel: String,
    pub feature_names: Vec<FeatureId>,
    pub epoch_centers: Vec<f64>,
    /// Row-major, `epoch_centers.len() × feature_names.len()`; NaN where invalid.
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    /// Length and rate of the source channel, for per-sample score traces.
    pub n_samples: usize,
    pub sample_rate: f64,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.epoch_centers.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn row_valid(&self, r: usize) -> &[bool] {
        let c = self.n_cols();
        &self.valid[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let i = r * self.n_cols() + c;
        self.valid[i].then_some(self.values[i])
    }

    pub fn column_index(&self, id: &FeatureId) -> Option<usize> {
        self.feature_names.iter().position(|f| f == id)
    }

    pub fn column(&self, c: usize) -> Vec<Option<f64>> {
        (0..self.n_rows()).map(|r| self.get(r, c)).collect()
    }

    /// Write values and validity as two CSV files with header
    /// `epoch_center_s,<feature>__<band>,...`.
    pub fn write_csv(&self, values_path: &Path, valid_path: &Path) -> Result<()> {
        let header = std::iter::once("epoch_center_s".to_string())
            .chain(self.feature_names.iter().map(ToString::to_string))
            .collect::<Vec<_>>()
            .join(",");
        let mut vals = format!("{header}\n");
        let mut mask = format!("{header}\n");
        for r in 0..self.n_rows() {
            let t = format!("{:?}", self.epoch_centers[r]);
            vals.push_str(&t);
            mask.push_str(&t);
            for (v, ok) in self.row(r).iter().zip(self.row_valid(r)) {
                let _ = write!(vals, ",{v:?}");
                mask.push_str(if *ok { ",1" } else { ",0" });
            }
            vals.push('\n');
            mask.push('\n');
        }
        fs::write(values_path, vals).map_err(|e| Error::io(values_path, e))?;
        fs::write(valid_path, mask).map_err(|e| Error::io(valid_path, e))
    }

    pub fn read_csv(
        values_path: &Path,
        valid_path: &Path,
        channel: &str,
        n_samples: usize,
        sample_rate: f64,
    ) -> Result<FeatureMatrix> {
        let (names, centers, values) = read_grid(values_path, |s| s.parse::<f64>().ok())?;
        let (vnames, vcenters, valid) = read_grid(valid_path, |s| match s {
            "1" => Some(true),
            "0" => Some(false),
            _ => None,
        })?;
        if names != vnames || centers != vcenters {
            return Err(Error::parse(valid_path, "line 1", "validity file does not match the value file"));
        }
        let feature_names = names.iter().map(|n| n.parse()).collect::<Result<Vec<FeatureId>>>()?;
        Ok(FeatureMatrix {
            channel: channel.to_string(),
            feature_names,
            epoch_centers: centers,
            values,
            valid,
            n_samples,
            sample_rate,
        })
    }
}

fn read_grid<T>(path: &Path, parse: impl Fn(&str) -> Option<T>) -> Result<(Vec<String>, Vec<f64>, Vec<T>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, "line 1", "empty feature file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"epoch_center_s") {
        return Err(Error::parse(path, "line 1", "header must start with epoch_center_s"));
    }
    let names: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut centers = Vec::new();
    let mut cells = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(Error::parse(
                path,
                format!("line {}", i + 1),
                format!("expected {} fields, found {}", cols.len(), f.len()),
            ));
        }
        centers.push(
            f[0].parse::<f64>()
                .map_err(|_| Error::parse(path, format!("line {}", i + 1), "bad epoch centre"))?,
        );
        for (c, s) in f[1..].iter().enumerate() {
            cells.push(parse(s).ok_or_else(|| {
                Error::parse(path, format!("line {}, column {}", i + 1, c + 2), format!("bad value '{s}'"))
            })?);
        }
    }
    Ok((names, centers, cells))
}

/// Row index on `grid_centers` nearest to each of `centers` (ties to the earlier row).
fn nearest_source(grid_centers: &[f64], source_centers: &[f64]) -> Vec<usize> {
    let mut j = 0;
    grid_centers
        .iter()
        .map(|&t| {
            while j + 1 < source_centers.len() && (source_centers[j + 1] - t).abs() < (source_centers[j] - t).abs() {
                j += 1;
            }
            j
        })
        .collect()
}

/// Band-filter with invalid samples dilated over the filter support.
fn band_filter(x: &[f64], valid: &[bool], band: &BandSpec, fs: f64) -> Result<(Vec<f64>, Vec<bool>)> {
    let filt = design_for_band(band, fs)?;
    let y = filt.filtfilt(x)?;
    Ok((y, dilate_invalid(valid, filt.support_half_width())))
}

fn all_valid(valid: &[bool], (s, e): (usize, usize)) -> bool {
    valid[s..e].iter().all(|&v| v)
}

/// Compute the full feature matrix of one preprocessed channel.
pub fn build_channel_features(
    channel: &str,
    x: &[f64],
    valid: &[bool],
    fs: f64,
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let short = EpochGrid::new(cfg.short_epoch);
    let long = EpochGrid::new(cfg.long_epoch);
    let n = x.len();
    if n < long.length_samples(fs) || n < short.length_samples(fs) {
        return Err(Error::validation(format!(
            "channel '{channel}' has {n} samples, shorter than the {} s epoch",
            cfg.long_epoch
        )));
    }
    let short_slices = short.slices(n, fs);
    let long_slices = long.slices(n, fs);
    let grid = short.centers(n, fs);
    let long_centers = long.centers(n, fs);
    let long_row = nearest_source(&grid, &long_centers);

    let ids = cfg.feature_ids();
    let n_cols = ids.len();
    let n_rows = grid.len();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(n_cols);

    let mut if_cols = Vec::with_capacity(cfg.bands.len());
    for band in &cfg.bands {
        let (y, v) = band_filter(x, valid, band, fs)?;
        let z = analytic_signal(&y);
        columns.push(analytic::epoch_medians(&envelope(&z), &v, &short_slices));
        let per_long = analytic::if_epochs(&z, &v, fs, &long_slices);
        if_cols.push(long_row.iter().map(|&j| per_long[j]).collect::<Vec<_>>());
    }

    let (bb, bb_valid) = band_filter(x, valid, &cfg.broadband, fs)?;
    let long_ok: Vec<bool> = long_slices.iter().map(|&s| all_valid(&bb_valid, s)).collect();
    for spectral_fn in [relative_spectral_power, spectral_fit_r2_epochs] {
        for band in &cfg.bands {
            let per_long = spectral_fn(&bb, fs, band, &cfg.broadband, &long_slices);
            columns.push(
                long_row
                    .iter()
                    .map(|&j| if long_ok[j] { per_long[j] } else { None })
                    .collect(),
            );
        }
    }
    columns.extend(if_cols);

    columns.push(
        short_slices
            .iter()
            .map(|&(s, e)| {
                if all_valid(&bb_valid, (s, e)) {
                    higuchi_fd(&bb[s..e], cfg.higuchi_k_max).map(|h| h.fd)
                } else {
                    None
                }
            })
            .collect(),
    );

    let (eb, eb_valid) = band_filter(x, valid, &cfg.edo_band, fs)?;
    let edo = envelope_derivative_operator(&eb)
        .ok_or_else(|| Error::validation("signal too short for the envelope-derivative operator"))?;
    columns.push(analytic::epoch_medians(&edo.values, &eb_valid, &short_slices));

    debug_assert_eq!(columns.len(), n_cols);
    let mut values = vec![f64::NAN; n_rows * n_cols];
    let mut ok = vec![false; n_rows * n_cols];
    for (c, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                values[r * n_cols + c] = v;
                ok[r * n_cols + c] = true;
            }
        }
    }

    Ok(FeatureMatrix {
        channel: channel.to_string(),
        feature_names: ids,
        epoch_centers: grid,
        values,
        valid: ok,
        n_samples: n,
        sample_rate: fs,
    })
}

/// One feature matrix per channel of a preprocessed recording.
pub fn build_feature_matrices(rec: &Recording, cfg: &FeatureConfig) -> Result<Vec<FeatureMatrix>> {
    for b in cfg.bands.iter().chain([&cfg.broadband, &cfg.edo_band]) {
        b.validate(rec.sample_rate())?;
    }
    rec.channel_labels()
        .iter()
        .zip(rec.samples().iter().zip(rec.validity()))
        .map(|(label, (x, v))| build_channel_features(label, x, v, rec.sample_rate(), cfg))
        .collect()
}
