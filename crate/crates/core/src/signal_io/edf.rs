//! Continuous EDF / EDF+C reader.
//!
//! Layout: a 256-byte fixed header, `ns` per-signal headers stored field by
//! field (16 + 80 + 8 * 6 + 80 + 8 + 32 bytes per signal), then data records
//! of little-endian 16-bit two's-complement samples.

use std::fs;
use std::path::Path;

use super::Recording;
use crate::error::{Error, Result};

const FIXED_HEADER: usize = 256;
const PER_SIGNAL_HEADER: usize = 256;
const ANNOTATION_LABEL: &str = "EDF Annotations";

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn field(&mut self, len: usize, name: &str) -> Result<String> {
        let end = self.offset + len;
        if end > self.bytes.len() {
            return Err(Error::parse(
                self.path,
                format!("byte offset {}", self.offset),
                format!("header truncated while reading '{name}'"),
            ));
        }
        let raw = &self.bytes[self.offset..end];
        if let Some(pos) = raw.iter().position(|b| !(0x20..=0x7e).contains(b)) {
            return Err(Error::parse(
                self.path,
                format!("byte offset {}", self.offset + pos),
                format!("non-ASCII byte in '{name}'"),
            ));
        }
        let s = String::from_utf8_lossy(raw).trim().to_string();
        self.offset = end;
        Ok(s)
    }

    fn number<T: std::str::FromStr>(&mut self, len: usize, name: &str) -> Result<T> {
        let at = self.offset;
        let s = self.field(len, name)?;
        s.parse().map_err(|_| {
            Error::parse(self.path, format!("byte offset {at}"), format!("field '{name}' = '{s}' is not a number"))
        })
    }
}

struct SignalHeader {
    label: String,
    physical_dimension: String,
    physical_min: f64,
    physical_max: f64,
    digital_min: f64,
    digital_max: f64,
    samples_per_record: usize,
}

/// Multiplier taking the physical dimension to µV.
fn to_microvolts(dimension: &str) -> Option<f64> {
    match dimension.trim() {
        "uV" | "µV" | "uv" | "microV" => Some(1.0),
        "mV" | "mv" => Some(1e3),
        "V" | "v" => Some(1e6),
        "nV" | "nv" => Some(1e-3),
        _ => None,
    }
}

/// Read a continuous EDF file into a recording in µV. Annotation signals of
/// EDF+ files are skipped; all remaining signals must share one sample rate.
pub fn read_recording_edf(path: &Path) -> Result<Recording> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.first() == Some(&0xff) {
        return Err(Error::Unsupported(format!(
            "{}: 24-bit BDF sample encoding is not supported",
            path.display()
        )));
    }
    let mut cur = Cursor {
        path,
        bytes: &bytes,
        offset: 0,
    };
    let version = cur.field(8, "version")?;
    if version != "0" {
        return Err(Error::parse(path, "byte offset 0", format!("unexpected version '{version}'")));
    }
    cur.field(80, "patient")?;
    cur.field(80, "recording")?;
    cur.field(8, "start date")?;
    cur.field(8, "start time")?;
    let header_bytes: usize = cur.number(8, "header bytes")?;
    let reserved = cur.field(44, "reserved")?;
    if reserved.starts_with("EDF+D") {
        return Err(Error::Unsupported(format!(
            "{}: discontinuous EDF+D recordings are not supported",
            path.display()
        )));
    }
    let n_records_at = cur.offset;
    let n_records: i64 = cur.number(8, "number of data records")?;
    let record_duration: f64 = cur.number(8, "data record duration")?;
    let ns: usize = cur.number(4, "number of signals")?;

    if header_bytes != FIXED_HEADER + ns * PER_SIGNAL_HEADER {
        return Err(Error::parse(
            path,
            "byte offset 184",
            format!("header size {header_bytes} inconsistent with {ns} signals"),
        ));
    }
    if !(record_duration > 0.0) {
        return Err(Error::parse(path, "byte offset 244", "data record duration must be positive"));
    }

    let read_all = |cur: &mut Cursor, len: usize, name: &str| -> Result<Vec<String>> {
        (0..ns).map(|_| cur.field(len, name)).collect()
    };
    let labels = read_all(&mut cur, 16, "label")?;
    read_all(&mut cur, 80, "transducer")?;
    let dims = read_all(&mut cur, 8, "physical dimension")?;
    let nums = |cur: &mut Cursor, name: &str| -> Result<Vec<f64>> {
        (0..ns).map(|_| cur.number::<f64>(8, name)).collect()
    };
    let pmin = nums(&mut cur, "physical minimum")?;
    let pmax = nums(&mut cur, "physical maximum")?;
    let dmin = nums(&mut cur, "digital minimum")?;
    let dmax = nums(&mut cur, "digital maximum")?;
    read_all(&mut cur, 80, "prefiltering")?;
    let spr: Vec<usize> = (0..ns)
        .map(|_| cur.number::<usize>(8, "samples per record"))
        .collect::<Result<_>>()?;
    read_all(&mut cur, 32, "signal reserved")?;

    let signals: Vec<SignalHeader> = (0..ns)
        .map(|i| SignalHeader {
            label: labels[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: pmin[i],
            physical_max: pmax[i],
            digital_min: dmin[i],
            digital_max: dmax[i],
            samples_per_record: spr[i],
        })
        .collect();

    let record_len: usize = signals.iter().map(|s| s.samples_per_record * 2).sum();
    let data = &bytes[header_bytes..];
    let n_records = if n_records < 0 {
        // -1 means "unknown"; infer from the file size
        data.len() / record_len.max(1)
    } else {
        n_records as usize
    };
    if data.len() < n_records * record_len {
        return Err(Error::parse(
            path,
            format!("byte offset {n_records_at}"),
            format!(
                "{n_records} records of {record_len} bytes need {} data bytes, file has {}",
                n_records * record_len,
                data.len()
            ),
        ));
    }

    let keep: Vec<usize> = (0..ns).filter(|&i| signals[i].label != ANNOTATION_LABEL).collect();
    if keep.is_empty() {
        return Err(Error::validation(format!("{}: no ordinary signals", path.display())));
    }
    let spr0 = signals[keep[0]].samples_per_record;
    for &i in &keep {
        let s = &signals[i];
        if s.samples_per_record != spr0 {
            return Err(Error::Unsupported(format!(
                "{}: signal '{}' has {} samples per record, '{}' has {spr0}; mixed sample rates are not supported",
                path.display(),
                s.label,
                s.samples_per_record,
                signals[keep[0]].label
            )));
        }
        if s.digital_max <= s.digital_min {
            return Err(Error::parse(
                path,
                format!("signal header {i}"),
                format!("digital range [{}, {}] is empty", s.digital_min, s.digital_max),
            ));
        }
    }

    let mut samples: Vec<Vec<f64>> = keep.iter().map(|_| Vec::with_capacity(n_records * spr0)).collect();
    let mut scales = Vec::with_capacity(keep.len());
    for &i in &keep {
        let s = &signals[i];
        let unit = to_microvolts(&s.physical_dimension).ok_or_else(|| {
            Error::Unsupported(format!(
                "{}: physical dimension '{}' of signal '{}'",
                path.display(),
                s.physical_dimension,
                s.label
            ))
        })?;
        let gain = (s.physical_max - s.physical_min) / (s.digital_max - s.digital_min);
        scales.push((gain, s.digital_min, s.physical_min, unit));
    }

    let mut offset = 0;
    for _ in 0..n_records {
        let mut k = 0;
        for (i, s) in signals.iter().enumerate() {
            let nbytes = s.samples_per_record * 2;
            if keep.get(k) == Some(&i) {
                let (gain, dmin, pmin, unit) = scales[k];
                let chunk = &data[offset..offset + nbytes];
                samples[k].extend(chunk.chunks_exact(2).map(|b| {
                    let d = f64::from(i16::from_le_bytes([b[0], b[1]]));
                    ((d - dmin) * gain + pmin) * unit
                }));
                k += 1;
            }
            offset += nbytes;
        }
    }

    let sample_rate = spr0 as f64 / record_duration;
    Recording::new(keep.iter().map(|&i| signals[i].label.clone()).collect(), sample_rate, samples)
}
