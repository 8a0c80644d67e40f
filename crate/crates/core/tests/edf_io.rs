use std::path::Path;

use tadetect::signal_io::{read_recording, read_recording_edf, RecordingFormat};
use tadetect::Error;

struct Signal<'a> {
    label: &'a str,
    dimension: &'a str,
    physical: (f64, f64),
    digital: (i16, i16),
    samples: Vec<i16>,
}

fn field(out: &mut Vec<u8>, s: &str, len: usize) {
    let mut b = s.as_bytes().to_vec();
    b.resize(len, b' ');
    out.extend_from_slice(&b[..len]);
}

/// Minimal EDF writer used only to build fixtures.
fn write_edf(path: &Path, signals: &[Signal], spr: usize, record_s: f64, reserved: &str) {
    let ns = signals.len();
    let n_records = signals[0].samples.len() / spr;
    let mut out = Vec::new();
    field(&mut out, "0", 8);
    field(&mut out, "X X X X", 80);
    field(&mut out, "Startdate X X X X", 80);
    field(&mut out, "01.01.20", 8);
    field(&mut out, "00.00.00", 8);
    field(&mut out, &(256 * (ns + 1)).to_string(), 8);
    field(&mut out, reserved, 44);
    field(&mut out, &n_records.to_string(), 8);
    field(&mut out, &record_s.to_string(), 8);
    field(&mut out, &ns.to_string(), 4);
    for s in signals {
        field(&mut out, s.label, 16);
    }
    for _ in signals {
        field(&mut out, "AgAgCl electrode", 80);
    }
    for s in signals {
        field(&mut out, s.dimension, 8);
    }
    for s in signals {
        field(&mut out, &s.physical.0.to_string(), 8);
    }
    for s in signals {
        field(&mut out, &s.physical.1.to_string(), 8);
    }
    for s in signals {
        field(&mut out, &s.digital.0.to_string(), 8);
    }
    for s in signals {
        field(&mut out, &s.digital.1.to_string(), 8);
    }
    for _ in signals {
        field(&mut out, "HP:0.1Hz", 80);
    }
    for _ in signals {
        field(&mut out, &spr.to_string(), 8);
    }
    for _ in signals {
        field(&mut out, "", 32);
    }
    for r in 0..n_records {
        for s in signals {
            for v in &s.samples[r * spr..(r + 1) * spr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    std::fs::write(path, out).unwrap();
}

fn ramp(n: usize, offset: i32) -> Vec<i16> {
    (0..n).map(|i| ((i as i32 * 37 + offset) % 4000 - 2000) as i16).collect()
}

#[test]
fn five_referential_channels_at_256_hz() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.edf");
    let labels = ["F3", "F4", "T3", "T4", "Cz"];
    let signals: Vec<Signal> = labels
        .iter()
        .enumerate()
        .map(|(k, l)| Signal {
            label: l,
            dimension: "uV",
            physical: (-3276.8, 3276.7),
            digital: (-32768, 32767),
            samples: ramp(256 * 4, k as i32 * 100),
        })
        .collect();
    write_edf(&path, &signals, 256, 1.0, "");
    let rec = read_recording(&path, RecordingFormat::Edf, None).unwrap();
    assert_eq!(rec.sample_rate(), 256.0);
    assert_eq!(rec.channel_labels(), labels.map(String::from));
    assert_eq!(rec.n_samples(), 1024);
    // gain is 0.1 µV per digital unit
    for (k, s) in signals.iter().enumerate() {
        for (got, &d) in rec.samples()[k].iter().zip(&s.samples) {
            assert!((got - 0.1 * f64::from(d)).abs() < 1e-9);
        }
    }
}

#[test]
fn millivolt_scaling_and_annotation_signal_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plus.edf");
    let signals = [
        Signal {
            label: "Cz",
            dimension: "mV",
            physical: (-1.0, 1.0),
            digital: (-1000, 1000),
            samples: vec![-1000, 0, 500, 1000],
        },
        Signal {
            label: "EDF Annotations",
            dimension: "",
            physical: (-1.0, 1.0),
            digital: (-32768, 32767),
            samples: vec![0; 4],
        },
    ];
    write_edf(&path, &signals, 2, 0.5, "EDF+C");
    let rec = read_recording_edf(&path).unwrap();
    assert_eq!(rec.n_channels(), 1);
    assert_eq!(rec.sample_rate(), 4.0);
    let want = [-1000.0, 0.0, 500.0, 1000.0];
    for (g, w) in rec.samples()[0].iter().zip(want) {
        assert!((g - w).abs() < 1e-9, "{g} vs {w}");
    }
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let base = |samples: Vec<i16>| Signal {
        label: "Cz",
        dimension: "uV",
        physical: (-100.0, 100.0),
        digital: (-100, 100),
        samples,
    };

    let discontinuous = dir.path().join("d.edf");
    write_edf(&discontinuous, &[base(vec![0; 8])], 4, 1.0, "EDF+D");
    assert!(matches!(read_recording_edf(&discontinuous), Err(Error::Unsupported(_))));

    let truncated = dir.path().join("t.edf");
    write_edf(&truncated, &[base(vec![0; 8])], 4, 1.0, "");
    let bytes = std::fs::read(&truncated).unwrap();
    std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_recording_edf(&truncated), Err(Error::Parse { .. })));

    let header_only = dir.path().join("h.edf");
    std::fs::write(&header_only, &bytes[..100]).unwrap();
    assert!(matches!(read_recording_edf(&header_only), Err(Error::Parse { .. })));

    let unknown_unit = dir.path().join("u.edf");
    let mut s = base(vec![0; 8]);
    s.dimension = "furlong";
    write_edf(&unknown_unit, &[s], 4, 1.0, "");
    assert!(matches!(read_recording_edf(&unknown_unit), Err(Error::Unsupported(_))));

    assert!(matches!(read_recording_edf(&dir.path().join("missing.edf")), Err(Error::Io { .. })));
}
