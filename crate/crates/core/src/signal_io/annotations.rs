use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::fmt_f64;
use crate::error::{Error, Result};

const HEADER: &str = "onset_s,duration_s,scope,label";
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Burst,
    Interburst,
    Ta,
    NonTa,
}

impl Label {
    pub fn token(self) -> &'static str {
        match self {
            Label::Burst => "burst",
            Label::Interburst => "interburst",
            Label::Ta => "TA",
            Label::NonTa => "nonTA",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "burst" => Ok(Label::Burst),
            "interburst" => Ok(Label::Interburst),
            "TA" => Ok(Label::Ta),
            "nonTA" => Ok(Label::NonTa),
            other => Err(format!("unknown label '{other}' (expected burst, interburst, TA or nonTA)")),
        }
    }
}

/// Either the whole recording or a single channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Global,
    Channel(String),
}

impl Scope {
    /// Whether an entry with this scope applies to `channel`.
    pub fn covers(&self, channel: &str) -> bool {
        match self {
            Scope::Global => true,
            Scope::Channel(c) => c == channel,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Channel(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub onset: f64,
    pub duration: f64,
    pub scope: Scope,
    pub label: Label,
}

impl Annotation {
    pub fn new(onset: f64, duration: f64, scope: Scope, label: Label) -> Self {
        Annotation {
            onset,
            duration,
            scope,
            label,
        }
    }

    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }

    /// Half-open containment: `[onset, onset + duration)`.
    pub fn contains(&self, t: f64) -> bool {
        t >= self.onset && t < self.end()
    }
}

/// Validated set of labeled intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationTrack {
    entries: Vec<Annotation>,
}

impl AnnotationTrack {
    /// Validates onsets, durations, same-scope overlaps and that every burst or
    /// inter-burst lies inside TA activity.
    pub fn new(entries: Vec<Annotation>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.onset.is_finite() && e.onset >= 0.0) {
                return Err(Error::validation(format!("entry {i}: onset {} must be >= 0", e.onset)));
            }
            if !(e.duration.is_finite() && e.duration > 0.0) {
                return Err(Error::validation(format!("entry {i}: duration {} must be > 0", e.duration)));
            }
        }

        let mut sorted: Vec<&Annotation> = entries.iter().collect();
        sorted.sort_by(|a, b| {
            (&a.scope, a.label)
                .cmp(&(&b.scope, b.label))
                .then(a.onset.total_cmp(&b.onset))
        });
        for w in sorted.windows(2) {
            if w[0].scope == w[1].scope && w[0].label == w[1].label && w[1].onset < w[0].end() - EPS {
                return Err(Error::validation(format!(
                    "overlapping {} entries for scope {}: [{}, {}) and [{}, {})",
                    w[0].label,
                    w[0].scope,
                    w[0].onset,
                    w[0].end(),
                    w[1].onset,
                    w[1].end()
                )));
            }
        }

        let track = AnnotationTrack { entries };
        for e in &track.entries {
            if matches!(e.label, Label::Burst | Label::Interburst) {
                let ta = track.ta_intervals(&e.scope);
                if !covered(&ta, e.onset, e.end()) {
                    return Err(Error::validation(format!(
                        "{} at [{}, {}) for scope {} lies outside TA activity",
                        e.label,
                        e.onset,
                        e.end(),
                        e.scope
                    )));
                }
            }
        }
        Ok(track)
    }

    pub fn entries(&self) -> &[Annotation] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merged TA intervals that apply to entries of `scope` (global TA always applies).
    fn ta_intervals(&self, scope: &Scope) -> Vec<(f64, f64)> {
        let mut iv: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| e.label == Label::Ta && (e.scope == Scope::Global || &e.scope == scope))
            .map(|e| (e.onset, e.end()))
            .collect();
        merge(&mut iv)
    }

    /// First entry with `label` applying to `channel` that contains time `t`.
    pub fn find(&self, channel: &str, label: Label, t: f64) -> Option<&Annotation> {
        self.entries
            .iter()
            .find(|e| e.label == label && e.scope.covers(channel) && e.contains(t))
    }

    /// The interval label (burst or inter-burst) at `t`, restricted to TA
    /// activity; `None` outside TA or where no burst label applies.
    pub fn burst_label_at(&self, channel: &str, t: f64) -> Option<Label> {
        self.find(channel, Label::Ta, t)?;
        // Half-open intervals: an interval starting exactly at t wins over one ending at t.
        self.entries
            .iter()
            .filter(|e| matches!(e.label, Label::Burst | Label::Interburst) && e.scope.covers(channel) && e.contains(t))
            .max_by(|a, b| a.onset.total_cmp(&b.onset))
            .map(|e| e.label)
    }

    /// `ta_state_at` for every sample time `i/fs`, `i < n`.
    pub fn ta_sample_states(&self, channel: &str, n: usize, fs: f64) -> Vec<Option<bool>> {
        let mut out = vec![None; n];
        for (label, state) in [(Label::NonTa, false), (Label::Ta, true)] {
            for e in self.entries.iter().filter(|e| e.label == label && e.scope.covers(channel)) {
                let lo = ((e.onset * fs).floor() as usize).saturating_sub(1);
                let hi = ((e.end() * fs).ceil() as usize + 1).min(n);
                for (i, slot) in out.iter_mut().enumerate().take(hi).skip(lo) {
                    if e.contains(i as f64 / fs) {
                        *slot = Some(state);
                    }
                }
            }
        }
        out
    }

    /// `Some(true)` inside TA, `Some(false)` inside non-TA, `None` if unannotated.
    pub fn ta_state_at(&self, channel: &str, t: f64) -> Option<bool> {
        if self.find(channel, Label::Ta, t).is_some() {
            Some(true)
        } else if self.find(channel, Label::NonTa, t).is_some() {
            Some(false)
        } else {
            None
        }
    }
}

fn merge(iv: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for &(s, e) in iv.iter() {
        match out.last_mut() {
            Some(last) if s <= last.1 + EPS => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn covered(merged: &[(f64, f64)], start: f64, end: f64) -> bool {
    merged.iter().any(|&(s, e)| s <= start + EPS && end <= e + EPS)
}

pub fn read_annotations(path: &Path) -> Result<AnnotationTrack> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        Some((i, h)) => {
            return Err(Error::parse(
                path,
                format!("line {}", i + 1),
                format!("expected header '{HEADER}', found '{}'", h.trim()),
            ))
        }
        None => return Err(Error::parse(path, "line 1", "empty annotation file")),
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        let loc = format!("line {}", i + 1);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, loc, format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, loc.clone(), format!("{name} '{s}' is not a number")))
        };
        let onset = num(fields[0], "onset")?;
        let duration = num(fields[1], "duration")?;
        if onset < 0.0 || duration <= 0.0 {
            return Err(Error::parse(
                path,
                loc,
                format!("onset {onset} must be >= 0 and duration {duration} > 0"),
            ));
        }
        let scope = match fields[2] {
            "global" => Scope::Global,
            "" => return Err(Error::parse(path, loc, "empty scope")),
            c => Scope::Channel(c.to_string()),
        };
        let label: Label = fields[3].parse().map_err(|m: String| Error::parse(path, loc.clone(), m))?;
        entries.push(Annotation::new(onset, duration, scope, label));
    }
    AnnotationTrack::new(entries)
}

pub fn write_annotations(track: &AnnotationTrack, path: &Path) -> Result<()> {
    let mut out = String::from(HEADER);
    out.push('\n');
    for e in track.entries() {
        out.push_str(&format!("{},{},{},{}\n", fmt_f64(e.onset), fmt_f64(e.duration), e.scope, e.label));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
