use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LosoReport, MetricEntry};
use crate::error::{Error, Result};

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:?}"),
        _ => String::new(),
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{:.1}%", 100.0 * x))
}

impl LosoReport {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation(format!("cannot serialise report: {e}")))
    }

    /// Human-readable summary.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "LOSO evaluation over {} subjects", self.n_subjects);
        let _ = writeln!(out, "{:<26} {:>4} {:>8} {:>20}", "metric", "n", "median", "95% interval");
        for a in &self.aggregates {
            let ci = match (a.ci_low, a.ci_high) {
                (Some(l), Some(h)) => format!("({l:.3}, {h:.3})"),
                _ => "unavailable".into(),
            };
            let _ = writeln!(out, "{:<26} {:>4} {:>8.3} {:>20}", a.metric, a.n, a.median, ci);
        }
        let line = |out: &mut String, name: &str, m: &MetricEntry| {
            let _ = writeln!(
                out,
                "{name:<26} sens {} spec {} acc {} kappa {} F1 {}",
                pct(m.sensitivity),
                pct(m.specificity),
                pct(m.accuracy),
                m.kappa.map_or("n/a".into(), |k| format!("{k:.3}")),
                pct(m.f1),
            );
        };
        line(&mut out, "pooled (EER threshold)", &self.pooled_eer);
        line(&mut out, "pooled (fixed threshold)", &self.pooled_fixed);
        line(&mut out, "20-min epochs", &self.pooled_epochs);
        let _ = writeln!(out, "feature selection frequency:");
        for (name, n) in &self.selection_counts {
            let _ = writeln!(out, "  {name:<24} {n}/{}", self.folds.len());
        }
        out
    }

    /// One row per fold.
    pub fn folds_csv(&self) -> String {
        let mut out = String::from(
            "subject,min_separation_s,eer_threshold,burst_auc,burst_auc_single_channel,ta_auc,kappa,f1,accuracy,sensitivity,specificity,tp,fp,tn,fn\n",
        );
        for f in &self.folds {
            let m = &f.ta;
            let _ = writeln!(
                out,
                "{},{:?},{:?},{},{},{},{},{},{},{},{},{},{},{},{}",
                f.subject,
                f.min_separation,
                f.eer_threshold,
                cell(Some(f.burst_auc)),
                cell(Some(f.burst_auc_single)),
                cell(m.auc),
                cell(m.kappa),
                cell(m.f1),
                cell(m.accuracy),
                cell(m.sensitivity),
                cell(m.specificity),
                m.counts.tp,
                m.counts.fp,
                m.counts.tn,
                m.counts.fn_,
            );
        }
        out
    }

    /// `report.toml`, `report.txt` and `folds.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("report.toml", self.to_toml()?),
            ("report.txt", self.to_table()),
            ("folds.csv", self.folds_csv()),
        ] {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
