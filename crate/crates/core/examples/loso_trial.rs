//! LOSO run on synthetic subjects: `cargo run --release --example loso_trial -- [subjects] [seconds]`.

use std::time::Instant;

use tadetect::evaluation::{run_loso, EvalConfig, SubjectData};
use tadetect::pipeline::{raw_to_features, PipelineConfig};
use tadetect::synth::{generate_recording, SynthConfig};

fn main() -> tadetect::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);
    let secs: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(600.0);
    let t0 = Instant::now();
    let mut subjects = Vec::new();
    for i in 0..n {
        let cfg = SynthConfig { seed: 1000 + i, duration: secs, ..SynthConfig::default() };
        let (rec, ann) = generate_recording(&cfg)?;
        let matrices = raw_to_features(&rec, &PipelineConfig::default())?;
        subjects.push(SubjectData { name: format!("syn{i:02}"), matrices, annotations: ann });
    }
    eprintln!("features: {:.1?}", t0.elapsed());
    let mut cfg = EvalConfig::default();
    cfg.train.train_stride = 4;
    let t1 = Instant::now();
    let report = run_loso(&subjects, &cfg)?;
    eprintln!("loso: {:.1?}", t1.elapsed());
    print!("{}", report.to_table());
    print!("{}", report.folds_csv());
    Ok(())
}
