use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn tadetect(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tadetect"))
        .args(args)
        .current_dir(root)
        .output()
        .unwrap()
}

fn ok(root: &Path, args: &[&str]) {
    let out = tadetect(root, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Three synthetic subjects and a model trained on them.
fn fixture() -> &'static TempDir {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        ok(dir.path(), &["synth", "--seed", "11", "--duration", "600", "--subjects", "3", "--out", "data"]);
        ok(dir.path(), &["train", "--data", "data", "--train-stride", "4", "--out", "model"]);
        dir
    })
}

fn error_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("").to_string()
}

#[test]
fn chained_stages_match_single_shot() {
    let root = fixture().path();
    let scratch = tempfile::tempdir().unwrap();
    let s = scratch.path().to_str().unwrap();
    let pre = format!("{s}/pre");
    let feat = format!("{s}/feat");
    let scores = format!("{s}/scores");
    let chained = format!("{s}/chained");
    let single = format!("{s}/single");
    ok(root, &["preprocess", "--input", "data/subject_001.csv", "--out", &pre]);
    ok(root, &["features", "--input", &format!("{pre}/subject_001.pre.csv"), "--out", &feat]);
    ok(root, &["score", "--model", "model/model.toml", "--input", &format!("{feat}/subject_001.features.toml"), "--out", &scores]);
    ok(root, &["detect-ta", "--model", "model/model.toml", "--input", &format!("{scores}/subject_001.scores.csv"), "--out", &chained]);
    ok(root, &["detect-ta", "--model", "model/model.toml", "--input", "data/subject_001.csv", "--out", &single]);
    for file in ["subject_001.envelope.csv", "subject_001.epochs.csv"] {
        let a = std::fs::read(format!("{chained}/{file}")).unwrap();
        let b = std::fs::read(format!("{single}/{file}")).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn eval_reports_one_fold_per_subject() {
    let root = fixture().path();
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    ok(root, &["eval", "--data", "data", "--train-stride", "4", "--bootstrap-resamples", "200", "--out", dir]);
    let folds = std::fs::read_to_string(out.path().join("folds.csv")).unwrap();
    assert_eq!(folds.lines().count(), 1 + 3);
    for f in ["report.toml", "report.txt", "eval.meta.toml"] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn errors_are_one_line_with_exit_codes() {
    let root = fixture().path();
    let cases: [(&[&str], i32, &str); 5] = [
        (&["no-such-command"], 1, "usage"),
        (&["train", "--data", "missing-dir", "--out", "x"], 2, "io"),
        (&["detect-ta", "--input", "data/subject_000.csv", "--out", "x"], 3, "validation"),
        (&["detect-ta", "--model", "model/model.toml", "--min-sep", "60", "--input", "data/subject_000.csv", "--out", "x"], 3, "validation"),
        (&["eval", "--data", "data", "--c=-1", "--out", "x"], 3, "validation"),
    ];
    for (args, code, kind) in cases {
        let out = tadetect(root, args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let line = error_line(&out);
        assert!(line.starts_with(&format!("error kind={kind} code={code} message=")), "{args:?}: {line}");
    }
}

#[test]
fn malformed_csv_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "time,Fp1\n0.0,abc\n").unwrap();
    let out = tadetect(dir.path(), &["preprocess", "--input", "bad.csv", "--fs", "256", "--out", "p"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_line(&out).starts_with("error kind="));
}
