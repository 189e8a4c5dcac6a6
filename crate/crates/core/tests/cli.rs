use std::path::Path;
use std::process::{Command, Output};

const QTC: &str = env!("CARGO_BIN_EXE_qtc");

fn qtc(dir: &Path, args: &[&str]) -> Output {
    Command::new(QTC)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qtc(dir, args);
    assert!(
        out.status.success(),
        "qtc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(dir, &["synth", "--per-class", "12", "--out", "corpus.csv"]);
}

#[test]
fn full_qsvc_pipeline_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let out = ok(d, &["preprocess", "--corpus", "corpus.csv"]);
    assert!(out.contains("resolved config") && out.contains("seeds: split=42"));
    ok(d, &["reduce"]);
    ok(d, &["kernel"]);
    ok(d, &["train", "--model", "qsvc"]);
    let report = ok(d, &["evaluate"]);
    for row in [
        "accuracy",
        "macro avg",
        "weighted avg",
        "precision    recall  f1-score   support",
    ] {
        assert!(report.contains(row), "missing {row:?}");
    }
    for f in [
        "work/tfidf/features.csv",
        "work/tfidf/labels.csv",
        "work/tfidf/manifest.json",
        "work/reduced/manifest.json",
        "work/kernel/gram.csv",
        "work/kernel/gram.manifest.json",
        "work/model.json",
        "work/report/report.json",
        "work/report/report.txt",
    ] {
        assert!(d.join(f).is_file(), "{f} missing");
    }
    let header = std::fs::read_to_string(d.join("work/reduced/features.csv")).unwrap();
    assert!(header.starts_with("id,pc1,pc2\n"));
}

#[test]
fn vqc_curve_has_budget_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    ok(d, &["preprocess", "--corpus", "corpus.csv"]);
    ok(d, &["reduce"]);
    ok(d, &["train", "--model", "vqc", "--iters", "30"]);
    let curve = std::fs::read_to_string(d.join("work/curve.csv")).unwrap();
    let rows: Vec<&str> = curve
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert!(rows.len() >= 30);
    let best: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn rerun_is_byte_identical() {
    let run = || {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        synth(d);
        ok(d, &["preprocess", "--corpus", "corpus.csv"]);
        ok(d, &["reduce"]);
        ok(d, &["train", "--model", "qnnc", "--iters", "10"]);
        ok(d, &["evaluate"]);
        let files = [
            "corpus.csv",
            "work/reduced/manifest.json",
            "work/model.json",
            "work/curve.csv",
            "work/report/report.json",
        ];
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(d.join(f)).unwrap())
            .collect();
        (tmp, bytes)
    };
    assert_eq!(run().1, run().1);
}

#[test]
fn help_lists_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let help = ok(tmp.path(), &["train", "--help"]);
    for needle in [
        "--max-features",
        "[default: 20]",
        "[default: 0.2]",
        "[default: 30]",
        "[default: qsvc]",
        "--shots",
    ] {
        assert!(help.contains(needle), "help lacks {needle:?}");
    }
    let synth = ok(tmp.path(), &["synth", "--help"]);
    assert!(synth.contains("[default: 40]"));
}

#[test]
fn unknown_model_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qtc(tmp.path(), &["train", "--model", "forest"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn skipped_stage_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    ok(d, &["preprocess", "--corpus", "corpus.csv"]);
    let out = qtc(d, &["train"]);
    assert_eq!(out.status.code(), Some(1));
    // A preprocess directory offered where the reduced stage belongs.
    std::fs::rename(d.join("work/tfidf"), d.join("work/reduced")).unwrap();
    let out = qtc(d, &["train"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    std::fs::write(
        d.join("cfg.json"),
        r#"{"max_features": 8, "test_fraction": 0.25}"#,
    )
    .unwrap();
    let out = ok(
        d,
        &[
            "preprocess",
            "--corpus",
            "corpus.csv",
            "--config",
            "cfg.json",
            "--max-features",
            "10",
        ],
    );
    assert!(out.contains("\"max_features\": 10"));
    assert!(out.contains("\"test_fraction\": 0.25"));
    let header = std::fs::read_to_string(d.join("work/tfidf/features.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 11);
}

#[test]
fn missing_corpus_column_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let out = qtc(
        d,
        &[
            "preprocess",
            "--corpus",
            "corpus.csv",
            "--text-column",
            "Body",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Body"));
}
