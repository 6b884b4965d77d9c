use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn vaxlens(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vaxlens")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let output = vaxlens(out, args);
    assert!(output.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&output.stderr));
    output
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 40 tweets per class: misleading ones use only negative vocabulary and
/// the rest only positive vocabulary.
fn polar_corpus(dir: &Path) -> PathBuf {
    let negative =
        ["They lied about the deaths", "I am scared and angry", "So sad, my uncle died", "They lied and people died"];
    let positive = [
        "The vaccine is safe and effective",
        "I love my amazing nurses",
        "Feeling great after my dose",
        "Safe, effective and great",
    ];
    let mut lines = Vec::new();
    for i in 0..40 {
        let n = negative[i % negative.len()];
        let p = positive[i % positive.len()];
        lines.push(format!(r#"{{"id":"m{i}","text":"{n} {i}","label":"misleading"}}"#));
        lines.push(format!(r#"{{"id":"n{i}","text":"{p} {i}","label":"non-misleading"}}"#));
    }
    let path = dir.join("polar.jsonl");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn ingest_counts_classes() {
    let out = TempDir::new().unwrap();
    ok(out.path(), &["ingest", fixture("tweets200.jsonl").to_str().unwrap()]);
    let summary = json(&out.path().join("ingest_summary.json"));
    assert_eq!(summary["records"], 200);
    assert_eq!(summary["class_counts"]["misleading"], 100);
    assert_eq!(summary["class_counts"]["non-misleading"], 100);
    assert_eq!(summary["class_ratio"], 1.0);
}

#[test]
fn malformed_line_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let mut lines: Vec<String> =
        (0..4).map(|i| format!(r#"{{"id":"{i}","text":"fine","label":"misleading"}}"#)).collect();
    lines.push("{\"id\": \"4\", \"text\": ".into());
    let input = dir.path().join("bad.jsonl");
    fs::write(&input, lines.join("\n")).unwrap();
    let o = vaxlens(&dir.path().join("out"), &["ingest", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let out = TempDir::new().unwrap();
    assert_eq!(vaxlens(out.path(), &["train", "--model", "svm"]).status.code(), Some(2));
    assert_eq!(vaxlens(out.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_upstream_artifacts_are_precondition_errors() {
    let out = TempDir::new().unwrap();
    let o = vaxlens(out.path(), &["explain"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("model not found"), "{}", stderr(&o));
    let o = vaxlens(out.path(), &["train"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("feature matrix not found"), "{}", stderr(&o));
    assert_eq!(vaxlens(out.path(), &["report"]).status.code(), Some(3));
}

#[test]
fn negative_vocabulary_shows_in_sentiment_shares() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    ok(&out, &["ingest", polar_corpus(dir.path()).to_str().unwrap()]);
    ok(&out, &["analyze"]);
    let report = json(&out.join("analyze.json"));
    let share = |label: &str| {
        report["classes"].as_array().unwrap().iter().find(|c| c["label"] == label).unwrap()["sentiment"]["negative"]
            .as_f64()
            .unwrap()
    };
    assert!(share("misleading") > share("non-misleading"));
    assert_eq!(share("misleading"), 1.0);
}

#[test]
fn separable_fixture_trains_accurately() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    ok(&out, &["ingest", polar_corpus(dir.path()).to_str().unwrap()]);
    ok(&out, &["analyze"]);
    ok(&out, &["train", "--trees", "25"]);
    let report = json(&out.join("train.json"));
    assert!(report["cv"]["mean"]["accuracy"].as_f64().unwrap() >= 0.95, "{}", report["cv"]);
    assert_eq!(report["cv"]["folds"], 5);
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let out = TempDir::new().unwrap();
    let o = out.path();
    ok(o, &["ingest", fixture("tweets200.jsonl").to_str().unwrap()]);
    ok(o, &["analyze", "--ratings", fixture("ratings.csv").to_str().unwrap()]);
    ok(o, &["topics", "--iterations", "200"]);
    ok(o, &["train", "--trees", "30", "--suite"]);
    ok(o, &["explain"]);
    ok(o, &["ablate", "--folds", "3"]);
    ok(o, &["report"]);
    for name in [
        "corpus.jsonl",
        "ingest_summary.json",
        "ingest_summary.txt",
        "features.csv",
        "emotion_scores.csv",
        "analyze.json",
        "analyze.txt",
        "correlation.json",
        "sentiment.svg",
        "emotion.svg",
        "topics.json",
        "topics.txt",
        "model.json",
        "train.json",
        "train.txt",
        "shap_values.csv",
        "explain.json",
        "explain.txt",
        "shap_importance.svg",
        "ablation.json",
        "ablation.txt",
        "ablation.svg",
        "report.md",
    ] {
        assert!(o.join(name).is_file(), "{name} missing");
    }
    for name in ["analyze.json", "topics.json", "train.json", "explain.json", "ablation.json", "model.json"] {
        assert_eq!(json(&o.join(name))["schema_version"], 1, "{name}");
    }
    let kappa = json(&o.join("analyze.json"))["annotator_agreement"]["kappa"].as_f64().unwrap();
    assert!((kappa - 0.210).abs() < 1e-3);
    let ablation = json(&o.join("ablation.json"));
    let rows = ablation["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 19);
    assert!(rows[0]["report"].is_null());
    assert_eq!(rows.last().unwrap()["label"], "All features");
    let report = fs::read_to_string(o.join("report.md")).unwrap();
    for section in
        ["## Corpus", "## Feature analysis", "## Topics", "## Classification", "## Explanations", "## Ablation"]
    {
        assert!(report.contains(section), "{section}");
    }
    assert_eq!(fs::read_to_string(o.join("shap_values.csv")).unwrap().lines().count(), 1 + 200 * 18);
}

#[test]
fn newer_schema_is_refused() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    ok(&out, &["ingest", polar_corpus(dir.path()).to_str().unwrap()]);
    ok(&out, &["analyze"]);
    ok(&out, &["train", "--trees", "5"]);
    let mut model = json(&out.join("model.json"));
    model["schema_version"] = 99.into();
    fs::write(out.join("model.json"), serde_json::to_string(&model).unwrap()).unwrap();
    let o = vaxlens(&out, &["explain"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("schema"), "{}", stderr(&o));
}

#[test]
fn ingest_is_idempotent() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let input = fixture("tweets200.jsonl");
    ok(a.path(), &["ingest", input.to_str().unwrap()]);
    let first = fs::read(a.path().join("corpus.jsonl")).unwrap();
    ok(a.path(), &["ingest", input.to_str().unwrap()]);
    assert_eq!(first, fs::read(a.path().join("corpus.jsonl")).unwrap());
    let again = a.path().join("corpus.jsonl");
    ok(b.path(), &["ingest", again.to_str().unwrap()]);
    assert_eq!(first, fs::read(b.path().join("corpus.jsonl")).unwrap());
}

#[test]
fn csv_labels_are_normalised() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("tweets.csv");
    fs::write(
        &input,
        "id,text,label\n\
         1,Vaccines are poison,Misleading \n\
         2,Got my shot today,non_misleading\n\
         3,\"Safe, effective\",NON-MISLEADING\n\
         4,Nobody knows what is inside,misleading\n\
         5,Just a tweet,\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&out, &["ingest", input.to_str().unwrap()]);
    let summary = json(&out.join("ingest_summary.json"));
    assert_eq!(summary["records"], 5);
    assert_eq!(summary["class_counts"]["misleading"], 2);
    assert_eq!(summary["class_counts"]["non-misleading"], 2);
    let corpus = fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert!(corpus.contains(r#""label":"non-misleading""#), "{corpus}");
}
