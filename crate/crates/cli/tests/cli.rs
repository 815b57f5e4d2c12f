use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_propagate")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path) {
    ok(dir, &["simulate", "--users", "600", "--seed", "5", "--out", "train.jsonl", "--test-out", "test.jsonl"]);
}

#[test]
fn help_lists_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(dir.path(), &["--help"]);
    for sub in ["train", "evaluate", "select-features", "simulate", "experiment", "recommend", "serve"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn train_evaluate_recommend() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    let train = ["train", "--data", "train.jsonl", "--model-kind", "random_forest", "--imbalance", "weighted:30", "--seed", "7"];
    ok(d, &[&train[..], &["--out", "m.json"]].concat());
    ok(d, &[&train[..], &["--out", "m2.json"]].concat());
    assert_eq!(std::fs::read(d.join("m.json")).unwrap(), std::fs::read(d.join("m2.json")).unwrap());

    let table = ok(d, &["evaluate", "--model", "m.json", "--data", "test.jsonl", "--out", "r.csv"]);
    assert!(table.lines().next().unwrap().contains("AUC    F1  F1 of Retweeter"));
    assert!(table.contains("Cost-Sensitive (30:1)") && table.contains("Random Forest"));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let scores = ok(d, &["select-features", "--data", "train.jsonl", "--bins", "5"]);
    assert!(scores.starts_with("feature,chi2,p_value,selected\n"));

    let ranked = ok(d, &["recommend", "--model", "m.json", "--data", "test.jsonl", "--top-n", "3", "--deadline", "90m"]);
    let ranked: serde_json::Value = serde_json::from_str(&ranked).unwrap();
    let ranked = ranked.as_array().unwrap();
    assert_eq!(ranked.len(), 3);
    let probs: Vec<f64> = ranked.iter().map(|c| c["retweet_probability"].as_f64().unwrap()).collect();
    assert!(probs.windows(2).all(|w| w[0] >= w[1]));
    assert!(ranked.iter().all(|c| c["prob_within_deadline"].as_f64().unwrap() >= 0.7));
}

#[test]
fn same_flags_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate(a.path());
    simulate(b.path());
    for f in ["train.jsonl", "test.jsonl"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let args = ["experiment", "--seed", "2", "--strategies", "random,popular:100,predicted,predicted_waittime:24h:0.7", "--out", "e.csv", "--json", "e.json"];
    let text = ok(a.path(), &args);
    ok(b.path(), &args);
    for f in ["e.csv", "e.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let csv = std::fs::read_to_string(a.path().join("e.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for label in ["Random People Contact", "Popular People Contact", "Our Prediction Approach + Wait-Time Model"] {
        assert!(text.contains(label));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let usage = |args: &[&str]| assert_eq!(run(d, args).status.code(), Some(2), "{args:?}");
    usage(&[]);
    usage(&["frobnicate"]);
    usage(&["train", "--data", "x", "--model-kind", "logistic", "--out", "m.json"]);
    usage(&["train", "--data", "x", "--model-kind", "svm", "--seed", "1", "--out", "m.json"]);
    usage(&["train", "--data", "x", "--model-kind", "logistic", "--imbalance", "weighted:0.5", "--seed", "1", "--out", "m"]);
    usage(&["recommend", "--model", "m", "--data", "d", "--cutoff", "1.5"]);
    usage(&["recommend", "--model", "m", "--data", "d", "--deadline", "soon"]);
    usage(&["experiment", "--seed", "1", "--strategies", "random,telepathy"]);

    let data_error = |args: &[&str], code: &str| {
        let out = run(d, args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(&format!("error[{code}]")), "{err}");
    };
    data_error(&["train", "--data", "missing.jsonl", "--model-kind", "logistic", "--seed", "1", "--out", "m.json"], "MissingInput");
    std::fs::write(d.join("bad.jsonl"), "{\"user_id\": 1}\n").unwrap();
    data_error(&["train", "--data", "bad.jsonl", "--model-kind", "logistic", "--seed", "1", "--out", "m.json"], "MalformedRecord");
    simulate(d);
    data_error(&["train", "--data", "train.jsonl", "--model-kind", "logistic", "--seed", "1", "--out", "no/such/m.json"], "MissingOutputDir");
    std::fs::write(d.join("m.json"), "{}").unwrap();
    data_error(&["evaluate", "--model", "m.json", "--data", "test.jsonl"], "CorruptModel");
    std::fs::write(d.join("pop.json"), "{\"n_users\": 0}").unwrap();
    data_error(&["simulate", "--config", "pop.json", "--seed", "1", "--out", "p.jsonl"], "InvalidConfig");
    assert!(!d.join("p.jsonl").exists());
}
