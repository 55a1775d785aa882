use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sleepstack::edf::SleepStage;
use sleepstack::synthetic::write_synthetic_recording;

const STAGES: [SleepStage; 8] = [
    SleepStage::W,
    SleepStage::S1,
    SleepStage::S2,
    SleepStage::S3,
    SleepStage::S4,
    SleepStage::Rem,
    SleepStage::Movement,
    SleepStage::W,
];

fn sleepstack(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sleepstack"));
    cmd.args(args).env("RUST_LOG", "warn");
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("SLEEPSTACK_")) {
        cmd.env_remove(k);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = sleepstack(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    sleepstack(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Corpus {
    _dir: tempfile::TempDir,
    root: PathBuf,
    data: PathBuf,
    manifest: PathBuf,
}

fn corpus() -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let data = root.join("data");
    fs::create_dir(&data).unwrap();
    for (i, id) in ["SC4001", "SC4011", "SC4021", "ST7011", "ST7022"].iter().enumerate() {
        write_synthetic_recording(&data, id, &STAGES, i as u64).unwrap();
    }
    let manifest = root.join("manifest.json");
    fs::write(
        &manifest,
        r#"{"task": "RS_TASK", "train_recordings": ["SC4001", "SC4011", "ST7011"], "test_recordings": ["SC4021", "ST7022"]}"#,
    )
    .unwrap();
    Corpus {
        _dir: dir,
        root,
        data,
        manifest,
    }
}

fn ingest(c: &Corpus, scheme: &str, name: &str) -> PathBuf {
    let out = c.root.join(name);
    ok(&["ingest", "--data-dir", s(&c.data), "--manifest", s(&c.manifest), "--scheme", scheme, "--out", s(&out)]);
    out
}

#[test]
fn dry_run_reports_the_parameter_total() {
    let text = ok(&["train", "--dry-run", "--scheme", "5"]);
    let last = text.lines().last().unwrap();
    assert_eq!(last.split_whitespace().collect::<Vec<_>>(), ["total", "17569349"]);
    assert!(text.contains("dense_1") && text.contains("28165"));
}

#[test]
fn ingest_counts_classes_per_subset() {
    let c = corpus();
    let out = ingest(&c, "6", "six");
    let counts = fs::read_to_string(out.join("class_counts.csv")).unwrap();
    let lines: Vec<&str> = counts.lines().collect();
    assert_eq!(lines[0], "subset,S1,S2,S3,S4,REM,W,total");
    // Three SC and two ST recordings, each with 7 kept intervals.
    assert_eq!(lines[1], "SC,3,3,3,3,3,6,21");
    assert_eq!(lines[2], "ST,2,2,2,2,2,4,14");
    assert_eq!(lines[3], "Total,5,5,5,5,5,10,35");
    assert_eq!(lines[4].split(',').last(), Some("21"));
    assert_eq!(lines[5].split(',').last(), Some("14"));

    let five = ingest(&c, "5", "five");
    let counts = fs::read_to_string(five.join("class_counts.csv")).unwrap();
    assert_eq!(counts.lines().nth(3), Some("Total,5,5,10,5,10,35"));
    assert!(out.join("run_config.json").exists());
}

#[test]
fn missing_recordings_are_listed() {
    let c = corpus();
    let empty = c.root.join("empty");
    fs::create_dir(&empty).unwrap();
    let out = sleepstack(&["ingest", "--data-dir", s(&empty), "--manifest", s(&c.manifest), "--out", s(&c.root.join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("SC4001") && err.contains("ST7022"), "{err}");
    assert!(!c.root.join("o").exists());
}

#[test]
fn usage_errors_exit_2_without_outputs() {
    let c = corpus();
    let store = ingest(&c, "6", "store").join("epochs.store");
    let out = c.root.join("train");
    assert_eq!(code(&["train", "--store", s(&store), "--out", s(&out)]), 2);
    assert_eq!(code(&["train", "--store", s(&store), "--manifest", s(&c.root.join("nope.json")), "--out", s(&out)]), 2);
    assert_eq!(code(&["train", "--store", s(&store), "--manifest", s(&c.manifest), "--task", "sc", "--out", s(&out)]), 2);
    assert_eq!(code(&["train", "--store", s(&store), "--manifest", s(&c.manifest), "--scheme", "5", "--out", s(&out)]), 2);
    assert_eq!(code(&["train", "--bogus"]), 2);
    assert!(!out.exists());
    fs::write(c.root.join("bad.store"), b"not a store").unwrap();
    assert_eq!(code(&["analyze", "--store", s(&c.root.join("bad.store")), "--out", s(&out)]), 3);
}

#[test]
fn env_fills_what_flags_and_config_leave_open() {
    let c = corpus();
    let out = c.root.join("env");
    let res = Command::new(env!("CARGO_BIN_EXE_sleepstack"))
        .args(["ingest", "--manifest", s(&c.manifest), "--out", s(&out)])
        .env("SLEEPSTACK_DATA_DIR", &c.data)
        .env("SLEEPSTACK_SEED", "41")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 41);
    assert_eq!(cfg["scheme"], 6);
    assert_eq!(cfg["command"], "ingest");
}

#[test]
fn train_eval_baseline_and_analyze() {
    let c = corpus();
    let store_dir = ingest(&c, "6", "store");
    let store = store_dir.join("epochs.store");
    let train_args = |out: &Path| {
        vec![
            "train".to_string(),
            "--store".into(),
            s(&store).into(),
            "--manifest".into(),
            s(&c.manifest).into(),
            "--seed".into(),
            "7".into(),
            "--epochs".into(),
            "1".into(),
            "--batch-size".into(),
            "8".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let (a, b) = (c.root.join("a"), c.root.join("b"));
    run(train_args(&a));
    run(train_args(&b));
    let ckpt = fs::read(a.join("checkpoint.bin")).unwrap();
    assert_eq!(ckpt, fs::read(b.join("checkpoint.bin")).unwrap());
    assert_eq!(fs::read(a.join("history.csv")).unwrap(), fs::read(b.join("history.csv")).unwrap());

    // Replaying the echoed config reproduces the checkpoint.
    let replay = c.root.join("replay");
    ok(&["train", "--config", s(&a.join("run_config.json")), "--out", s(&replay)]);
    assert_eq!(ckpt, fs::read(replay.join("checkpoint.bin")).unwrap());

    let ck = a.join("checkpoint.bin");
    let (e1, e2) = (c.root.join("e1"), c.root.join("e2"));
    for e in [&e1, &e2] {
        ok(&["eval", "--checkpoint", s(&ck), "--store", s(&store), "--manifest", s(&c.manifest), "--out", s(e)]);
    }
    for f in ["metrics.csv", "confusion.csv", "per_recording.csv", "per_recording.svg", "summary.csv"] {
        assert_eq!(fs::read(e1.join(f)).unwrap(), fs::read(e2.join(f)).unwrap(), "{f}");
    }
    let metrics = fs::read_to_string(e1.join("metrics.csv")).unwrap();
    for name in ["S1 Sens.", "Avg Sens.", "Avg Spec.", "Epoch-Wise Acc", "Patient-Wise Acc"] {
        assert!(metrics.lines().any(|l| l.starts_with(&format!("{name},"))), "{name}");
    }
    let per_rec = fs::read_to_string(e1.join("per_recording.csv")).unwrap();
    assert_eq!(per_rec.lines().count(), 3);

    // A 6-class checkpoint does not load against 5-class labels.
    let five = ingest(&c, "5", "five").join("epochs.store");
    let out = c.root.join("mismatch");
    assert_eq!(code(&["eval", "--checkpoint", s(&ck), "--store", s(&five), "--manifest", s(&c.manifest), "--out", s(&out)]), 3);

    let base = c.root.join("baseline");
    ok(&["baseline", "--store", s(&store), "--manifest", s(&c.manifest), "--checkpoint", s(&ck), "--out", s(&base)]);
    let summary = fs::read_to_string(base.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("baseline,") && rows[2].starts_with("network,"));
    let features = fs::read_to_string(base.join("features_train.csv")).unwrap();
    assert_eq!(features.lines().next().unwrap().split(',').count(), 13);
    let ensemble = sleepstack::baseline::BaggingEnsemble::from_json(&fs::read_to_string(base.join("ensemble.json")).unwrap()).unwrap();
    assert_eq!(ensemble.trees.len(), 71);

    let an = c.root.join("analyze");
    ok(&["analyze", "--store", s(&store), "--out", s(&an)]);
    let anova = fs::read_to_string(an.join("anova.csv")).unwrap();
    assert_eq!(anova.lines().count(), 21);
    assert!(an.join("anova_summary.txt").exists());
    assert!(fs::read_dir(&an).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().starts_with("kde_")));
}

#[test]
fn analyze_needs_both_subsets() {
    let c = corpus();
    let sc_only = c.root.join("sc_only.json");
    fs::write(&sc_only, r#"{"task": "SC_TASK", "train_recordings": ["SC4001"], "test_recordings": ["SC4011"]}"#).unwrap();
    let out = c.root.join("sc");
    ok(&["ingest", "--data-dir", s(&c.data), "--manifest", s(&sc_only), "--out", s(&out)]);
    let res = sleepstack(&["analyze", "--store", s(&out.join("epochs.store")), "--out", s(&c.root.join("an"))]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("SC and ST"));
}
