use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pertcrf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pertcrf")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_documents_flags_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = pertcrf(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    let help = String::from_utf8_lossy(&o.stdout);
    for sub in ["split", "stats", "synth", "train", "tag", "eval", "experiment"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
    let o = pertcrf(&["train", "--help"], dir.path());
    assert_eq!(code(&o), 0);
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in ["--train", "--valid", "--task", "--template", "--l1", "--l2", "--max-iter", "--ezafe-model", "--out", "--threads"] {
        assert!(help.contains(flag), "{flag} missing from train help");
    }
    assert!(help.contains("[default: 0.1]"));
    assert!(help.contains("[default: 100]"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.tsv"), "a\tN\t0\n").unwrap();
    let o = pertcrf(&["split", "c.tsv", "--out-dir", "o", "--test", "0.6", "--valid", "0.5"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);
    let o = pertcrf(&["train", "--train", "c.tsv", "--task", "pos-ez-input", "--out", "m.crf"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(!dir.path().join("m.crf").exists());
    let o = pertcrf(&["stats", "c.tsv", "--bogus"], dir.path());
    assert_eq!(code(&o), 1);
    let o = pertcrf(&["synth", "--out", "x.tsv"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn data_errors_exit_two_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.tsv"), "a\tN\t0\nketāb\tN\t2\n").unwrap();
    let o = pertcrf(&["split", "bad.tsv", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(!dir.path().join("out").exists());
    let o = pertcrf(&["stats", "missing.tsv"], dir.path());
    assert_eq!(code(&o), 2);
    fs::write(dir.path().join("m.crf"), "PERTCRF v99 CRF1 1 0\nX\nT\tX\t0.0\n").unwrap();
    fs::write(dir.path().join("c.tsv"), "a\tN\t0\n").unwrap();
    let o = pertcrf(&["eval", "--model", "m.crf", "--corpus", "c.tsv", "--report", "r"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unsupported version"));
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let o = pertcrf(args, d);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        String::from_utf8(o.stdout).unwrap()
    };
    let out = run(&["synth", "--preset", "tagging", "--sentences", "300", "--out", "all.tsv", "--write-spec", "spec.hmm"]);
    assert!(out.contains("300 sentences"));
    // The written spec regenerates the same corpus.
    run(&["synth", "--spec", "spec.hmm", "--sentences", "300", "--out", "again.tsv"]);
    assert_eq!(fs::read(d.join("all.tsv")).unwrap(), fs::read(d.join("again.tsv")).unwrap());

    let counts = run(&["split", "all.tsv", "--out-dir", "parts"]);
    assert!(counts.contains("test\t30\t"), "{counts}");
    assert!(counts.contains("valid\t30\t"));
    assert!(counts.contains("train\t240\t"));

    let stats = run(&["stats", "parts/train.tsv"]);
    assert!(stats.starts_with("pos\tezafe_pct\tfreq_pct\tH\n"));

    let common = ["--train", "parts/train.tsv", "--valid", "parts/valid.tsv", "--max-iter", "30"];
    let mut args = vec!["train", "--task", "ezafe", "--out", "ez.crf"];
    args.extend(common);
    run(&args);
    let log = fs::read_to_string(d.join("ez.crf.log")).unwrap();
    assert!(log.starts_with("iteration\tobjective\tvalid_f1\n"));
    assert!(log.lines().any(|l| l.starts_with("10\t") && !l.ends_with("\t-")));

    let mut args = vec!["train", "--task", "pos-ez-input", "--template", "crf2", "--ezafe-model", "ez.crf", "--out", "pos.crf"];
    args.extend(common);
    run(&args);
    let mut args = vec!["train", "--task", "pos", "--template", "crf2", "--out", "plain.crf", "--threads", "2"];
    args.extend(common);
    run(&args);

    run(&["eval", "--model", "ez.crf", "--corpus", "parts/test.tsv", "--report", "ez_report"]);
    let json: Value = serde_json::from_str(&fs::read_to_string(d.join("ez_report.json")).unwrap()).unwrap();
    let section = &json["sections"][0];
    for key in ["precision", "recall", "f1", "accuracy", "per_tag", "ezafe_f1_per_pos", "macro_mean"] {
        assert!(!section[key].is_null(), "{key} missing");
    }
    let text = fs::read_to_string(d.join("ez_report.txt")).unwrap();
    let f1_line = text.lines().find(|l| l.starts_with("f1: ")).unwrap();
    assert_eq!(f1_line[4..].parse::<f64>().unwrap(), section["f1"].as_f64().unwrap());

    run(&[
        "eval", "--model", "pos.crf", "--ezafe-model", "ez.crf", "--baseline", "plain.crf", "--corpus", "parts/test.tsv",
        "--report", "pos_report",
    ]);
    let json: Value = serde_json::from_str(&fs::read_to_string(d.join("pos_report.json")).unwrap()).unwrap();
    assert_eq!(json["sections"][0]["kind"], "macro");
    assert!(json["delta"].as_array().is_some_and(|d| !d.is_empty()));

    let raw = fs::read_to_string(d.join("parts/test.tsv")).unwrap();
    let first: Vec<&str> = raw.lines().take_while(|l| !l.is_empty()).map(|l| l.split('\t').next().unwrap()).collect();
    fs::write(d.join("raw.txt"), format!("{}\n", first.join(" "))).unwrap();
    let tagged = run(&["tag", "--model", "pos.crf", "--ezafe-model", "ez.crf", "raw.txt"]);
    assert_eq!(tagged.lines().count(), first.len());
    let o = pertcrf(&["tag", "--model", "pos.crf", "raw.txt"], d);
    assert_eq!(code(&o), 1);

    fs::write(
        d.join("exp.cfg"),
        "task = joint\ntemplate = crf1\nmax_iter = 10\ntrain = all.tsv\nout = exp\n",
    )
    .unwrap();
    run(&["experiment", "--config", "exp.cfg"]);
    for f in ["model.crf", "train.log", "report.txt", "report.json"] {
        assert!(d.join("exp").join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(d.join("exp/report.txt")).unwrap();
    assert!(report.contains("[test/pos]") && report.contains("[test/ezafe]"));
    assert!(report.contains("seed: 17"));
}
