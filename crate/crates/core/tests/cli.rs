use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rgn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgn"))
        .args(args)
        .current_dir(dir)
        .env_remove("RGN_DATA_ROOT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SYNTH: &[&str] = &[
    "synth",
    "--set",
    "num_examples=48",
    "--set",
    "num_entities=4",
    "--set",
    "max_hops=2",
    "--set",
    "seed=3",
];

fn small_config(dir: &Path) {
    std::fs::write(
        dir.join("cfg.json"),
        r#"{"model": {"encoder": {"d": 8, "m": 12, "n": 24, "heads": 2, "freeze_epochs": 0},
                      "k": 2, "entity_hidden": [6], "relation_hidden": [6], "classifier_hidden": 6},
            "train": {"epochs": 2, "batch_size": 8},
            "data": {"train": "s.jsonl", "dev": "s.jsonl"}}"#,
    )
    .unwrap();
}

#[test]
fn synth_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a: Vec<&str> = SYNTH.iter().copied().chain(["--out", "a.jsonl"]).collect();
    let b: Vec<&str> = SYNTH.iter().copied().chain(["--out", "b.jsonl"]).collect();
    assert_eq!(code(&rgn(dir.path(), &a)), 0);
    assert_eq!(code(&rgn(dir.path(), &b)), 0);
    let fa = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(fa, std::fs::read(dir.path().join("b.jsonl")).unwrap());
    assert_eq!(fa.iter().filter(|&&c| c == b'\n').count(), 48);

    let stats = rgn(dir.path(), &["stats", "--data", "a.jsonl"]);
    assert_eq!(code(&stats), 0);
    let s = stats_json_total(&stats);
    assert_eq!(s, 48);
}

fn stats_json_total(out: &Output) -> u64 {
    stdout_json(out)["total"].as_u64().unwrap()
}

#[test]
fn train_eval_predict_inspect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args: Vec<&str> = SYNTH.iter().copied().chain(["--out", "s.jsonl"]).collect();
    assert_eq!(code(&rgn(p, &args)), 0);
    small_config(p);

    let train = rgn(p, &["train", "--config", "cfg.json", "--out", "m", "--log", "log.jsonl"]);
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));
    let log = std::fs::read_to_string(p.join("log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);

    let eval = rgn(p, &["eval", "--model", "m", "--data", "s.jsonl", "--report", "r.json"]);
    assert_eq!(code(&eval), 0);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["overall"]["total"], 48);
    let confusion: u64 = report["confusion"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(confusion, 48);

    let pred = rgn(p, &["predict", "--model", "m", "--input", "s.jsonl"]);
    assert_eq!(code(&pred), 0);
    let lines: Vec<Value> = String::from_utf8(pred.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 48);
    for l in &lines {
        let total: f64 = l["probabilities"]
            .as_object()
            .unwrap()
            .values()
            .map(|v| v.as_f64().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
    assert!(String::from_utf8_lossy(&pred.stderr).contains("accuracy"));

    let inspect = rgn(p, &["inspect", "--model", "m", "--input", "s.jsonl", "--output", "t.jsonl"]);
    assert_eq!(code(&inspect), 0);
    let first: Value = serde_json::from_str(
        std::fs::read_to_string(p.join("t.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(first["question_entities"].as_array().unwrap().len(), 2);
    for r in first["relations"].as_array().unwrap() {
        assert!(r["left"]["pooled_index"].as_u64().unwrap() < 4);
        assert!(r["right"]["pooled_index"].as_u64().unwrap() < 4);
    }

    // A runtime config that disagrees with the checkpoint.
    let mismatch = rgn(
        p,
        &["eval", "--model", "m", "--data", "s.jsonl", "--config", "cfg.json", "--set", "model.k=3"],
    );
    assert_eq!(code(&mismatch), 5);
    let matching = rgn(p, &["eval", "--model", "m", "--data", "s.jsonl", "--config", "cfg.json"]);
    assert_eq!(code(&matching), 0);
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&rgn(p, &["dump-config", "--set", "model.nope=1"])), 2);
    assert_eq!(code(&rgn(p, &["dump-config", "--set", "model.k=0"])), 2);
    assert_eq!(code(&rgn(p, &["no-such-command"])), 2);
    assert_eq!(code(&rgn(p, &["bench", "--iterations", "0"])), 2);
    assert_eq!(code(&rgn(p, &["bench", "--mode", "multi-head", "--d", "10"])), 2);
    assert_eq!(code(&rgn(p, &["stats", "--data", "missing.jsonl"])), 3);

    std::fs::write(p.join("bad.jsonl"), "{not json}\n").unwrap();
    let bad = rgn(p, &["stats", "--data", "bad.jsonl"]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));

    std::fs::write(p.join("empty.jsonl"), "").unwrap();
    assert_eq!(code(&rgn(p, &["eval", "--baseline", "majority", "--data", "empty.jsonl"])), 3);

    std::fs::create_dir(p.join("m")).unwrap();
    std::fs::write(
        p.join("m/manifest.json"),
        r#"{"format_version": 99, "config": null, "fingerprint": null, "tensors": []}"#,
    )
    .unwrap();
    std::fs::write(p.join("m/params.bin"), b"").unwrap();
    let args = ["predict", "--model", "m", "--input", "empty.jsonl"];
    assert_eq!(code(&rgn(p, &args)), 5);
}

#[test]
fn gradcheck_passes_and_detects_a_broken_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let ok = rgn(dir.path(), &["gradcheck"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let report = stdout_json(&ok);
    assert_eq!(report["passed"], true);
    assert!(report["report"]["max_rel_error"].as_f64().unwrap() < 5e-3);

    let broken = rgn(dir.path(), &["gradcheck", "--break-param", "classifier.0.weight"]);
    assert_eq!(code(&broken), 1);
    let worst = &stdout_json(&broken)["report"]["worst"]["param"];
    assert_eq!(worst, "classifier.0.weight");
}

#[test]
fn majority_baseline_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let rows: Vec<String> = (0..10)
        .map(|i| {
            let label = if i < 7 { "no_effect" } else { "more" };
            format!(
                r#"{{"metadata_question_id": "q{i}", "question_stem": "suppose more rain happens , how will it affect floods ?",
                    "question_para_step": ["rain falls."], "answer_label": "{label}",
                    "metadata_question_type": "{}", "metadata_path_len": {}}}"#,
                if i < 7 { "NO_EFFECT" } else { "INPARA_EFFECT" },
                if i < 7 { 0 } else { 1 }
            )
            .replace('\n', " ")
        })
        .collect();
    std::fs::write(p.join("d.jsonl"), rows.join("\n")).unwrap();
    let out = rgn(p, &["eval", "--baseline", "majority", "--data", "d.jsonl"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    assert_eq!(r["overall"]["accuracy"], 0.7);
    assert_eq!(r["by_question_type"]["no_effect"]["accuracy"], 1.0);
    assert_eq!(r["by_question_type"]["in_para"]["accuracy"], 0.0);
}
