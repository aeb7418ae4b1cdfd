//! Black-box tests of the `forge` binary on small generated fixtures.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use forge_cli::fixture::write_fixture;
use forge_cli::StageReport;
use forge_core::manifest::{read_jsonl, read_manifest};
use serde_json::Value;

fn forge(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_forge"));
    cmd.args(args).env_remove("FORGE_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("forge runs")
}

fn reports(out: &Output) -> Vec<StageReport> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn fixture(count: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), count, 0).unwrap();
    dir
}

fn config_path(dir: &Path) -> String {
    dir.join("pipeline.json").to_string_lossy().into_owned()
}

fn write_config(dir: &Path, stages: Value) -> String {
    let path = dir.join("custom.json");
    std::fs::write(&path, serde_json::json!({"global_seed": 1, "stages": stages}).to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_reports_every_stage_and_balances() {
    let dir = fixture(40);
    let out = forge(&["run", "--config", &config_path(dir.path())], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reps = reports(&out);
    let names: Vec<&str> = reps.iter().map(|r| r.stage.as_str()).collect();
    assert_eq!(names, ["ground", "validate", "faces", "align", "bootstrap", "augment", "assess", "threshold", "pairs"]);
    assert!(reps.iter().all(|r| r.is_balanced() && !r.resumed));
    assert_eq!(reps[0].input, 40);
}

#[test]
fn resume_skips_matching_stages_and_reruns_after_a_change() {
    let dir = fixture(20);
    let cfg = config_path(dir.path());
    assert!(forge(&["run", "--config", &cfg], &[]).status.success());
    let manifest = std::fs::read(dir.path().join("out/pairs.jsonl")).unwrap();

    let again = forge(&["run", "--config", &cfg, "--resume"], &[]);
    assert!(again.status.success());
    assert!(reports(&again).iter().all(|r| r.resumed));
    assert_eq!(std::fs::read(dir.path().join("out/pairs.jsonl")).unwrap(), manifest);

    // a changed threshold invalidates that stage only; pairs reads the assessed manifest
    let changed = forge(&["run", "--config", &cfg, "--resume", "--assessor-threshold", "4.0"], &[]);
    let resumed: BTreeMap<String, bool> = reports(&changed).into_iter().map(|r| (r.stage, r.resumed)).collect();
    assert!(!resumed["threshold"]);
    assert!(resumed["assess"] && resumed["pairs"]);
}

#[test]
fn resume_reruns_when_the_output_was_deleted() {
    let dir = fixture(10);
    let cfg = config_path(dir.path());
    assert!(forge(&["run", "--config", &cfg], &[]).status.success());
    std::fs::remove_file(dir.path().join("out/valid.jsonl")).unwrap();
    let reps = reports(&forge(&["run", "--config", &cfg, "--resume"], &[]));
    assert!(reps[0].resumed);
    assert!(!reps[1].resumed);
}

#[test]
fn seed_precedence_is_flag_then_env_then_config() {
    let run = |extra: &[&str], env: &[(&str, &str)]| {
        let dir = fixture(20);
        let cfg = config_path(dir.path());
        let mut args = vec!["run", "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        assert!(forge(&args, env).status.success());
        std::fs::read(dir.path().join("out/assessed.jsonl")).unwrap()
    };
    let config_seed = run(&[], &[]);
    let env_seed = run(&[], &[("FORGE_SEED", "77")]);
    let flag_seed = run(&["--seed", "77"], &[]);
    let both = run(&["--seed", "77"], &[("FORGE_SEED", "5")]);
    assert_ne!(config_seed, env_seed);
    assert_eq!(env_seed, flag_seed);
    assert_eq!(flag_seed, both);
}

#[test]
fn bad_env_seed_is_a_validation_failure() {
    let dir = fixture(5);
    let out = forge(&["run", "--config", &config_path(dir.path())], &[("FORGE_SEED", "abc")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_1_without_running() {
    let dir = fixture(5);
    let cfg = write_config(
        dir.path(),
        serde_json::json!([
            {"name": "a", "operation": "validate_triplet", "inputs": ["out/b.jsonl"], "output": "out/a.jsonl"},
            {"name": "b", "operation": "validate_triplet", "inputs": ["out/a.jsonl"], "output": "out/b.jsonl"}
        ]),
    );
    let out = forge(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle"));
    assert!(!dir.path().join("out").exists());

    let unknown = write_config(
        dir.path(),
        serde_json::json!([{"name": "a", "operation": "sharpen", "inputs": ["triplets.jsonl"], "output": "o.jsonl"}]),
    );
    assert_eq!(forge(&["run", "--config", &unknown], &[]).status.code(), Some(1));
}

#[test]
fn stage_failure_exits_2_and_keeps_earlier_outputs() {
    let dir = fixture(10);
    std::fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!([
            {"name": "valid", "operation": "validate_triplet", "inputs": ["triplets.jsonl"], "output": "out/valid.jsonl"},
            {"name": "faces", "operation": "face_iou_filter", "params": {"faces": "broken.json"},
             "inputs": ["out/valid.jsonl"], "output": "out/faces.jsonl"}
        ]),
    );
    let out = forge(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_manifest(dir.path().join("out/valid.jsonl")).unwrap().len(), 10);
    assert!(dir.path().join("out/valid.jsonl.fingerprint").exists());
    assert!(!dir.path().join("out/faces.jsonl").exists());
}

#[test]
fn face_gate_matches_a_raster_replay() {
    let dir = fixture(60);
    let cfg = write_config(
        dir.path(),
        serde_json::json!([{"name": "faces", "operation": "face_iou_filter", "params": {"faces": "faces.json"},
                            "inputs": ["triplets.jsonl"], "output": "out/faces.jsonl"}]),
    );
    assert!(forge(&["run", "--config", &cfg], &[]).status.success());

    let faces: BTreeMap<String, Vec<BTreeMap<String, f64>>> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("faces.json")).unwrap()).unwrap();
    let cells = |b: &BTreeMap<String, f64>| {
        let r = |k: &str| b[k] as i64;
        (r("x_min")..r("x_max")).flat_map(move |x| (r("y_min")..r("y_max")).map(move |y| (x, y))).collect::<Vec<_>>()
    };
    let lines: Vec<Value> = read_jsonl(dir.path().join("out/faces.jsonl.records.jsonl"))
        .unwrap()
        .into_iter()
        .map(|l| l.value)
        .collect();
    let mut discarded = 0;
    for (rec, line) in read_manifest(dir.path().join("triplets.jsonl")).unwrap().iter().zip(&lines) {
        assert_eq!(line["triplet_id"], rec.id.as_str());
        let expected = match (faces.get(&rec.source_ref), faces.get(&rec.target_ref)) {
            (Some(s), Some(t)) => {
                let (a, b) = (cells(&s[0]), cells(&t[0]));
                let inter = a.iter().filter(|c| b.contains(c)).count();
                let iou = inter as f64 / (a.len() + b.len() - inter) as f64;
                if iou >= 0.9 {
                    "keep"
                } else {
                    "discard"
                }
            }
            _ => "keep",
        };
        discarded += usize::from(expected == "discard");
        assert_eq!(line["verdict"], expected, "{}", rec.id);
    }
    // one moved-face edit per face-bearing anchor
    assert_eq!(discarded, 6);
}

#[test]
fn validate_flags_bad_lines() {
    let dir = fixture(5);
    let ok = dir.path().join("triplets.jsonl").to_string_lossy().into_owned();
    assert_eq!(forge(&["validate", &ok], &[]).status.code(), Some(0));

    let mut text = std::fs::read_to_string(&ok).unwrap();
    text.push_str(
        r#"{"id":"bad","source_ref":"s","instruction":{"id":"i","text":"x","origin":"synthetic"},"target_ref":"s","provenance":"mined"}"#,
    );
    text.push('\n');
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, text).unwrap();
    let out = forge(&["validate", &bad.to_string_lossy()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&out.stdout).lines().next().unwrap()).unwrap();
    assert_eq!((v["line"].as_u64(), v["id"].as_str()), (Some(6), Some("bad")));
}

#[test]
fn stats_counts_the_fixture() {
    let dir = fixture(25);
    let out = forge(&["stats", &dir.path().join("triplets.jsonl").to_string_lossy()], &[]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"], 25);
    assert_eq!(v["by_provenance"]["mined"], 25);
    assert_eq!(v["by_origin"]["synthetic"], 25);
    assert_eq!(v["duplicates"].as_array().unwrap().len(), 0);
}

#[test]
fn missing_manifest_is_a_validation_failure() {
    assert_eq!(forge(&["stats", "/nonexistent/m.jsonl"], &[]).status.code(), Some(1));
}

#[test]
fn mix_command_reports_exact_counts() {
    let dir = tempfile::tempdir().unwrap();
    let lines = |p: &str| (0..100).map(|i| format!("{{\"id\":\"{p}{i}\",\"prompt\":\"x\"}}\n")).collect::<String>();
    std::fs::write(dir.path().join("e.jsonl"), lines("e")).unwrap();
    std::fs::write(dir.path().join("t.jsonl"), lines("t")).unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let out = forge(
        &["mix", "--edit", &p("e.jsonl"), "--t2i", &p("t.jsonl"), "--t2i-percent", "68", "--edit-percent", "32", "--count", "100"],
        &[],
    );
    assert!(out.status.success());
    let entries: Vec<Value> = String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(entries.len(), 100);
    assert_eq!(entries.iter().filter(|e| e["task"] == "t2i").count(), 68);
}
