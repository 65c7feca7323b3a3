//! Runs the `pricing` binary end to end.

use std::fs;
use std::process::Command;

fn pricing() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pricing"))
}

fn run_lp_csv(dir: &std::path::Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let status = pricing()
        .args(["run-lp", "--T", "600", "--seed", "9", "--out"])
        .arg(&path)
        .args(extra)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    fs::read_to_string(path).unwrap()
}

#[test]
fn run_lp_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_lp_csv(dir.path(), "a.csv", &[]);
    let b = run_lp_csv(dir.path(), "b.csv", &[]);
    assert_eq!(a, b);
    assert!(a.starts_with("t,price,sold,reward,benchmark,cum_regret\n"));
    assert_eq!(a.lines().count(), 601);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# toy\nT = 50\nseed = 9\nformat = csv\n").unwrap();
    let out = dir.path().join("o.csv");
    let status = pricing().args(["run-lp", "--config"]).arg(&cfg).args(["--T", "80", "--out"]).arg(&out).output().unwrap().status;
    assert!(status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 81);

    let status = pricing().args(["run-lp", "--config"]).arg(&cfg).args(["--out"]).arg(&out).output().unwrap().status;
    assert!(status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 51);
}

#[test]
fn json_output_parses() {
    let out = pricing().args(["run-lv", "--T", "100", "--format", "json"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rounds"].as_array().unwrap().len(), 100);
    assert_eq!(v["metadata"]["num_policies"], 75);
}

#[test]
fn enumerate_reports_counts() {
    let out = pricing().args(["enumerate", "--d", "1", "--delta", "0.25", "--gamma", "0.5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("5 vectors"), "{text}");
    assert!(text.contains("15 members"), "{text}");
    assert!(text.contains("noisy-valuation catalog: 75 policies"), "{text}");
}

#[test]
fn sweep_writes_the_sweep_schema() {
    let out = pricing().args(["sweep", "--k-min", "27", "--k-max", "28", "--reps", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,T,rep,final_regret,wall_ms"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn bad_input_exits_with_code_two() {
    let out = pricing().args(["run-lv", "--T", "10", "--noise", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = pricing().args(["run-lv", "--T", "1048576", "--d", "2", "--max-policies", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bump_instance_is_printed() {
    let out = pricing().args(["run-bump", "--T", "20", "--print-instance"]).output().unwrap();
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("depth 3"), "{err}");
}
