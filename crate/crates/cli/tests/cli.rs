//! CLI contract tests: exit codes and selection behavior.

use std::path::PathBuf;
use std::process::Command;

fn workdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("arbor-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn valid_config() -> String {
    r#"{
  "tree": { "kind": "homogeneous", "degree": 3, "kernel": "uniform",
            "epsilon": 0.3333333333333333, "eta": 0.16666666666666666 },
  "solver": { "depth": 8, "tol": 1e-10 },
  "simulation": { "n_paths": 10, "horizon": 50, "seed": 1, "ball_depth": 6 }
}
"#
    .to_string()
}

#[test]
fn missing_config_exits_2() {
    let out = workdir().join("out-missing");
    let status = Command::new(env!("CARGO_BIN_EXE_arbor"))
        .args(["identities", "--config", "/nonexistent/config.json", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_config_exits_2() {
    let dir = workdir();
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, "{ \"tree\": 3 }").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_arbor"))
        .args(["identities", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out-bad"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn usage_error_exits_2() {
    let status = Command::new(env!("CARGO_BIN_EXE_arbor"))
        .arg("no-such-subcommand")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn empty_selection_yields_empty_report_exit_0() {
    let dir = workdir();
    let cfg = dir.join("empty-selection.json");
    let mut text = valid_config();
    text = text.replace(
        "\"solver\"",
        "\"selection\": [],\n  \"solver\"",
    );
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out-empty");
    let status = Command::new(env!("CARGO_BIN_EXE_arbor"))
        .args(["identities", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 0);
    assert_eq!(report["n_fail"], 0);
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = workdir();
    let cfg = dir.join("seed.json");
    std::fs::write(&cfg, valid_config()).unwrap();
    let out = dir.join("out-seed");
    let status = Command::new(env!("CARGO_BIN_EXE_arbor"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "123"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 123);
}
