//! End-to-end checks of the command-line binary: artifact layout, exit
//! codes, and byte-level reproducibility of the numeric outputs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emqs"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

const FULL_RUN: &str = r#"{
  "grid": {"dim": 2, "cells": [16, 16], "extents": [1.0, 1.0]},
  "graph": {"type": "constant", "sigma": 1.0},
  "initial": {"preset": "solenoidal_mode", "wavenumbers": [1, 1], "amplitude": 1.0},
  "solver": {"type": "full", "epsilon": 1.0, "t_final": 0.05, "dt": 0.005}
}"#;

#[test]
fn run_writes_expected_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FULL_RUN);
    let out = tmp.path().join("out");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let ledger = fs::read_to_string(out.join("ledger.csv")).unwrap();
    let lines: Vec<&str> = ledger.lines().collect();
    assert_eq!(lines[0], "t,e_electric,e_magnetic,dissipation,work");
    // dt = 0.005 over t_final = 0.05 gives 10 steps, so 11 ledger rows.
    assert_eq!(lines.len(), 12, "ledger rows: {}", lines.len());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["complete"], true);
    assert!(manifest["error"].is_null());
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    for artifact in manifest["artifacts"].as_array().unwrap() {
        assert!(out.join(artifact.as_str().unwrap()).exists(), "missing {artifact}");
    }
    assert!(out.join("report.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FULL_RUN);
    let mut payloads = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = bin()
            .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        payloads.push((
            fs::read(out.join("ledger.csv")).unwrap(),
            fs::read(out.join("report.json")).unwrap(),
        ));
    }
    assert_eq!(payloads[0], payloads[1], "numeric artifacts must be deterministic");
}

#[test]
fn malformed_json_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"grid\": [oops");
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap(), "run"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_field_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &FULL_RUN.replace("\"graph\"", "\"bogus\": 1,\n  \"graph\""),
    );
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap(), "run"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["--out", tmp.path().join("o").to_str().unwrap(), "run"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn degenerate_law_exits_with_solver_code() {
    // sigma = 0 is structurally valid but the stationary inversion has
    // no unique solution, which surfaces once the solver starts.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
          "grid": {"dim": 2, "cells": [8, 8], "extents": [1.0, 1.0]},
          "graph": {"type": "constant", "sigma": 0.0},
          "initial": {"preset": "solenoidal_mode", "wavenumbers": [1, 1], "amplitude": 1.0},
          "solver": {"type": "qs", "t_final": 0.1}
        }"#,
    );
    let out = tmp.path().join("o");
    let result = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], false);
    assert!(manifest["error"].as_str().is_some());
}

#[test]
fn validate_graph_exit_codes_track_the_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#"{
      "grid": {"dim": 2, "cells": [8, 8], "extents": [1.0, 1.0]},
      "graph": {"type": "power_law", "p": 2.0},
      "initial": {"preset": "zero"},
      "solver": {"type": "qs", "t_final": 0.1},
      "growth": {"p": 2.0, "a0": 0.5, "a1": 0.0, "b0": B0, "m0": 0.0, "s_max": 6.0, "n_samples": 100}
    }"#;

    let cfg = write_config(tmp.path(), &base.replace("B0", "1.0"));
    let out_ok = tmp.path().join("ok");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out_ok.to_str().unwrap(), "validate-graph"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_ok.join("growth.json")).unwrap()).unwrap();
    assert_eq!(verdict["lower_ok"], true);
    assert_eq!(verdict["upper_ok"], true);

    // An upper envelope far below the graph must fail the check.
    let cfg = write_config(tmp.path(), &base.replace("B0", "0.001"));
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", tmp.path().join("bad").to_str().unwrap(), "validate-graph"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn strict_sweep_confirms_on_a_diffusive_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
          "grid": {"dim": 2, "cells": [16, 16], "extents": [3.141592653589793, 3.141592653589793]},
          "graph": {"type": "constant", "sigma": 1.0},
          "initial": {"preset": "solenoidal_mode", "wavenumbers": [1, 1], "amplitude": 1.0},
          "solver": {"type": "qs", "t_final": 0.3},
          "sweep": {"eps_list": [1e-1, 1e-2, 1e-3], "snapshots": 6}
        }"#,
    );
    let out = tmp.path().join("o");
    let status = bin()
        .args([
            "--config", cfg.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
            "--strict",
            "--threads", "3",
            "sweep",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0), "strict sweep should confirm");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["confirming"], true);
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(out.join("sweep.csv").exists());
}
