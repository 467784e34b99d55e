use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_shiftspec");

const UNIT_CIRCLE: &str = r#"{"model": {"weights": {"kind": "constant", "value": 1},
                                        "diagonals": {"kind": "constant", "value": 0}},
                              "grid": {"nx": 24, "ny": 24, "max_depth": 2}}"#;

fn shiftspec(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn shiftspec")
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn radii_prints_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"weights": {"kind": "constant", "value": 2},
                            "diagonals": {"kind": "constant", "value": 1}}}"#;
    let out = shiftspec(dir.path(), &["radii", "--config-json", cfg, "--lambda", "3,0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        v,
        serde_json::json!({"r_plus": 1.0, "r_minus": 1.0, "method": "closed_form_constant"})
    );
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("job.json"), "{\"model\": [").unwrap();
    let out = shiftspec(dir.path(), &["scan", "--config", "job.json", "--out", "grid"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(entries(dir.path()), ["job.json"]);

    let out = shiftspec(dir.path(), &["scan", "--config-json", UNIT_CIRCLE, "--k-max", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = shiftspec(dir.path(), &["scan", "--config-json", r#"{"model": 1, "extra": 2}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(entries(dir.path()), ["job.json"]);
}

#[test]
fn refinement_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = UNIT_CIRCLE.replace(r#""max_depth": 2"#, r#""max_depth": 2, "max_cells": 600"#);
    let out = shiftspec(dir.path(), &["scan", "--config-json", &cfg, "--out", "g"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(entries(dir.path()).is_empty());
}

#[test]
fn default_scan_writes_csv_and_ring_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = shiftspec(dir.path(), &["scan", "--config-json", UNIT_CIRCLE, "--out", "ring"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(entries(dir.path()), ["ring.csv", "ring.pgm"]);
    let csv = fs::read_to_string(dir.path().join("ring.csv")).unwrap();
    assert!(csv.starts_with("re,im,class,r_plus,r_minus,margin\n"));
    let pgm = fs::read(dir.path().join("ring.pgm")).unwrap();
    let header = b"P5 24 24 255\n";
    assert_eq!(&pgm[..header.len()], header);
    let px = &pgm[header.len()..];
    // Centre and corners are off the circle, some pixel in between is on it.
    assert_eq!(px[12 * 24 + 12], 0);
    assert_eq!(px[0], 0);
    assert!(px.contains(&128));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"weights": {"kind": "constant", "value": 1},
                            "diagonals": {"kind": "periodic", "values": [1, -1]}},
                  "grid": {"nx": 32, "ny": 32, "max_depth": 2}}"#;
    let mut runs = Vec::new();
    for t in ["1", "4", "8"] {
        let stem = format!("t{t}");
        let out = shiftspec(
            dir.path(),
            &[
                "scan", "--config-json", cfg, "--threads", t, "--out", &stem, "--format", "csv", "--format",
                "json", "--format", "pgm",
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<Vec<u8>> = ["csv", "json", "pgm"]
            .iter()
            .map(|ext| fs::read(dir.path().join(format!("{stem}.{ext}"))).unwrap())
            .collect();
        runs.push(files);
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn boundary_and_compare_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"weights": {"kind": "constant", "value": 2},
                            "diagonals": {"kind": "constant", "value": 1}},
                  "eps": 1e-6,
                  "grid": {"nx": 32, "ny": 32, "max_depth": 2},
                  "oracle": {"n": 64}}"#;
    let out = shiftspec(dir.path(), &["boundary", "--config-json", cfg]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["components"].as_array().unwrap().len(), 1);

    let out = shiftspec(dir.path(), &["compare", "--config-json", cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["eigenvalue_count"], 64);
    assert!(v["max_eigenvalue_distance_cells"].as_f64().unwrap() <= 2.0);
}
