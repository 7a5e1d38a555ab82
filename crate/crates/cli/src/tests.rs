use std::path::Path;

use clap::Parser;
use plateau_experiments::rows::read_csv;
use plateau_core::analytics::PrefactorMode;
use serde_json::json;

use crate::{run, Cli};

struct Outcome {
    code: i32,
    stderr: String,
}

fn plateau(args: &[&str]) -> Outcome {
    let cli = Cli::try_parse_from(std::iter::once("plateau").chain(args.iter().copied())).expect("arguments parse");
    match run(cli) {
        Ok(()) => Outcome { code: 0, stderr: String::new() },
        Err(e) => Outcome { code: e.exit_code(), stderr: e.to_string() },
    }
}

fn write_config(dir: &Path, value: serde_json::Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, value.to_string()).unwrap();
    path.display().to_string()
}

fn small_config() -> serde_json::Value {
    json!({
        "schema": 1,
        "tag": "small",
        "circuit": {"n": 4, "layers": 3, "block_width": 2, "entangler": "cx_brick"},
        "n_samples": 500,
        "master_seed": 11,
        "sweep": {"prune_fraction": [0.0, 0.5, 1.0]}
    })
}

#[test]
fn unknown_config_field_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg["circuit"]["depth"] = json!(3);
    let path = write_config(dir.path(), cfg);
    let out = plateau(&["sample", "--config", &path, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("depth"));
}

#[test]
fn invalid_width_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg["circuit"]["block_width"] = json!(3);
    let path = write_config(dir.path(), cfg);
    let out = plateau(&["sample", "--config", &path, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("block_width"), "{}", out.stderr);
}

#[test]
fn verify_fast_exits_zero() {
    let out = plateau(&["verify", "fast"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
}

#[test]
fn manifest_rerun_reproduces_csv() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let path = write_config(dir.path(), small_config());
    let out = plateau(&["sample", "--config", &path, "--out", first.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let manifest = first.join("small.manifest.json");
    let out = plateau(&["sample", "--config", manifest.to_str().unwrap(), "--workers", "2", "--out", second.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let a = std::fs::read(first.join("small.csv")).unwrap();
    let b = std::fs::read(second.join("small.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn full_pruning_gives_exact_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), small_config());
    assert!(plateau(&["sample", "--config", &path, "--out", dir.path().to_str().unwrap()]).code == 0);
    let rows = read_csv(&dir.path().join("small.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    let pruned = rows.iter().find(|r| r.n_eff == 0).expect("fully pruned row");
    assert_eq!(pruned.var_est, Some(0.0));
    assert!(rows.iter().filter(|r| r.n_eff > 0).all(|r| r.var_est.unwrap() > 0.0));
}

#[test]
fn predict_single_layer_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "schema": 1,
        "tag": "example",
        "circuit": {"n": 9, "block_width": 3},
        "n_samples": 2,
        "master_seed": 0
    });
    let path = write_config(dir.path(), cfg);
    let out = plateau(&["predict", "--config", &path, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows = read_csv(&dir.path().join("example-predicted.csv")).unwrap();
    let row = rows.iter().find(|r| r.prefactor_mode == PrefactorMode::BlockWidth).unwrap();
    assert_eq!(row.n_eff, 3);
    let v = row.predicted.unwrap();
    assert!((v - 7.90e-4).abs() < 5e-7, "{v}");
}

#[test]
fn deep_prediction_without_amplitude_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), small_config());
    let out = plateau(&["predict", "--config", &path, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("c0"));
}

#[test]
fn figure_needing_calibration_explains_missing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = plateau(&["figure", "fig1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    let err = &out.stderr;
    assert!(err.contains("plateau calibrate"), "{err}");
}

#[test]
fn small_figure_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = plateau(&["figure", "fig4", "--n", "4", "--samples", "200", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows = read_csv(&dir.path().join("fig4.csv")).unwrap();
    assert!(!rows.is_empty());
    let svg = std::fs::read_to_string(dir.path().join("fig4.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<desc>"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig4.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "figure");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}
