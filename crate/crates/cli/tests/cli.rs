use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn intmaps(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intmaps"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("INTMAPS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_PARTITION: &[&str] =
    &["partition", "--kmax", "1000", "--depth", "6", "--set-key", "frontier=2000", "--set-key", "seeds=50"];

#[test]
fn validate_passes_for_pm1() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(dir.path(), &["validate", "--map", "pm:s=1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("validation.json").exists());
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "validate");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["config"]["map"], "pm:s=1");
}

#[test]
fn sub_neutral_exponent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(dir.path(), &["validate", "--map", "pm:s=0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(dir.path(), &["validate", "--set-key", "bogus=1"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn malformed_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nmap = pm:s=1\nthis line has no equals sign\n").unwrap();
    let out = intmaps(&dir.path().join("out"), &["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    fs::write(&cfg, "kmax = lots\n").unwrap();
    let out = intmaps(&dir.path().join("out"), &["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn config_file_values_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "map = pm:s=2\nkmax = 500 # trailing comment\n").unwrap();
    let out_dir = dir.path().join("out");
    let mut args = vec!["--config", cfg.to_str().unwrap()];
    args.extend_from_slice(SMALL_PARTITION);
    args.retain(|a| *a != "1000" && *a != "--kmax");
    let out = intmaps(&out_dir, &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["config"]["map"], "pm:s=2");
    assert_eq!(manifest["config"]["kmax"], "500");
}

#[test]
fn partition_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_PARTITION.to_vec();
    args.extend(["--word", "-1,1"]);
    let out = intmaps(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("partition.json"));
    assert!((report["b_1"].as_f64().unwrap() - 0.30902).abs() < 1e-5);
    assert_eq!(report["cylinder"]["word"], "(-1,1)");
    let csv = fs::read_to_string(dir.path().join("b_sequence.csv")).unwrap();
    assert!(csv.starts_with("k,b_k,L_minus_k\n"));
    assert_eq!(csv.lines().count(), 1 + 1001);
    let manifest = json(&dir.path().join("manifest.json"));
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert_eq!(files, ["b_sequence.csv", "cylinder_lengths.csv", "partition.json"]);
}

#[test]
fn bad_word_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_PARTITION.to_vec();
    args.extend(["--word", "1,0"]);
    let out = intmaps(dir.path(), &args);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn exactness_of_the_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(
        dir.path(),
        &["exactness", "--set", "[[0,1]]", "--nmax", "5", "--kmax", "1000", "--depth", "8", "--set-key", "trials=50"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("exactness.json"));
    assert_eq!(report["n_star"], 0);
    let delta = report["delta"].as_f64().unwrap();
    let d = report["d_hat"].as_f64().unwrap();
    assert!((delta - d / (d + 0.5)).abs() < 1e-12);
}

#[test]
fn exactness_rejects_malformed_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(dir.path(), &["exactness", "--set", "[[0.5]]"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn frozen_lift_does_not_move() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(dir.path(), &["diffusion", "--lift", "zero", "--ensemble", "100", "--nmax", "200"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("msd.csv")).unwrap();
    for row in reader.records() {
        let row = row.unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    }
    let report = json(&dir.path().join("diffusion.json"));
    assert!(report["identity_max_gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn density_and_returns_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = intmaps(dir.path(), &["density", "--grid", "2048"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("density.json"))["mass_increasing_as_epsilon_shrinks"], true);
    let out = intmaps(dir.path(), &["returns", "--ensemble", "2000", "--cap", "10000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("histogram.csv").exists());
}
