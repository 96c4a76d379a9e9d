//! End-to-end runs of the `optomech` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use optomech_cli::commands::read_table;
use optomech_cli::output::verify_manifest;
use tempfile::TempDir;

fn optomech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(args)
        .env_remove("OPTOMECH_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(args: &[&str]) {
    let out = optomech(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn column(dir: &Path, file: &str, name: &str) -> Vec<f64> {
    let t = read_table(&dir.join(file)).unwrap();
    let k = t.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("{file} has no column {name}"));
    t.rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn modes_emit_profiles_and_verified_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("modes");
    let cfg = write_config(&dir, r#"{"params": {"n": 6}}"#);
    run_ok(&["modes", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);

    let t = read_table(&out.join("modes.csv")).unwrap();
    assert_eq!(t.header, ["l", "j", "epsilon"]);
    assert_eq!(t.rows.len(), 30);
    let eps = |l: usize| -> Vec<f64> {
        t.rows.iter().filter(|r| r[0] == l.to_string()).map(|r| r[2].parse().unwrap()).collect()
    };
    assert_eq!(eps(2), eps(4));
    assert_eq!(eps(1), eps(5));
    for l in 1..6 {
        assert!((eps(l).iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out.join(format!("coupling_matrix_{l}.csv")).exists());
    }
    assert!(verify_manifest(&out).unwrap().is_empty());

    std::fs::write(out.join("modes.csv"), "tampered\n").unwrap();
    assert_eq!(verify_manifest(&out).unwrap(), ["modes.csv"]);
}

#[test]
fn walk_distributions_are_normalized_and_clean_walk_follows_profile() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("walk");
    let cfg = write_config(&dir, r#"{"walk": {"realizations": 500}}"#);
    run_ok(&["walk", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]);
    for name in ["none", "phase", "transmissivity", "classical"] {
        let p = column(&out, "walk.csv", name);
        assert_eq!(p.len(), 20);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6, "{name}");
    }
    let none = column(&out, "walk.csv", "none");
    let profile = column(&out, "walk.csv", "epsilon_sq");
    let off = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().filter(|&(j, _)| j != 5).map(|(_, &x)| x).collect() };
    assert!(pearson(&off(&none), &off(&profile)) > 0.999);
    assert!(verify_manifest(&out).unwrap().is_empty());
}

#[test]
fn heat_without_excess_stays_at_bath_occupation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("heat");
    let cfg = write_config(&dir, r#"{"heat": {"dn": 0.0, "models": ["optical"], "samples": 60}}"#);
    run_ok(&["heat", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let t = column(&out, "heat_optical.csv", "t");
    assert_eq!(t.len(), 60 * 20);
    assert!(t.windows(2).all(|w| w[1] >= w[0]));
    let occ = column(&out, "heat_optical.csv", "occupation");
    assert!(occ.iter().all(|n| (n - 10.0).abs() / 10.0 < 0.05));
    assert!(!out.join("heat_nearest_neighbor.csv").exists());
}

#[test]
fn default_shuttle_transfers_with_valid_switches() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("shuttle");
    run_ok(&["shuttle", "--out", out.to_str().unwrap()]);
    let b4 = column(&out, "trajectory.csv", "b4");
    assert!(*b4.last().unwrap() > 0.99);
    assert!(column(&out, "switches.csv", "valid").iter().all(|v| *v == 1.0));
    let dev = column(&out, "dissipative.csv", "deviation");
    assert!(dev.iter().copied().fold(0.0, f64::max) < 0.05);
}

#[test]
fn fast_validation_passes() {
    let out = optomech(&["validate", "--level", "fast"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.lines().filter(|l| l.starts_with("PASS")).count() > 10);
    assert!(!report.contains("FAIL"));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never");
    for text in [
        r#"{"walk": {"realizatons": 10}}"#,
        r#"{"walk": {"source": 25}}"#,
        r#"{"params": {"kappa": -1.0}}"#,
        r#"{"heat": {"dn": 5.0}}"#,
        r#"{"experiment": "heat"}"#,
        "not json",
    ] {
        let cfg = write_config(&dir, text);
        let res = optomech(&["walk", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "{text}");
        assert!(!out.exists(), "{text} started writing output");
    }
    let res = optomech(&["walk", "--threads", "0"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_code_four() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let res = optomech(&["modes", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn thread_cap_from_environment_is_recorded() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("modes");
    let res = Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(["modes", "--threads", "8", "--out", out.to_str().unwrap()])
        .env("OPTOMECH_THREADS", "2")
        .output()
        .unwrap();
    assert!(res.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
    assert!(manifest["overrides"].as_array().unwrap().iter().any(|o| o.as_str().unwrap().contains("OPTOMECH_THREADS")));
}
