//! The `rbs` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
runs = 2
geometry.bs.rows = 8
geometry.bs.cols = 8
geometry.mt.rows = 8
geometry.mt.cols = 8
geometry.mt.center = [0.0, 0.0, 0.15]
engine.max_iter = 400
sweep.z = { start = 0.1, stop = 0.2, step = 0.05 }
"#;

fn rbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbs")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn lists_experiments() {
    let out = rbs(&["list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sweep-z", "spatial-maps", "tdma", "fdma", "max-distance-vs-size"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
}

#[test]
fn validate_prints_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = rbs(&["validate", "--config", &cfg, "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert!(text.contains("seed = 9"));
    assert!(text.contains("spacing = "), "defaults not filled in:\n{text}");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "circuits.alpha_pd = 1.5\n");
    let out = rbs(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("circuits.alpha_pd"));

    let typo = write(dir.path(), "typo.toml", "engine.max_iters = 10\n");
    assert_eq!(rbs(&["validate", "--config", &typo]).status.code(), Some(2));

    let out = rbs(&["run", "no-such-experiment", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_output_replays_from_its_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let first = dir.path().join("first");
    let out = rbs(&["run", "sweep-z", "--config", &cfg, "--seed", "5", "--jobs", "1", "--out", &first.to_string_lossy()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(first.join("sweep-z.csv")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(first.join("sweep-z.json")).unwrap()).unwrap();
    let hash = summary["config_hash"].as_str().unwrap();
    assert!(csv.contains(&format!("# config_hash={hash}")));
    assert!(csv.contains("# seed=5"));

    let embedded = write(dir.path(), "embedded.toml", summary["config"].as_str().unwrap());
    let second = dir.path().join("second");
    let out = rbs(&["run", "sweep-z", "--config", &embedded, "--out", &second.to_string_lossy()]);
    assert!(out.status.success());
    assert_eq!(csv, fs::read_to_string(second.join("sweep-z.csv")).unwrap());
}
