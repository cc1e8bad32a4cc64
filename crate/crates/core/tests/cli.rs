//! End-to-end runs of the `colmod` binary.

use std::path::Path;
use std::process::Command;

use colmod::cli::{Axis, RunConfig};
use colmod::energetics::steady_bwork;
use colmod::model::ModelParams;

fn colmod(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_colmod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

/// Header and numeric rows of a `#`-commented CSV file.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

/// Tag-balance check for the SVG subset the charts emit.
fn assert_well_formed_svg(text: &str) {
    assert!(text.starts_with("<?xml"));
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        let close = rest[open..].find('>').expect("unterminated tag") + open;
        let tag = &rest[open + 1..close];
        rest = &rest[close + 1..];
        if tag.starts_with('?') || tag.starts_with('!') || tag.ends_with('/') {
            continue;
        }
        let name: String = tag
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_alphanumeric())
            .collect();
        if tag.starts_with('/') {
            assert_eq!(stack.pop().as_deref(), Some(name.as_str()), "mismatched </{name}>");
        } else {
            stack.push(name);
        }
    }
    assert!(stack.is_empty(), "unclosed tags {stack:?}");
    assert!(!text.contains("NaN") && !text.contains("inf"));
}

#[test]
fn spontaneous_decay_empties_the_excited_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        params: ModelParams::scaled(0.0, 0.0, 0.0, 1e-3),
        n_steps: 8000,
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let conf = write_config(dir.path(), &cfg);
    let out = colmod(&["--config", &conf, "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let last = rows.last().unwrap();
    let gt: f64 = last[col("gamma_t")].parse().unwrap();
    let pe: f64 = last[col("p_e")].parse().unwrap();
    assert!((gt - 8.0).abs() < 1e-9);
    assert!(pe < 1e-3, "p_e = {pe}");
    assert!((pe - (-8.0f64).exp()).abs() < 1e-5);
    assert_well_formed_svg(&std::fs::read_to_string(dir.path().join("flows.svg")).unwrap());
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        n_steps: 1500,
        output_dir: "unused".into(),
        ..RunConfig::default()
    };
    let conf = write_config(a.path(), &cfg);
    for d in [&a, &b] {
        let out = colmod(&[
            "--config",
            &conf,
            "--out",
            d.path().to_str().unwrap(),
            "--no-svg",
            "simulate",
        ]);
        assert!(out.status.success());
    }
    let fa = std::fs::read(a.path().join("trajectory.csv")).unwrap();
    let fb = std::fs::read(b.path().join("trajectory.csv")).unwrap();
    assert!(fa == fb, "trajectory files differ");
    assert!(!a.path().join("flows.svg").exists());
}

#[test]
fn steady_table_matches_formula() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        params: ModelParams::resonant_at_saturation(3.0, 0.5, 1e-3),
        ..RunConfig::default()
    };
    let conf = write_config(dir.path(), &cfg);
    let out = colmod(&["--config", &conf, "--out", dir.path().to_str().unwrap(), "steady"]);
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("steady.csv"));
    assert_eq!(header, ["quantity", "value"]);
    let get = |k: &str| -> f64 { rows.iter().find(|r| r[0] == k).unwrap()[1].parse().unwrap() };
    assert!((get("bW_S") - steady_bwork(3.0, 0.5)).abs() < 1e-10);
    assert!((get("saturation") - 3.0).abs() < 1e-10);
}

#[test]
fn spectrum_and_detuning_sweep_write_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        params: ModelParams::scaled(2.0, 0.0, 0.0, 1e-3),
        ..RunConfig::default()
    };
    cfg.sweep_axis.axis = Axis::Detuning;
    cfg.sweep_axis.from = -3.0;
    cfg.sweep_axis.to = 3.0;
    cfg.sweep_axis.points = 13;
    let conf = write_config(dir.path(), &cfg);
    let d = dir.path().to_str().unwrap();
    assert!(colmod(&["--config", &conf, "--out", d, "spectrum"]).status.success());
    assert!(colmod(&["--config", &conf, "--out", d, "sweep"]).status.success());
    let (h, rows) = read_csv(&dir.path().join("spectrum.csv"));
    assert_eq!(h.len(), 4);
    assert!(rows
        .iter()
        .all(|r| r.iter().all(|v| v.parse::<f64>().unwrap().is_finite())));
    let (h, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(h[0], "detuning_over_gamma");
    assert_eq!(rows.len(), 13);
    for f in ["spectrum.svg", "sweep.svg"] {
        assert_well_formed_svg(&std::fs::read_to_string(dir.path().join(f)).unwrap());
    }
}

#[test]
fn printed_default_config_round_trips() {
    let out = colmod(&["config"]);
    assert!(out.status.success());
    let cfg = RunConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn bad_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.sweep_axis.points = 1;
    let conf = write_config(dir.path(), &cfg);
    assert_eq!(
        colmod(&["--config", &conf, "--out", dir.path().to_str().unwrap(), "sweep"])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        colmod(&["--config", missing.to_str().unwrap(), "steady"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_reports_and_flags_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let ok = colmod(&["--out", d, "verify", "--criteria", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    let bad = colmod(&["--out", d, "verify", "--criteria", "5", "--inject-output-sign-flip"]);
    assert_eq!(bad.status.code(), Some(1));
}
