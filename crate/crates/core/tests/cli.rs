use std::path::Path;
use std::process::{Command, Output};

use equiflex::grid::{builtin_ieee33, ieee33_subcase, to_json};

fn equiflex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equiflex")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn records(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> usize {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn stage1_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = equiflex(&["run-stage1", "--out", out, "--serial"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["dispatch.csv", "dlmp.csv", "actor_prices.csv", "scenario.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn inverted_voltage_band_exits_2_naming_the_bus() {
    let dir = tempfile::tempdir().unwrap();
    let mut case: serde_json::Value = serde_json::from_str(&to_json(&builtin_ieee33())).unwrap();
    let bus = case["buses"].as_array_mut().unwrap().iter_mut().find(|b| b["id"] == 5).unwrap();
    bus["v_min"] = serde_json::json!(1.05);
    bus["v_max"] = serde_json::json!(0.9);
    let path = dir.path().join("case.json");
    std::fs::write(&path, case.to_string()).unwrap();
    let o = equiflex(&["run-stage1", "--case", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bus 5"), "{}", stderr(&o));
}

#[test]
fn stage2_without_stage1_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = equiflex(&["run-stage2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("run the earlier stage"), "{}", stderr(&o));
}

#[test]
fn unknown_builtin_and_negative_weight_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(equiflex(&["run-stage1", "--case", "builtin:ieee123", "--out", out]).status.code(), Some(2));
    assert_eq!(equiflex(&["run-stage1", "--w=-1", "--out", out]).status.code(), Some(2));
    assert_eq!(equiflex(&["run-stage1", "--mode", "median", "--out", out]).status.code(), Some(2));
}

#[test]
fn zero_disturbance_gives_zero_curtailment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(equiflex(&["run-stage1", "--disturbance", "none", "--out", out, "--serial"]).status.code(), Some(0));
    let o = equiflex(&["run-stage2", "--out", out, "--serial"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = dir.path().join("curtailment.csv");
    let c = column(&path, "curtailment_kw");
    let rows = records(&path);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[c].parse::<f64>().unwrap() == 0.0));
}

fn total_curtailment(dir: &Path) -> Vec<(String, f64, f64)> {
    let path = dir.join("fairness.csv");
    let (w, total, spread) = (column(&path, "w"), column(&path, "total_curtailment_kw"), column(&path, "spread"));
    records(&path)
        .iter()
        .map(|r| (r[w].to_string(), r[total].parse().unwrap(), r[spread].parse().unwrap()))
        .collect()
}

#[test]
fn stage2_sweep_and_no_flex_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(equiflex(&["run-stage1", "--out", out, "--serial"]).status.code(), Some(0));

    assert_eq!(equiflex(&["run-stage2", "--out", out, "--w", "0,1", "--serial"]).status.code(), Some(0));
    let sweep = total_curtailment(dir.path());
    let at = |w: &str| sweep.iter().find(|r| r.0 == w).unwrap().clone();
    assert!(at("1").2 <= at("0").2);
    let with_flex = at("1").1;

    assert_eq!(equiflex(&["run-stage2", "--out", out, "--w", "1", "--no-flex", "--serial"]).status.code(), Some(0));
    let base = total_curtailment(dir.path());
    assert_eq!(base.len(), 1);
    assert!(base[0].1 >= with_flex);
}

#[test]
fn pipeline_report_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = equiflex(&["run-pipeline", "--out", out, "--serial"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for label in ["equity", "min-total", "no-flex"] {
        assert!(stdout(&o).contains(label), "{label} missing from summary");
    }
    let r = equiflex(&["report", "--out", out]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(stdout(&r), stdout(&o));
    assert!(stdout(&r).contains("DLMP range") && stdout(&r).contains('%'));
    std::fs::remove_file(dir.path().join("plot_prices.csv")).unwrap();
    assert_eq!(equiflex(&["plotdata", "--out", out]).status.code(), Some(0));
    assert!(dir.path().join("plot_prices.csv").exists());
    assert!(dir.path().join("plot_curtailment.csv").exists());
}

#[test]
fn scenario_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(equiflex(&["run-pipeline", "--seed", "2", "--out", a.to_str().unwrap(), "--serial"]).status.code(), Some(0));
    let scen = a.join("scenario.json");
    let o = equiflex(&["run-pipeline", "--scenario", scen.to_str().unwrap(), "--out", b.to_str().unwrap(), "--serial"]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["dispatch.csv", "dlmp.csv", "actor_prices.csv", "flex.csv", "curtailment.csv", "fairness.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("w = [0.5, 2.0]\nserial = true\nout = {:?}\n", out.to_str().unwrap())).unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(equiflex(&["run-stage1", "--config", c]).status.code(), Some(0));
    assert_eq!(equiflex(&["run-stage2", "--config", c]).status.code(), Some(0));
    let ws: Vec<String> = total_curtailment(&out).into_iter().map(|r| r.0).collect();
    assert_eq!(ws, ["0.5", "2"]);
    assert_eq!(equiflex(&["run-stage2", "--config", c, "--w", "0"]).status.code(), Some(0));
    let ws: Vec<String> = total_curtailment(&out).into_iter().map(|r| r.0).collect();
    assert_eq!(ws, ["0"]);
}

#[test]
fn validate_duals_on_a_small_feeder() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trunk.json");
    std::fs::write(&path, to_json(&ieee33_subcase(5))).unwrap();
    let portfolio = dir.path().join("empty.json");
    std::fs::write(&portfolio, "{}").unwrap();
    let o = equiflex(&[
        "validate-duals",
        "--case",
        path.to_str().unwrap(),
        "--portfolio",
        portfolio.to_str().unwrap(),
        "--disturbance",
        "none",
        "--intervals",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("max relative dual error"));
}
