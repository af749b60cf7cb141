//! End-to-end runs of the `blowup-lab` binary: exit codes, artifact schemas,
//! and byte-level determinism of repeated runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blowup-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("blowup-lab-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    fs::create_dir_all(dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bounds_mode_emits_lemma_report() {
    let out = tmp_dir("bounds");
    let res = run(&["bounds", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("bounds.json")).unwrap();
    let entries: serde_json::Value = serde_json::from_str(&text).unwrap();
    let first = &entries[0];
    assert_eq!(first["lemma"], "affine_min_unit");
    assert_eq!(first["claimed"], 0.0625);
    assert_eq!(first["pass"], true);
    assert!(out.join("meta.json").exists());
}

#[test]
fn empty_config_is_a_config_error() {
    let out = tmp_dir("emptycfg");
    let cfg = write_cfg(&out, "empty.json", "");
    let res = run(&["sequence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&res.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn unknown_mode_and_mode_mismatch_are_config_errors() {
    let res = run(&["transmogrify"]);
    assert_eq!(res.status.code(), Some(2));

    let out = tmp_dir("mismatch");
    let cfg = write_cfg(&out, "cfg.json", r#"{"mode": "bounds"}"#);
    let res = run(&["discrete", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn failing_sequence_assertion_exits_one() {
    let out = tmp_dir("seqfail");
    // Two adjacent indices cannot satisfy the thousandfold decay demand.
    let cfg = write_cfg(
        &out,
        "cfg.json",
        r#"{"sequence": {"family": "relu_indicator", "n_list": [1, 2]}}"#,
    );
    let res = run(&["sequence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&res.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "assertion_failure");
}

#[test]
fn sequence_mode_emits_csv_with_bounds() {
    let out = tmp_dir("seq");
    let cfg = write_cfg(
        &out,
        "cfg.json",
        r#"{"sequence": {"family": "relu_indicator", "n_list": [1, 10, 100, 1000, 10000]}}"#,
    );
    let res = run(&["sequence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("sequence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "family,n,risk,bound,pass");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1], "1");
    assert_eq!(first[2], "0.041666666666666664");
    assert_eq!(first[3], "0.125");
}

#[test]
fn discrete_mode_reports_case_and_floor() {
    let out = tmp_dir("discrete");
    let cfg = write_cfg(
        &out,
        "cfg.json",
        r#"{"discrete": {"xs": [0.0, 1.0, 2.0], "ys": [0.0, 1.0, 3.0], "n": 50, "fit_tol": 1e-6}}"#,
    );
    let res = run(&["discrete", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("discrete.json")).unwrap()).unwrap();
    assert_eq!(report["case"], "interior_three");
    assert!(report["risk"].as_f64().unwrap() <= 1e-12);
    assert!(report["floor"].is_null());
}

#[test]
fn discrete_mode_reads_csv_files() {
    let out = tmp_dir("discrete-csv");
    fs::create_dir_all(&out).unwrap();
    let data_path = out.join("data.csv");
    fs::write(&data_path, "x,y\n0,1\n1,0\n2,3\n").unwrap();
    let cfg = write_cfg(
        &out,
        "cfg.json",
        &format!(r#"{{"discrete": {{"data_file": "{}", "n": 200}}}}"#, data_path.display()),
    );
    let res = run(&["discrete", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("discrete.json")).unwrap()).unwrap();
    assert_eq!(report["case"]["monotone_three"]["j"], 3);
    assert!((report["floor"].as_f64().unwrap() - 1.0 / 6.0).abs() <= 1e-15);
}

#[test]
fn simulate_gf_artifacts_are_deterministic() {
    let cfg_body = r#"{
        "kind": "relu",
        "target": "indicator",
        "init": {"random": {"scale": 1.0}},
        "flow": {"t_end": 0.5, "record_stride": 4},
        "seed": 7,
        "include_theta": true
    }"#;
    let mut artifacts = Vec::new();
    for tag in ["det-a", "det-b"] {
        let out = tmp_dir(tag);
        let cfg = write_cfg(&out, "cfg.json", cfg_body);
        let res = run(&["simulate-gf", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let csv = fs::read(out.join("trajectory.csv")).unwrap();
        let verdict = fs::read(out.join("verdict.json")).unwrap();
        artifacts.push((csv, verdict));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "trajectory bytes differ");
    assert_eq!(artifacts[0].1, artifacts[1].1, "verdict bytes differ");
}

#[test]
fn simulate_gd_runs_with_constant_steps() {
    let out = tmp_dir("gd");
    let cfg = write_cfg(
        &out,
        "cfg.json",
        r#"{
            "kind": "softplus",
            "target": "square",
            "init": {"random": {"scale": 0.5}},
            "gd": {"schedule": {"constant": 0.05}, "n_steps": 50},
            "flow": {"t_end": 1.0, "record_stride": 10},
            "seed": 3
        }"#,
    );
    let res = run(&["simulate-gd", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
    assert!(csv.starts_with("t,risk,grad_norm,param_norm\n"));
}

#[test]
fn critical_mode_writes_point_table() {
    let out = tmp_dir("critical");
    let cfg = write_cfg(&out, "cfg.json", r#"{"critical": {"h": 1, "n_seeds": 30}}"#);
    let res = run(&["critical", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("critical_points.csv")).unwrap();
    assert!(csv.starts_with("seed,risk,grad_norm,theta_0"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("critical.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["pass"], true);
    assert!(report["report"]["min_risk"].as_f64().unwrap() >= 1.0 / 36.0 - 1e-6);
}
