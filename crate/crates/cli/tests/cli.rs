use std::path::Path;
use std::process::{Command, Output};

fn manin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manin")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn radius_of_constant_weights_is_one() {
    let out = manin(&["radius", "--weights", "constant:c=1", "--q", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["value"].as_f64(), Some(1.0));
    assert_eq!(v["config"]["weights"]["kind"], "constant");
}

#[test]
fn factorial_radius_is_infinite() {
    let v = json(&manin(&["radius"]));
    assert_eq!(v["result"]["value"], "infinity");
}

#[test]
fn coherent_outside_phase_space_exits_3() {
    let out = manin(&["coherent", "--weights", "constant:c=1", "--lambda", "1.2,0"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("norm series"), "{err}");
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(manin(&["radius", "--q", "0,0"]).status.code(), Some(2));
    assert_eq!(manin(&["radius", "--weights", "nope"]).status.code(), Some(2));
    assert_eq!(manin(&["radius", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(manin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn coarse_quadrature_exits_4() {
    let out = manin(&["symbols", "--cutoff", "10", "--order", "3"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verify_passes_on_defaults() {
    let out = manin(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"].as_array().unwrap().len(), 12);
}

#[test]
fn output_is_deterministic() {
    let a = manin(&["coherent", "--lambda", "0.7,-0.2", "--q", "0.3,0.9"]);
    let b = manin(&["coherent", "--lambda", "0.7,-0.2", "--q", "0.3,0.9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"weights": {"kind": "constant", "params": {"c": 1}}, "cutoff": 4}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = manin(&[
        "operator",
        "--config",
        cfg.to_str().unwrap(),
        "--cutoff",
        "6",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("operator.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["cutoff"], 6);
    assert_eq!(v["result"]["dim"], 7);
    let csv = std::fs::read_to_string(out_dir.join("operator.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn kernel_and_measure_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(manin(&["kernel", "--out", d]).status.code(), Some(0));
    assert_eq!(manin(&["measure", "--out", d]).status.code(), Some(0));
    let csv = std::fs::read_to_string(Path::new(d).join("kernel.csv")).unwrap();
    assert!(csv.starts_with("re_lambda,im_lambda,re_value,im_value"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(d).join("measure.json")).unwrap()).unwrap();
    assert!(m["result"]["gram"]["max_deviation"].as_f64().unwrap() < 1e-8);
    assert_eq!(m["result"]["quadrature"]["provenance"], "closed-form");
}

#[test]
fn paragrassmann_report() {
    let v = json(&manin(&["paragrassmann", "--l", "4"]));
    assert_eq!(v["result"]["nilpotency_index"], 4);
    assert_eq!(v["result"]["eigenvector_count"], 1);
}
