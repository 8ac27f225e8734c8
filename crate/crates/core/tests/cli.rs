use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perihelia"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn has_contract_fields(v: &Value) {
    assert!(v.get("tolerance").is_some(), "{v}");
    assert!(v["claim"].as_str().is_some_and(|s| !s.is_empty()), "{v}");
}

#[test]
fn roundtrip_report_and_exit_codes() {
    let out = run(&["roundtrip", "--chart", "p", "--n", "3", "--samples", "1000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    has_contract_fields(&v);
    assert!(v["max_defect"].as_f64().unwrap() <= 1e-9);
    assert_eq!(run(&["roundtrip", "--chart", "deprit"]).status.code(), Some(1));
    assert_eq!(run(&["roundtrip", "--chart", "p", "--samples", "0"]).status.code(), Some(1));
    let breach = run(&["roundtrip", "--chart", "p", "--samples", "5", "--tolerance", "1e-30"]);
    assert_eq!(breach.status.code(), Some(2));
}

#[test]
fn roundtrip_with_mass_file() {
    let m = config("masses3.json");
    let out = run(&["roundtrip", "--chart", "delaunay", "--samples", "20", "--masses", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["n"], 3);
}

#[test]
fn deterministic_output() {
    let args = ["symplectic", "--chart", "p", "--n", "2", "--samples", "5", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn symplectic_reports() {
    let p = run(&["symplectic", "--chart", "p", "--n", "2", "--samples", "50"]);
    assert_eq!(p.status.code(), Some(0));
    let v = report(&p);
    has_contract_fields(&v);
    assert!(v["max_defect"].as_f64().unwrap() <= 1e-6);
    let d = run(&["symplectic", "--chart", "delaunay", "--n", "1", "--samples", "20"]);
    assert_eq!(d.status.code(), Some(0));
    assert!(report(&d)["max_defect"].as_f64().unwrap() <= 1e-8);
    assert_eq!(run(&["symplectic", "--chart", "nope"]).status.code(), Some(1));
}

#[test]
fn average_reports() {
    let cfg = config("three_planets.json");
    let out = run(&["average", "--config", cfg.to_str().unwrap(), "--pair", "n-1,n", "--grid", "512"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    has_contract_fields(&v);
    assert!(v["order2"]["relative_error"].as_f64().unwrap() <= 1e-8);
    assert!(v["order1"]["scaled"].as_f64().unwrap() <= 1e-10);
    let crossing = config("crossing.json");
    let out = run(&["average", "--config", crossing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cross"));
    assert_eq!(run(&["average", "--config", "/nonexistent.json"]).status.code(), Some(1));
}

#[test]
fn secular_reports() {
    let pt = config("secular_point.json");
    let out = run(&["secular", "--point-file", pt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    has_contract_fields(&v);
    assert!(v["relative_deltas"]["tau"].as_f64().unwrap() <= 1e-5);
    assert!(v["coefficients"]["beta"].as_f64().unwrap() > 0.0);
}

#[test]
fn integrate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let cfg = config("two_planets.json");
    let out = run(&[
        "integrate",
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "10000",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = report(&out);
    has_contract_fields(&v);
    assert!(v["summary"]["energy_drift"].as_f64().unwrap() <= 1e-7);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# perihelia-trajectory v1\nt,energy,Z,G,Sx,Sy,Sz,"));
    assert_eq!(text.lines().count(), 2 + 10_001);
}

#[test]
fn integrate_collision_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plunge.json");
    std::fs::write(
        &cfg,
        r#"{"m0": 1.0, "mu": 0.01, "masses": [1.0],
            "orbits": [{"a": 1.0, "e": 0.9, "inclination": 0.0, "node": 0.0, "arg_perihelion": 0.0, "mean_anomaly": 3.0}]}"#,
    )
    .unwrap();
    let out = run(&["integrate", "--config", cfg.to_str().unwrap(), "--steps", "2000", "--collision-radius", "0.5"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(report(&out)["abort"].as_str().unwrap().contains("ollision"));
}

#[test]
fn diophantine_reports() {
    let out = run(&["diophantine", "--omega", "1,1.4142", "--gamma", "0.1", "--tau", "2", "--K", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    has_contract_fields(&v);
    for key in ["omega", "blocks", "gammas", "tau", "K", "pass", "worst_k", "margin"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let fail = run(&["diophantine", "--omega", "1,1", "--gamma", "0.1", "--tau", "2", "--K", "3"]);
    assert_eq!(fail.status.code(), Some(2));
    let neg = run(&["diophantine", "--omega", "-1,0.5", "--gamma", "0.01", "--tau", "1", "--K", "2"]);
    assert!(neg.status.code().is_some_and(|c| c == 0 || c == 2));
    let cap = run(&["diophantine", "--omega", "1,2,3,4,5,6,7,8", "--gamma", "0.1", "--tau", "2", "--K", "20"]);
    assert_eq!(cap.status.code(), Some(1));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run(&["diophantine", "--omega", "1,1.4142", "--gamma", "0.1", "--tau", "2", "--K", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["command"], "diophantine");
}
