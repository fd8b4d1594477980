use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ugsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ugsos")).args(args).output().expect("binary runs")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn summary(out: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap()
}

#[test]
fn gen_hypercube_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let out = ugsos(&["gen", "--family", "hypercube", "--d", "3", "--alpha", "0.3", "--k", "3", "--eps", "0.05", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let inst = json_file(&path);
    assert_eq!(inst["n"], 8);
    assert_eq!(inst["k"], 3);
    assert!(summary(&out)["planted_value"].as_f64().unwrap() >= 0.8);
}

#[test]
fn gen_noiseless_johnson_is_satisfied() {
    let out = ugsos(&["gen", "--family", "johnson", "--n", "6", "--l", "2", "--alpha", "0.5", "--k", "3", "--eps", "0"]);
    assert!(out.status.success());
    assert_eq!(summary(&out)["planted_value"].as_f64().unwrap(), 1.0);
}

#[test]
fn gen_cayley_graph_is_stochastic() {
    let out = ugsos(&["gen", "--family", "cayley", "--n", "4", "--l", "2", "--alpha", "0.5"]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["vertices"], 16);
    assert!(s["row_sum_error"].as_f64().unwrap() < 1e-12);
    let g: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!g["edges"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let bad = ugsos(&["gen", "--family", "johnson", "--n", "6", "--l", "2", "--alpha", "0.3", "--k", "3"]);
    assert_eq!(bad.status.code(), Some(3));
    let missing = ugsos(&["gen", "--family", "johnson", "--l", "2", "--alpha", "0.5", "--k", "3"]);
    assert_eq!(missing.status.code(), Some(3));
    let big = ugsos(&["gen", "--family", "hypercube", "--d", "20", "--k", "2"]);
    assert_eq!(big.status.code(), Some(4));
    let unknown = ugsos(&["verify", "--only", "no-such-check"]);
    assert_eq!(unknown.status.code(), Some(3));
}

#[test]
fn solve_round_noiseless_hypercube() {
    let out = ugsos(&["solve-round", "--family", "hypercube", "--d", "2", "--alpha", "0.25", "--k", "2", "--eps", "0", "--degree", "2"]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["rounded_value"].as_f64().unwrap(), 1.0);
}

#[test]
fn solve_round_frustrated_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("tri.json");
    std::fs::write(
        &inst,
        r#"{"k":2,"n":3,"edges":[{"u":0,"v":1,"w":1,"shift":0},{"u":1,"v":2,"w":1,"shift":0},{"u":0,"v":2,"w":1,"shift":1}]}"#,
    )
    .unwrap();
    let out = ugsos(&["solve-round", "--family", "file", "--input", inst.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let sdp = r["sdp_value"].as_f64().unwrap();
    assert!(sdp < 1.0 && sdp >= 2.0 / 3.0 - 1e-5);
    assert!((r["rounded_value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn solve_round_planted_hypercube_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let args = ["solve-round", "--family", "hypercube", "--d", "3", "--alpha", "0.3", "--k", "3", "--eps", "0.05", "--seed", "2", "--out", p.to_str().unwrap()];
        assert!(ugsos(&args).status.success());
        let mut v = json_file(&p);
        v.as_object_mut().unwrap().remove("seconds");
        v
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let floor = 0.05 * 0.6f64.powi(4) / 576.0;
    assert!(a["rounded_value"].as_f64().unwrap() >= floor);
    assert!(a["potentials"]["report"]["phi"].as_f64().is_some());
}

#[test]
fn verify_only_step_poly() {
    let out = ugsos(&["verify", "--only", "step-poly"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS [6] step-poly"));
}

#[test]
fn verify_rejects_corrupted_operator() {
    let dir = tempfile::tempdir().unwrap();
    let pe = dir.path().join("pe.json");
    let args = ["solve-round", "--family", "hypercube", "--d", "2", "--alpha", "0.25", "--k", "2", "--eps", "0.1", "--pe-out", pe.to_str().unwrap()];
    assert!(ugsos(&args).status.success());
    assert!(ugsos(&["verify", "--pe", pe.to_str().unwrap()]).status.success());

    let mut dump = json_file(&pe);
    for entry in dump["moments"].as_array_mut().unwrap() {
        if entry[0] == serde_json::json!([[0, 0, 0], [1, 0, 0]]) {
            entry[1] = serde_json::json!(0.95);
        }
    }
    std::fs::write(&pe, dump.to_string()).unwrap();
    let out = ugsos(&["verify", "--pe", pe.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rep["min_eigenvalue"].as_f64().unwrap() < -1e-5);
}
