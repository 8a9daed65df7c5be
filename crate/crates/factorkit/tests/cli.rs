use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TRIANGLE: &str = "p sssp 3 3\nt 2\ne 0 1 1 -2\ne 0 2 1 1\ne 1 2 1 1\n";
const PATH: &str = "p ffactor 3 2\nv 0 1\nv 1 1\nv 2 1\ne 0 1 1 4\ne 1 2 1 5\n";
const SQUARE: &str = "p ffactor 4 4\nv 0 1\nv 1 1\nv 2 1\nv 3 1\ne 0 1 2 3 1\ne 1 2 1 2\ne 2 3 1 4\ne 3 0 1 -1\n";
const DIAMOND: &str = "p mincost 4 5\ns 0\nt 3\nn 1 2\nn 2 2\na 0 1 2 1\na 0 2 1 3\na 1 2 1 0\na 1 3 1 2\na 2 3 2 1\n";

fn dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("factorkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write(name: &str, text: &str) -> PathBuf {
    let p = dir().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn factorkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factorkit")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn verify(instance: &Path, command: &str) {
    let out = factorkit(&["--json", command, instance.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{command}: {}", String::from_utf8_lossy(&out.stderr));
    let env = write(&format!("{command}.json"), std::str::from_utf8(&out.stdout).unwrap());
    let v = factorkit(&["--json", "verify", instance.to_str().unwrap(), env.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "verify {command}: {}", String::from_utf8_lossy(&v.stdout));
    assert!(json(&v)["verdicts"].as_array().unwrap().iter().all(|x| x["pass"] == true));
}

#[test]
fn triangle_distances_through_the_negative_edge() {
    let p = write("triangle.txt", TRIANGLE);
    let out = factorkit(&["--json", "sssp", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["distances"], serde_json::json!([-1, -1, 0]));
}

#[test]
fn path_with_unit_degrees_is_infeasible() {
    let p = write("path.txt", PATH);
    let out = factorkit(&["--json", "ffactor", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "infeasible");
}

#[test]
fn emitted_envelopes_verify() {
    let square = write("square.txt", SQUARE);
    for c in ["ffactor", "ffactor-max", "bmatch"] {
        verify(&square, c);
    }
    verify(&write("tri.txt", TRIANGLE), "sssp");
    let diamond = write("diamond.txt", DIAMOND);
    verify(&diamond, "maxflow");
    verify(&diamond, "mincost");
}

#[test]
fn tampered_envelope_is_rejected() {
    let square = write("square2.txt", SQUARE);
    let out = factorkit(&["--json", "ffactor-max", square.to_str().unwrap()]);
    let mut env = json(&out);
    env["weight"] = serde_json::json!(env["weight"].as_i64().unwrap() + 1);
    let e = write("tampered.json", &env.to_string());
    let v = factorkit(&["verify", square.to_str().unwrap(), e.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn oracle_agrees_with_solver() {
    let square = write("square3.txt", SQUARE);
    let a = json(&factorkit(&["--json", "ffactor-max", square.to_str().unwrap()]));
    let b = json(&factorkit(&["--json", "oracle", square.to_str().unwrap()]));
    assert_eq!(a["weight"], b["weight"]);
}

#[test]
fn malformed_input_exits_with_input_error() {
    let p = write("bad.txt", "p ffactor 2 1\ne 0 5 1 1\n");
    let out = factorkit(&["ffactor", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(factorkit(&["ffactor", "/nonexistent/instance"]).status.code(), Some(3));
}
