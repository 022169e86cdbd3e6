//! End-to-end runs of the command-line tool.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corrlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn make(args: &[&str], name: &str) -> PathBuf {
    let path = scratch(name);
    let mut full = vec!["make"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let o = run(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn validates_a_generated_simplex() {
    let p = make(&["simplex", "--dim", "3", "--gauged"], "s3.json");
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["kind"], "ncorr_simplex");
    assert_eq!(v["passed"], true);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn corrupted_unitary_is_a_pentagon_violation() {
    let p = make(&["simplex", "--dim", "3", "--corrupt"], "bad.json");
    let o = run(&["validate", "--simplex", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("PentagonViolated"), "{stderr}");
    assert!(stderr.contains("(0, 1, 2, 3)"), "{stderr}");
}

#[test]
fn empty_and_malformed_files_are_parse_errors() {
    let empty = scratch("empty.json");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["validate", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));

    let odd = scratch("odd.json");
    std::fs::write(&odd, r#"{"blocks": [2, 0]}"#).unwrap();
    assert_ne!(run(&["validate", odd.to_str().unwrap()]).status.code(), Some(0));

    let unknown = scratch("unknown.json");
    std::fs::write(&unknown, r#"{"colour": 3}"#).unwrap();
    assert_eq!(run(&["validate", unknown.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let p = make(&["simplex", "--dim", "2"], "s2u.json");
    let o = run(&["extend", "--simplex", p.to_str().unwrap(), "--functor", "gamma", "--target", "k0nerve"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["--eps", "-1", "selftest", "--suite", "4"]).status.code(), Some(2));
}

#[test]
fn gamma_and_morita_produce_documents() {
    let h = make(&["hom"], "h.json");
    let o = run(&["gamma", "--hom", h.to_str().unwrap()]);
    assert!(o.status.success());
    let g = json(&o);
    assert!(g.get("left_action").is_some());

    let m = make(&["module"], "m.json");
    let o = run(&["morita", "--module", m.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&o);
    for key in ["gamma_corner", "inverse", "gamma_then_inverse", "inverse_then_gamma"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn fills_inner_and_special_outer_horns() {
    for (k, name) in [("1", "h31.json"), ("2", "h32.json"), ("3", "h33.json")] {
        let h = make(&["horn", "--dim", "3", "--k", k, "--gauged"], name);
        let o = run(&["fill", "--horn", h.to_str().unwrap()]);
        assert!(o.status.success(), "k = {k}: {}", String::from_utf8_lossy(&o.stderr));
        let out = scratch(&format!("filled_{name}"));
        std::fs::write(&out, &o.stdout).unwrap();
        assert_eq!(run(&["validate", out.to_str().unwrap()]).status.code(), Some(0));
    }
    let h = make(&["horn", "--dim", "3", "--k", "0"], "h30.json");
    assert_eq!(run(&["fill", "--horn", h.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn subdivide_reports_functoriality() {
    let p = make(&["simplex", "--dim", "2", "--gauged"], "s2s.json");
    let o = run(&["subdivide", "--simplex", p.to_str().unwrap(), "--n", "2"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!(v["functoriality"]["max_residual"].as_f64().unwrap() < 1e-9);
    let o = run(&["subdivide", "--simplex", p.to_str().unwrap(), "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extend_writes_a_trace() {
    let p = make(&["simplex", "--dim", "2", "--gauged"], "s2e.json");
    let trace = scratch("trace.json");
    let o = run(&[
        "extend",
        "--simplex",
        p.to_str().unwrap(),
        "--functor",
        "k0",
        "--target",
        "k0nerve",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(!t.as_array().unwrap().is_empty());

    let o = run(&["extend", "--simplex", p.to_str().unwrap(), "--functor", "gamma", "--target", "ncorr", "--guided"]);
    assert!(o.status.success());
    assert!(json(&o)["distance_to_input"].as_f64().unwrap() < 1e-9);
}

#[test]
fn selftest_reports_json_and_roundoff() {
    let o = run(&["selftest", "--quick", "--suite", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["seed"], 42);
    let case = &v["cases"][0];
    for key in ["suite", "case", "residual", "time_ms"] {
        assert!(case.get(key).is_some(), "missing {key}");
    }
    let o = run(&["--eps", "1e-15", "selftest", "--suite", "1"]);
    assert_eq!(o.status.code(), Some(1));
}
