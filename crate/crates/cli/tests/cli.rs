use std::process::{Command, Output};

use serde_json::Value;

fn bdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdlab")).args(args).output().expect("bdlab runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn level_one_has_k_elements() {
    for (cfg, k) in [("desk-strict", 2), ("desk-relaxed", 3)] {
        let dir = tempdir();
        let dump = dir.join("u.dump");
        let out = bdlab(&["--config", cfg, "--horizon", "1", "--out", dump.to_str().unwrap(), "enumerate"]);
        assert!(out.status.success());
        assert_eq!(json(&out)["elements"], k);
        assert_eq!(std::fs::read_to_string(&dump).unwrap().lines().filter(|l| !l.starts_with('#')).count(), k);
    }
}

#[test]
fn suite_filter_keeps_only_the_named_suite() {
    let out = bdlab(&["--config", "desk-strict", "verify", "--suites", "shift"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["suite"], "shift");
    assert_eq!(suites[0]["status"], "PASS");
}

#[test]
fn estimate_warnings_do_not_change_the_exit_status() {
    let out = bdlab(&["--config", "desk-relaxed", "verify", "--suites", "estimates"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["suites"][0]["status"], "WARN");
}

#[test]
fn usage_errors_exit_with_two() {
    let out = bdlab(&["--config", "/nonexistent.toml", "enumerate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("bdlab: "));
    assert_eq!(bdlab(&["report"]).status.code(), Some(2));
}

#[test]
fn exhausted_supplier_names_the_clause() {
    let out = bdlab(&["--config", "desk-strict", "depseq"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds the horizon"));
}

#[test]
fn shifted_pair_certificate_is_json() {
    let out = bdlab(&["pair", "--strategy", "shifted"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["params"]["strategy"], "shifted");
    assert_ne!(v["status"], "FAIL");
}

fn tempdir() -> std::path::PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static N: AtomicUsize = AtomicUsize::new(0);
    let d =
        std::env::temp_dir().join(format!("bdlab-cli-{}-{}", std::process::id(), N.fetch_add(1, Ordering::Relaxed)));
    std::fs::create_dir_all(&d).unwrap();
    d
}
