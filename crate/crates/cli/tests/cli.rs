use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mimb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimb")).args(args).output().expect("spawn mimb")
}

fn ok_json(args: &[&str]) -> Value {
    let out = mimb(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn names(v: &Value) -> Vec<&str> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect()
}

fn alarm() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/alarm.net").display().to_string()
}

#[test]
fn trace_fixture_with_oracle_tests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(mimb(&["fixture", "--name", "trace", "--samples", "200", "--out", out]).status.success());
    let manifest = dir.path().join("manifest.json");
    let m = manifest.to_str().unwrap();
    let r = ok_json(&["discover", "--manifest", m, "--oracle"]);
    assert_eq!(names(&r["mimb_mb"]), ["A", "B", "C", "G"]);
    assert_eq!(names(&r["mimb_pa"]), ["A", "B"]);
    assert_eq!(r["score"]["mb"]["f1"], 1.0);
    let total: u64 = r["tests_per_dataset"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum();
    assert_eq!(r["n_tests"].as_u64().unwrap(), total);

    let b = ok_json(&["discover", "--manifest", m, "--oracle", "--algo", "baseline"]);
    assert!(b.get("base_mb").is_some() && b.get("mimb_mb").is_none());
}

#[test]
fn generate_then_discover_is_deterministic() {
    let net = alarm();
    let runs: Vec<(Value, Vec<u8>)> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path().to_str().unwrap();
            let g = mimb(&[
                "generate", "--network", &net, "--target", "VTUB", "--n-datasets", "3", "--samples", "500",
                "--regime", "zeta0", "--conservative", "--seed", "9", "--out", out,
            ]);
            assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
            let csv = fs::read(dir.path().join("d1.csv")).unwrap();
            let m = dir.path().join("manifest.json");
            (ok_json(&["discover", "--manifest", m.to_str().unwrap()]), csv)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let r = &runs[0].0;
    assert_eq!(r["target"], "VTUB");
    assert_eq!(names(&r["truth"]["mb"]), ["DISC", "INT", "KINK", "PRSS", "VLNG", "VMCH"]);
    assert_eq!(r["tests_per_dataset"].as_array().unwrap().len(), 3);
}

#[test]
fn split_writes_two_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let mut text = String::from("d,x,y\n");
    for i in 0..40 {
        text += &format!("{},{},{}\n", i as f64 / 2.0, i % 7, i % 2);
    }
    fs::write(&csv, text).unwrap();
    let out = dir.path().join("out");
    let status = mimb(&[
        "split", "--data", csv.to_str().unwrap(), "--by", "d", "--threshold", "5",
        "--discretize", "d:2", "--discretize", "x:3", "--target", "y", "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let rows = |f: &str| fs::read_to_string(out.join(f)).unwrap().lines().count() - 1;
    assert_eq!((rows("d0.csv"), rows("d1.csv")), (10, 30));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["target"], "y");
    assert!(manifest["datasets"][0].get("manipulated").is_none());
}

#[test]
fn exit_codes_follow_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = mimb(&["discover", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = mimb(&["generate", "--network", &alarm(), "--target", "NOPE", "--out", out]);
    assert_eq!(unknown.status.code(), Some(2));
    let mid_one = mimb(&["generate", "--network", &alarm(), "--target", "VTUB", "--n-datasets", "1", "--regime", "mid", "--out", out]);
    assert_eq!(mid_one.status.code(), Some(3));
    let bad_nodes = mimb(&["verify-theorems", "--nodes", "9-3"]);
    assert_eq!(bad_nodes.status.code(), Some(2));
}

#[test]
fn verify_theorems_reports_every_row() {
    let s = ok_json(&["verify-theorems", "--trials", "3", "--nodes", "6-8", "--edge-prob", "0.3", "--seed", "4"]);
    assert_eq!(s["seed"], 4);
    let union = s["union_rows"].as_array().unwrap();
    assert_eq!(union.len(), 6);
    assert!(union.iter().all(|r| r["failures"] == 0 && r["instances"].as_u64().unwrap() >= 3));
    assert_eq!(s["intersection_rows"].as_array().unwrap().len(), 6);
}
