use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bbatlas(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbatlas"))
        .args(args)
        .env("BBATLAS_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_out(out: &Output) -> Value {
    serde_json::from_str(stdout(out).trim()).unwrap()
}

#[test]
fn poincare_of_lines_in_the_plane() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbatlas(dir.path(), &["poincare", "--r", "2", "--d", "1", "--n", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), r#"{"poly":[1,1,1]}"#);
    assert!(dir.path().join("Q_r2_d1_n0.json").exists());
}

#[test]
fn cache_dir_flag_overrides_the_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let flag = flag_dir.path().to_str().unwrap();
    let out = bbatlas(env_dir.path(), &["--cache-dir", flag, "poincare", "--r", "1", "--d", "2", "--n", "0"]);
    assert_eq!(stdout(&out).trim(), r#"{"poly":[1,1,1]}"#);
    assert!(flag_dir.path().join("Q_r1_d2_n0.json").exists());
    assert!(!env_dir.path().join("Q_r1_d2_n0.json").exists());
}

#[test]
fn enumeration_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbatlas(dir.path(), &["enumerate", "--n", "0", "--d", "2", "--r", "2", "--format", "summary"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "5 graphs; codim histogram 0:1 1:1 2:1 3:2");
    let full = json_out(&bbatlas(dir.path(), &["enumerate", "--n", "0", "--d", "2", "--r", "2"]));
    assert_eq!(full["count"], 5);
    assert_eq!(full["graphs"].as_array().unwrap().len(), 5);
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["enumerate", "--n", "1", "--d", "3", "--r", "2"];
    let one = bbatlas(dir.path(), &[&["--jobs", "1"][..], &args].concat());
    let four = bbatlas(dir.path(), &[&["--jobs", "4"][..], &args].concat());
    assert_eq!(one.stdout, four.stdout);
    let seeded = ["--seed", "9", "limit", "--random", "--n", "2", "--r", "2", "--d", "3"];
    assert_eq!(bbatlas(dir.path(), &seeded).stdout, bbatlas(dir.path(), &seeded).stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbatlas(dir.path(), &["poincare", "--r", "two", "--d", "1", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--r"));
    assert_eq!(bbatlas(dir.path(), &["--ceiling", "0", "enumerate", "--n", "0", "--d", "1", "--r", "1"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_one_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbatlas(dir.path(), &["enumerate", "--n", "0", "--d", "0", "--r", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid_arguments");
    let out = bbatlas(dir.path(), &["--ceiling", "2", "enumerate", "--n", "0", "--d", "2", "--r", "2"]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "resource_limit");
}

#[test]
fn gathmann_terms() {
    let dir = tempfile::tempdir().unwrap();
    let out = json_out(&bbatlas(dir.path(), &["gathmann", "--alpha", "2", "--j", "1", "--d", "2", "--r", "2"]));
    let terms = out["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 2);
    assert_eq!(terms[0]["coefficient"], "1/2");
    let ordered = json_out(&bbatlas(
        dir.path(),
        &["gathmann", "--alpha", "2,0", "--j", "1", "--d", "2", "--r", "2", "--ordered"],
    ));
    assert_eq!(ordered["terms"].as_array().unwrap().len(), 6);
}

#[test]
fn oracle_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = json_out(&bbatlas(dir.path(), &["oracle", "mbar", "--m", "6"]));
    assert_eq!(out["poly"], serde_json::json!([1, 16, 16, 1]));
    assert_eq!(out["counts"].as_array().unwrap().len(), 5);
}

#[test]
fn limits_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n":0,"d":3,"components":[
             {"type":"transversal","degree":1,"contacts":[{"multiplicity":1}]},
             {"type":"transversal","degree":2,"contacts":[{"multiplicity":2}]}],
           "nodes":[{"a":0,"b":1,"contact_a":0,"contact_b":0}]}"#,
    )
    .unwrap();
    let out = json_out(&bbatlas(dir.path(), &["limit", "--config", cfg.to_str().unwrap()]));
    assert_eq!(out["graph"]["vertices"].as_array().unwrap().len(), 3);
    assert!(out["dot"].as_str().unwrap().starts_with("graph G"));

    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{"forms":[[0,1,0],[1,0,1]]}"#).unwrap();
    let out = json_out(&bbatlas(dir.path(), &["limit", "--poly", map.to_str().unwrap()]));
    assert_eq!(out["data"]["zeros"].as_array().unwrap().len(), 2);
    assert_eq!(out["data"]["torus_lift"], "2");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n":0,"d":1,"components":[],"extra":true}"#).unwrap();
    let out = bbatlas(dir.path(), &["limit", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "schema");
}

#[test]
fn boundary_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.json");
    std::fs::write(
        &cfg,
        r#"{"alpha":[2],"internal_degree":1,"internal_markings":[1],
            "groups":[{"config":{"n":1,"d":1,"components":[
               {"type":"transversal","degree":1,"contacts":[{"multiplicity":1}]}]}}]}"#,
    )
    .unwrap();
    let out = bbatlas(dir.path(), &["boundary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_out(&out);
    assert!(!doc["witness"].as_array().unwrap().is_empty());
}

#[test]
fn poset_and_hasse() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json_out(&bbatlas(dir.path(), &["poset", "--n", "0", "--d", "2", "--r", "2"]));
    assert_eq!(doc["filterable"], true);
    let dot = bbatlas(dir.path(), &["poset", "--n", "0", "--d", "2", "--r", "2", "--format", "dot"]);
    assert!(stdout(&dot).starts_with("digraph Hasse"));
}

#[test]
fn selftest_reports_the_known_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbatlas(dir.path(), &["selftest", "--max-d", "2", "--max-n", "1", "--max-r", "2", "--samples", "20"]);
    let table = stdout(&out);
    assert_eq!(table.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 12);
    // Both failures are length ties, at (n=0, d=1) and for alpha = (1).
    assert_eq!(table.matches("FAIL").count(), 2, "{table}");
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "checks_failed");
}
