use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn upbbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upbbell")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("upbbell-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_check_upb() {
    let set = scratch("g3.json");
    assert!(upbbell(&["gen", "gyni", "--n", "3", "-o", path(&set)]).status.success());
    let o = upbbell(&["check", "upb", "-i", path(&set)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["unextendible"], true);
    for what in ["orth", "property-p"] {
        assert_eq!(upbbell(&["check", what, "-i", path(&set)]).status.code(), Some(0));
    }
}

#[test]
fn extendible_set_fails_the_upb_check() {
    let set = scratch("even.json");
    let (z, o) = ("[[1,0],[0,0]]", "[[0,0],[1,0]]");
    let doc = format!(
        r#"{{"dims":[2,2,2],"members":[[{z},{z},{z}],[{z},{o},{o}],[{o},{z},{o}],[{o},{o},{z}]]}}"#
    );
    std::fs::write(&set, doc).unwrap();
    let o = upbbell(&["check", "upb", "-i", path(&set), "--format", "compact"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["unextendible"], false);
    assert_eq!(r["witness"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_and_capacity_exit_codes() {
    assert_eq!(upbbell(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(upbbell(&["check", "upb", "-i", "/nonexistent/set.json"]).status.code(), Some(2));
    assert_eq!(upbbell(&["gen", "shifts", "--n", "5"]).status.code(), Some(2));
    assert_eq!(upbbell(&["gen", "gyni", "--n", "3", "--e", "1,0"]).status.code(), Some(2));
    let ineq = scratch("g8.json");
    assert!(upbbell(&["ineq", "gyni", "--n", "8", "-o", path(&ineq)]).status.success());
    let o = upbbell(&["tight", "-i", path(&ineq)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_upbbell"))
        .args(["ineq", "gyni", "--n", "3"])
        .env("UPBBELL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_term_ns_bound_is_one() {
    let ineq = scratch("single.json");
    let doc = r#"{"scenario":{"inputs":[2,2],"outputs":[[2,2],[2,2]]},
        "terms":[{"x":[0,0],"a":[0,0],"q":"1/1"}]}"#;
    std::fs::write(&ineq, doc).unwrap();
    let o = upbbell(&["bounds", "ns", "-i", path(&ineq)]);
    assert!(o.status.success());
    assert_eq!(json(&o)["value"], "1/1");
    let o = upbbell(&["bounds", "classical", "-i", path(&ineq)]);
    assert_eq!(json(&o)["value"], "1/1");
}

#[test]
fn pipeline_is_byte_reproducible() {
    let a = upbbell(&["pipeline", "--n", "3", "--seed", "7"]);
    let b = Command::new(env!("CARGO_BIN_EXE_upbbell"))
        .args(["pipeline", "--n", "3", "--seed", "7"])
        .env("UPBBELL_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["bounds"]["beta_c"], "1/1");
    assert_eq!(r["bounds"]["beta_n"], "4/3");
    assert!((r["bounds"]["beta_q_spectral"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(r["witness"]["trace_BW"].as_f64().unwrap() > 1.0);
    assert_eq!(r["tightness"]["is_facet"], true);
    assert!(r["version"].is_string());
}

#[test]
fn files_round_trip_through_their_consumers() {
    let set = scratch("rt-set.json");
    let ext = scratch("rt-ext.json");
    let ineq = scratch("rt-ineq.json");
    assert!(upbbell(&["gen", "shifts", "-o", path(&set)]).status.success());
    assert!(upbbell(&["extend", "-i", path(&set), "-o", path(&ext)]).status.success());
    let o = upbbell(&["check", "upb", "-i", path(&ext)]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty());
    assert!(upbbell(&["ineq", "from-set", "-i", path(&set), "--weights", "1,1/2,3/4,1", "-o", path(&ineq)])
        .status
        .success());
    let o = upbbell(&["bounds", "all", "-i", path(&ineq), "--set", path(&set), "--restarts", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty());
    let r = json(&o);
    assert_eq!(r["bounds"]["beta_c"], "1/1");
    assert!((r["bounds"]["beta_q_spectral"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let o = upbbell(&["bounds", "spectral", "-i", path(&ineq)]);
    assert_eq!(o.status.code(), Some(2));
    let o = upbbell(&["tight", "-i", path(&ineq), "--dump-vertices", "--format", "compact"]);
    assert!(o.status.success());
    assert!(json(&o)["saturating_vertices"].is_array());
}

#[test]
fn witness_and_verbose_summary() {
    let set = scratch("w-set.json");
    assert!(upbbell(&["gen", "shifts", "-o", path(&set)]).status.success());
    let o = upbbell(&["witness", "-i", path(&set), "--seed", "3", "--verbose"]);
    assert!(o.status.success());
    let r = json(&o);
    assert!(r["witness"]["trace_W_rho"].as_f64().unwrap() < 0.0);
    assert!(r["witness"].get("witness").is_none());
    assert!(!o.stderr.is_empty());
    let o = upbbell(&["witness", "-i", path(&set), "--matrices", "--format", "compact"]);
    let r = json(&o);
    assert_eq!(r["witness"]["witness"].as_array().unwrap().len(), 8);
    assert_eq!(r["witness"]["state"].as_array().unwrap().len(), 8);
}
