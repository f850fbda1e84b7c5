use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowreroute::fixtures;
use flowreroute::format::serialize_instance;
use flowreroute::UpdateFlowNetwork;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_flowreroute"));
    c.env_remove("FLOWREROUTE_SEED");
    c
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out: Output = bin().args(args).output().unwrap();
    report(out)
}

fn report(out: Output) -> (i32, Value, String) {
    let stdout = String::from_utf8(out.stdout).unwrap();
    let v = if stdout.trim().is_empty() { Value::Null } else { serde_json::from_str(&stdout).unwrap() };
    (out.status.code().unwrap(), v, String::from_utf8(out.stderr).unwrap())
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn put_net(dir: &TempDir, name: &str, net: &UpdateFlowNetwork) -> PathBuf {
    put(dir, name, &serialize_instance(net))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let fig = put_net(&dir, "fig.json", &fixtures::loop_example());
    let (code, rep, _) = run(&["validate", s(&fig)]);
    assert_eq!(code, 0);
    assert_eq!(rep["verdict"], "valid");

    let over = flowreroute::NetworkBuilder::new("s", "t").edge("s", "t", 1).pair(2, &["s", "t"], &["s", "t"]).build();
    let bad = put_net(&dir, "bad.json", &over);
    let (code, rep, _) = run(&["validate", s(&bad)]);
    assert_eq!(code, 2);
    assert!(!rep["details"]["violations"].as_array().unwrap().is_empty());

    let (code, _, err) = run(&["validate", s(&dir.path().join("missing.json"))]);
    assert_eq!(code, 1);
    assert!(err.contains("cannot read"));
}

#[test]
fn solve_then_verify_closed_loop() {
    let dir = TempDir::new().unwrap();
    let inst = put_net(&dir, "swap.json", &fixtures::lane_swap());
    let sched = dir.path().join("sched.json");
    let (code, rep, _) = run(&["solve", s(&inst), "--out", s(&sched), "--dump-blocks", "--dump-rh"]);
    assert_eq!(code, 0);
    assert_eq!(rep["verdict"], "feasible");
    assert_eq!(rep["counters"]["blocks"], 2);
    assert_eq!(rep["details"]["blocks"].as_array().unwrap().len(), 2);
    assert!(rep["details"]["rh"]["groups"].is_array());
    let (code, rep, _) = run(&["verify", s(&inst), s(&sched)]);
    assert_eq!(code, 0, "{rep}");

    let single = dir.path().join("single.json");
    let (code, _, _) = run(&["solve", s(&inst), "--out", s(&single), "--singleton-rounds"]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["verify", s(&inst), s(&single)]);
    assert_eq!(code, 0);
}

#[test]
fn solve_negative_verdicts() {
    let dir = TempDir::new().unwrap();
    let dead = put_net(&dir, "dead.json", &fixtures::deadlock());
    let (code, rep, _) = run(&["solve", s(&dead)]);
    assert_eq!((code, rep["verdict"].as_str()), (2, Some("infeasible")));

    let fig = put_net(&dir, "fig.json", &fixtures::loop_example());
    let (code, rep, err) = run(&["solve", s(&fig)]);
    assert_eq!((code, rep["verdict"].as_str()), (2, Some("not-a-dag")));
    assert!(err.contains("oracle"));
}

#[test]
fn verify_reports_round() {
    let dir = TempDir::new().unwrap();
    let fig = put_net(&dir, "fig.json", &fixtures::loop_example());
    let three = put(&dir, "three.json", &schedule_json(&[&["v1"], &["s"], &["v2"]]));
    let bad = put(&dir, "bad.json", &schedule_json(&[&["v2"], &["v1"], &["s"]]));
    let short = put(&dir, "short.json", &schedule_json(&[&["v1"]]));
    let (code, _, _) = run(&["verify", s(&fig), s(&three)]);
    assert_eq!(code, 0);
    let (code, rep, _) = run(&["verify", s(&fig), s(&bad)]);
    assert_eq!(code, 2);
    assert_eq!(rep["details"]["round"], 1);
    let (code, rep, _) = run(&["verify", s(&fig), s(&short)]);
    assert_eq!(code, 2);
    assert!(rep["details"]["violations"][0].as_str().unwrap().contains("unresolved"), "{rep}");
}

fn schedule_json(rounds: &[&[&str]]) -> String {
    let rounds: Vec<Vec<Value>> =
        rounds.iter().map(|r| r.iter().map(|v| serde_json::json!({ "pair": 1, "vertex": v })).collect()).collect();
    serde_json::to_string_pretty(&serde_json::json!({ "rounds": rounds, "version": 1 })).unwrap()
}

#[test]
fn gadgets_through_the_oracle() {
    let dir = TempDir::new().unwrap();
    let x1 = put(&dir, "x1.cnf", "p cnf 1 1\n1 0\n");
    let contra = put(&dir, "c.cnf", "p cnf 1 2\n1 0\n-1 0\n");

    let g = dir.path().join("g.json");
    let w = dir.path().join("w.json");
    let (code, _, _) = run(&["gen-sat2", s(&x1), "--out", s(&g), "--witness", s(&w)]);
    assert_eq!(code, 0);
    assert_eq!(run(&["oracle", s(&g)]).0, 0);
    assert_eq!(run(&["verify", s(&g), s(&w)]).0, 0);

    let d = dir.path().join("d.json");
    let (code, _, _) = run(&["gen-satdag", s(&contra), "--out", s(&d)]);
    assert_eq!(code, 0);
    let (code, rep, _) = run(&["oracle", s(&d)]);
    assert_eq!((code, rep["verdict"].as_str()), (2, Some("infeasible")));
}

#[test]
fn decode_oracle_schedule() {
    let dir = TempDir::new().unwrap();
    let neg = put(&dir, "n.cnf", "p cnf 1 1\n-1 0\n");
    let (d, m, o) = (dir.path().join("d.json"), dir.path().join("m.json"), dir.path().join("o.json"));
    assert_eq!(run(&["gen-satdag", s(&neg), "--out", s(&d), "--meta", s(&m)]).0, 0);
    assert_eq!(run(&["oracle", s(&d), "--out", s(&o)]).0, 0);
    let (code, rep, _) = run(&["decode", s(&m), s(&o)]);
    assert_eq!(code, 0);
    assert_eq!(rep["details"]["assignment"], serde_json::json!([false]));

    let empty = put(&dir, "e.json", "{\n  \"rounds\": [],\n  \"version\": 1\n}\n");
    assert_eq!(run(&["decode", s(&m), s(&empty)]).0, 2);
}

#[test]
fn oracle_limit_exit_code() {
    let dir = TempDir::new().unwrap();
    let fig = put_net(&dir, "fig.json", &fixtures::loop_example());
    let (code, rep, _) = run(&["oracle", s(&fig), "--max-states", "1", "--full"]);
    assert_eq!((code, rep["verdict"].as_str()), (3, Some("limit-exceeded")));
}

#[test]
fn gen_random_is_deterministic_and_env_overrides_seed() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    assert_eq!(run(&["gen-random", "--seed", "7", "--out", s(&a)]).0, 0);
    assert_eq!(run(&["gen-random", "--seed", "7", "--out", s(&b)]).0, 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = bin().args(["gen-random", "--seed", "1", "--out", s(&c)]).env("FLOWREROUTE_SEED", "7").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    assert_eq!(run(&["validate", s(&a)]).0, 0);
}

#[test]
fn usage_error() {
    let (code, _, _) = run(&["solve"]);
    assert_ne!(code, 0);
    let (code, _, _) = run(&["gen-random", "--vertices", "1", "--out", "/dev/null"]);
    assert_eq!(code, 1);
}
