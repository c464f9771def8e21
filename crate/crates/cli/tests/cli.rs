use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn ptel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptel")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

fn strip_elapsed(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_elapsed);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_elapsed),
        _ => {}
    }
}

#[test]
fn peterson_passes() {
    let o = ptel(&["check", &corpus("peterson.prog"), &corpus("peterson.spec")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert_eq!(v["failed"], 0);
    assert_eq!(v["passed"], v["results"].as_array().unwrap().len());
}

#[test]
fn check_output_is_deterministic() {
    let run = || {
        let o = ptel(&[
            "check",
            &corpus("peterson.prog"),
            &corpus("peterson.spec"),
            "--only",
            "mutex",
            "--only",
            "compat T0",
        ]);
        let mut v = stdout_json(&o);
        strip_elapsed(&mut v);
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn failing_check_exits_one_and_replays() {
    let (prog, spec) = (corpus("mutants/no_victim_write.prog"), corpus("mutants/no_victim_write.spec"));
    let o = ptel(&["check", &prog, &spec, "--only", "mutex"]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o);
    let replay = &v["results"][0]["replay"];
    let labels: Vec<&str> = replay["labels"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
    let index = replay["index"].to_string();
    let depth = replay["depth"].to_string();
    let t = ptel(&[
        "trace",
        &prog,
        "--spec",
        &spec,
        "--labels",
        &labels.join(","),
        "--index",
        &index,
        "--depth",
        &depth,
        "--eval",
        replay["formula"].as_str().unwrap(),
    ]);
    assert_eq!(code(&t), 0);
    assert_eq!(stdout_json(&t)["verdict"], "false");
}

#[test]
fn usage_errors_exit_two() {
    let o = ptel(&["check"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "usage");

    let o = ptel(&["nnf", "p &"]);
    assert_eq!(code(&o), 2);
    assert!(stderr_json(&o)["message"].is_string());

    let o = ptel(&["check", "/nonexistent.prog", &corpus("peterson.spec")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn budget_exits_three() {
    let o = ptel(&["check", &corpus("peterson.prog"), &corpus("peterson.spec"), "--node-cap", "10"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stderr_json(&o)["error"], "budget");
}

#[test]
fn trace_evaluates_at_a_point() {
    let o = ptel(&["trace", &corpus("peterson.prog"), "--labels", "T0", "--eval", "flag0 = 1"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "true");
    assert_eq!(v["index"], 1);

    let o = ptel(&["trace", &corpus("peterson.prog"), "--labels", "T0", "--index", "0", "--eval", "flag0 = 1"]);
    assert_eq!(stdout_json(&o)["verdict"], "false");
}

#[test]
fn prove_with_fuzz() {
    let o = ptel(&["prove", &corpus("proofs/t_axiom.proof"), "--fuzz", "--models", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert_eq!(v["fuzz"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn seeded_prev_bug_is_reported() {
    let script = corpus("seeded/prev_without_side_condition.proof");
    assert_eq!(code(&ptel(&["prove", &script])), 1);
    let o = ptel(&["prove", &script, "--seeded-prev-bug", "--fuzz", "--models", "5"]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o);
    assert!(!v["fuzz"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn nnf_pushes_negation() {
    let o = ptel(&["nnf", "!(p & H q)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "!p | (true S !q)");

    let o = ptel(&["nnf", "!K[A] p"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "nnf");

    let o = ptel(&["nnf", "!(p S q)", "--unfold-depth", "0"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "nsince(p, q)");
}

#[test]
fn explore_lists_points() {
    let o = ptel(&["explore", &corpus("stability_consequence.prog"), "--depth", "1"]);
    assert_eq!(code(&o), 0);
    assert!(!o.stdout.is_empty());
    let o = ptel(&["explore", &corpus("stability_consequence.prog"), "--graph"]);
    assert_eq!(code(&o), 0);
}
