use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quatrace"))
}

fn manifest(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn eval_ginibre_second_moment() {
    let m = manifest("ginibre.json", r#"[{"color":1,"kind":"ginibre"}]"#);
    let out = run(&["eval", "-e", "E[Re(tr(X1 X1*))]", "-m", m.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let j = json_of(&out);
    assert_eq!(j["value"], "1");
    assert_eq!(j["schema"], "1");
}

#[test]
fn eval_gse_symbolic_and_fixed() {
    let m = manifest("gse.json", r#"[{"color":1,"kind":"gse"}]"#);
    let m = m.to_str().unwrap();
    let j = json_of(&run(&["eval", "-e", "E[Re(tr(X1 X1))]", "-m", m, "--symbolic", "--json"]));
    assert_eq!(j["value"], "1 - 1/(2N)");
    let j = json_of(&run(&["eval", "-e", "E[Re(tr(X1 X1))]", "-m", m, "--at", "2", "--json"]));
    assert_eq!(j["value"], "3/4");
}

#[test]
fn eval_odd_degree_is_zero() {
    let m = manifest("gse_odd.json", r#"[{"color":1,"kind":"gse"}]"#);
    let j = json_of(&run(&["eval", "-e", "E[Re(tr(X1 X1 X1))]", "-m", m.to_str().unwrap(), "--json"]));
    assert_eq!(j["value"], "0");
    assert_eq!(j["terms"], 0);
}

#[test]
fn eval_from_spec_file_with_ledger() {
    let spec = manifest(
        "spec.json",
        r#"{"n":2,"infinity":true,"phi_re":"(inf)(1,2)","phi_tr":"(inf)(1,2)","eps":[1,-1],"colors":[1,1],
            "manifest":[{"color":1,"kind":"ginibre"}]}"#,
    );
    let ledger = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ledger.json");
    let out = run(&["eval", "-s", spec.to_str().unwrap(), "--ledger", ledger.to_str().unwrap(), "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["value"], "1");
    let l: Value = serde_json::from_str(&std::fs::read_to_string(ledger).unwrap()).unwrap();
    assert_eq!(l["schema"], "1");
    assert_eq!(l["terms"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let m = manifest("gse_codes.json", r#"[{"color":1,"kind":"gse"}]"#);
    let m = m.to_str().unwrap();
    assert_eq!(run(&["eval", "-e", "E[Re(tr(X1 X1", "-m", m]).status.code(), Some(2));
    assert_eq!(run(&["eval", "-e", "E[Re(tr(X2 X2))]", "-m", m]).status.code(), Some(4));
    let bad = manifest("bad.json", r#"[{"color":1,"kind":"cauchy"}]"#);
    assert_eq!(run(&["eval", "-e", "E[Re(tr(X1 X1))]", "-m", bad.to_str().unwrap()]).status.code(), Some(4));
    let out = bin()
        .args(["eval", "-e", "E[Re(tr(X1 X1* X1 X1*))]", "-m", m, "--json"])
        .env("QUATRACE_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_of(&out)["error"], "cap-exceeded");
}

#[test]
fn compare_passes_and_detects_corruption() {
    let m = manifest("gse_cmp.json", r#"[{"color":1,"kind":"gse"}]"#);
    let m = m.to_str().unwrap();
    let base = ["compare", "-e", "E[Re(tr(X1 X1))]", "-m", m, "--at", "2", "--samples", "100000", "--seed", "7", "--json"];
    let out = run(&base);
    assert!(out.status.success());
    let j = json_of(&out);
    assert_eq!(j["pass"], true);
    assert_eq!(j["exact"], "3/4");
    let mut corrupted = base.to_vec();
    corrupted.extend(["--exact-offset", "1/10"]);
    let out = run(&corrupted);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["pass"], false);
}

#[test]
fn compare_haar() {
    let m = manifest("haar.json", r#"[{"color":1,"kind":"haar"}]"#);
    let out = run(&[
        "compare", "-e", "E[Re(tr(X1)) Re(tr(X1*))]", "-m", m.to_str().unwrap(), "--at", "2", "--samples", "100000",
        "--seed", "11", "--json",
    ]);
    let j = json_of(&out);
    assert_eq!(j["pass"], true, "{j}");
}

#[test]
fn mc_is_deterministic() {
    let m = manifest("gin_mc.json", r#"[{"color":1,"kind":"ginibre"}]"#);
    let args = ["mc", "-e", "E[Re(tr(X1 X1*))]", "-m", m.to_str().unwrap(), "--at", "2", "--samples", "5000", "--seed", "3", "--json"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bracketize_identity_and_crossing() {
    let out = run(&["bracketize", r#"{"n":3,"phi_re":"(inf,1,2,3)","phi_tr":"(inf,1,2,3)"}"#]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "X1 X2 X3");
    let out = run(&["bracketize", r#"{"n":4,"phi_re":"(inf)(1,2,3,4)","phi_tr":"(inf)(1,3)(2,4)"}"#, "--json"]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(json_of(&out)["obstruction"], "crossing");
}

#[test]
fn bracketize_cycle_arrays() {
    let out = run(&[
        "bracketize",
        r#"{"n":2,"phi_re":[["inf",1],[2]],"phi_tr":[["inf",1,2]]}"#,
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["expression"], "X1 Re(X2)");
}

#[test]
fn check_planar() {
    let j = json_of(&run(&["check-planar", r#"{"n":4,"pi":"(1,2,3,4)","rho":"(1,3)(2,4)"}"#, "--json"]));
    assert_eq!(j["planar"], false);
    let j = json_of(&run(&["check-planar", r#"{"n":4,"pi":"(1,2,3,4)","rho":"(1,4,3,2)"}"#, "--json"]));
    assert_eq!(j["planar"], true);
}

#[test]
fn wg_table_four_points() {
    let j = json_of(&run(&["wg-table", "4", "--json"]));
    assert_eq!(j["schema"], "1");
    let mat = j["matrix"].as_array().unwrap();
    assert_eq!(mat.len(), 3);
    assert!(mat.iter().all(|r| r.as_array().unwrap().len() == 3));
    assert_eq!(j["entries"].as_array().unwrap().len(), 2);
    let j = json_of(&run(&["wg-table", "4", "--at", "3", "--json"]));
    assert_eq!(j["at"], 3);
    let csv = run(&["wg-table", "4", "--csv"]);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("lambda,Wg,wg"));
}

#[test]
fn enumerate_counts() {
    assert_eq!(json_of(&run(&["enumerate", "premaps", "3", "--json"]))["count"], 15);
    assert_eq!(json_of(&run(&["enumerate", "alternating", "4", "--json"]))["count"], 9);
    assert_eq!(json_of(&run(&["enumerate", "pairings", "4", "--json"]))["count"], 3);
}
