use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symprob")).args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_symprob"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn analyze_reports_period_and_radius() {
    let out = run_stdin(&["analyze", "--spectrum", "-"], "0000111\n");
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["decomposition"]["period_g"], 3);
    assert_eq!(v["decomposition"]["bounded_radius_h"], 2);
}

#[test]
fn verify_razborov_or_passes() {
    let out = run(&["verify", "--recipe", "razborov-or", "--n", "4", "--eps", "1/4", "--trials", "100000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["pass"], true);
    let w0 = &v["report"]["per_weight"][0];
    assert_eq!(w0["weight"], 0);
    assert_eq!(w0["errors"], 0);
}

#[test]
fn verify_exact_mode_on_small_recipe() {
    let out = run(&["verify", "--recipe", "razborov-or", "--n", "3", "--eps", "1/4", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["report"]["pass"], true);
}

#[test]
fn reduce_maj_from_general_on_majority() {
    let out = run(&["reduce", "--kind", "maj-from-general", "--named", "MAJ", "--n", "18"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["certificates"].as_array().is_some_and(|c| c.len() == 1));
}

#[test]
fn certificate_round_trip_rechecks() {
    let out = run(&["reduce", "--kind", "thr-restrictions", "--n", "12", "--thresholds", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let dir = std::env::temp_dir().join(format!("symprob-cli-cert-{}", std::process::id()));
    std::fs::write(&dir, &out.stdout).unwrap();
    let again = run(&["reduce", "--certificate", dir.to_str().unwrap()]);
    std::fs::remove_file(&dir).ok();
    assert_eq!(again.status.code(), Some(0));
    let a = json(&out);
    let b = json(&again);
    assert_eq!(a["certificates"], b["certificates"]);
}

#[test]
fn recipe_round_trip_samples_identically() {
    let built = run(&["construct", "--recipe", "general", "--named", "MAJ", "--n", "9"]);
    assert_eq!(built.status.code(), Some(0));
    let path = std::env::temp_dir().join(format!("symprob-cli-recipe-{}", std::process::id()));
    std::fs::write(&path, &built.stdout).unwrap();
    let direct = run(&["sample", "--recipe", "general", "--named", "MAJ", "--n", "9", "--seed", "3"]);
    let loaded = run(&["sample", "--recipe-file", path.to_str().unwrap(), "--seed", "3"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(direct.status.code(), Some(0));
    assert_eq!(direct.stdout, loaded.stdout);
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "--recipe", "general", "--named", "THR(3)", "--n", "8", "--trials", "2000", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let jobs = run(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(json(&a)["report"], json(&jobs)["report"]);
}

#[test]
fn library_error_is_json_with_exit_2() {
    let out = run(&["analyze", "--named", "FOO", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["error"]["kind"], "malformed");
}

#[test]
fn usage_and_io_errors_exit_2() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "usage");
    let out = run(&["analyze", "--spectrum", "/nonexistent/spectrum.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "io");
    let out = run(&["analyze", "--field", "4", "--named", "OR", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "bad_characteristic");
}

#[test]
fn help_prints_and_succeeds() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify"));
}

#[test]
fn bounds_compares_predicted_declared_sampled() {
    let out = run(&["bounds", "--named", "MAJ", "--n", "30", "--draws", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["bounds"]["case"], "period_not_char_power");
    let declared = v["declared"].as_u64().unwrap();
    let sampled = v["sampled"].as_u64().unwrap();
    assert!(sampled <= declared);
}

#[test]
fn recurrence_audit_reports_literal_failure() {
    let out = run(&["bounds", "--recurrence-t", "20000000", "--eps", "2^-100", "--profile", "asymptotic"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["recurrence"]["closes"], true);
    assert_eq!(v["recurrence"]["literal"], false);
}
