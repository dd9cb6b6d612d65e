use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eroll(board: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eroll"))
        .arg("--board")
        .arg(board)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const SMALL: &[&str] = &["--honest-eligible", "12", "--alpha", "4", "--blocks", "2", "--kappa", "2", "--seed", "7"];

fn run_all(board: &Path) -> Value {
    let out = eroll(board, &[&["run-all"], SMALL].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    json(&out)
}

#[test]
fn an_honest_run_passes_every_audit() {
    let dir = tempfile::tempdir().unwrap();
    let v = run_all(dir.path());
    assert_eq!(v["univ-audit"]["verdict"], true);
    assert_eq!(v["univ-audit"]["privacy_clean"], true);
    assert_eq!(v["receipt-audit"]["verdict"], true);
    assert_eq!(v["cast-phase"]["receipts"]["accept"], 12);
    let univ: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports/univ-audit.json")).unwrap()).unwrap();
    assert_eq!(univ["verdict"]["verdict"], true);
}

#[test]
fn the_same_seed_gives_the_same_board() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_all(a.path())["digest"], run_all(b.path())["digest"]);
}

#[test]
fn phases_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let board = dir.path();
    let out = eroll(board, &[&["setup"], SMALL].concat());
    assert!(out.status.success());
    for step in ["register-phase", "prepare-roll", "cast-phase", "close", "univ-audit"] {
        let out = eroll(board, &[step]);
        assert!(out.status.success(), "{step}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = eroll(board, &["receipt-audit"]);
    assert_eq!(json(&out)["verdict"], true);
}

#[test]
fn out_of_order_phases_name_the_expected_state() {
    let dir = tempfile::tempdir().unwrap();
    let board = dir.path();
    let out = eroll(board, &["cast-phase"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run `setup` first"));

    assert!(eroll(board, &[&["setup"], SMALL].concat()).status.success());
    let out = eroll(board, &["prepare-roll"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected roll-preparation"));

    let out = eroll(board, &[&["setup"], SMALL].concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_reports_epsilon_and_delta() {
    let dir = tempfile::tempdir().unwrap();
    let out = eroll(dir.path(), &["bounds", "--n", "1000000", "--alpha", "2500", "--margin", "0.02", "--plan", "0.01", "--json"]);
    assert!(out.status.success());
    let v = json(&out);
    let row = &v["rows"][0];
    assert_eq!(row["epsilon"]["params"]["f_d"], 10_000);
    assert!(row["epsilon"]["value"].as_f64().unwrap() < 1e-3);
    assert!(row["delta"]["value"].as_f64().unwrap() < 0.011);
    let alpha = v["plans"][0]["alpha"].as_u64().unwrap();
    assert!(alpha > 1000 && alpha < 2500, "{alpha}");
}

#[test]
fn harness_runs_a_named_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = eroll(
        dir.path(),
        &["harness", "run", "shuffle-tamper", "--trials", "3", "--voters", "4", "--out", report.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!((v["detections"].as_u64(), v["pass"].as_bool()), (Some(3), Some(true)));
    assert!(report.exists());

    let out = eroll(dir.path(), &["harness", "list"]);
    assert_eq!(json(&out).as_array().unwrap().len(), 16);
    assert_eq!(eroll(dir.path(), &["harness", "run", "no-such-fraud"]).status.code(), Some(2));
}
