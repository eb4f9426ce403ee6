//! Runs the `timebound` binary on the bundled scenario files and checks
//! exit codes and reports.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn timebound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn rational(v: &Value) -> (String, String) {
    (
        v["num"].as_str().unwrap().to_string(),
        v["den"].as_str().unwrap().to_string(),
    )
}

#[test]
fn chain_composes_and_bounds_expected_time() {
    let out = timebound(&["chain", &scenario("ring-chain-n3.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(rational(&report["composed"]["time"]), ("13".into(), "1".into()));
    assert_eq!(rational(&report["composed"]["prob"]), ("1".into(), "8".into()));
    assert_eq!(rational(&report["expected_time"]["internal"]), ("60".into(), "1".into()));
    assert_eq!(rational(&report["expected_time"]["total"]), ("63".into(), "1".into()));
}

#[test]
fn mismatched_schemas_break_the_chain() {
    let out = timebound(&["chain", &scenario("mismatched-schemas.json")]);
    assert_eq!(out.status.code(), Some(4));
    let report = json(&out);
    assert_eq!(report["error"]["kind"], "broken-chain");
    assert!(report["error"]["junction"].is_u64());
}

#[test]
fn stalling_adversary_is_a_unit_time_violation() {
    let out = timebound(&["verify", &scenario("stall-violation.json")]);
    assert_eq!(out.status.code(), Some(3));
    let report = json(&out);
    assert_eq!(report["error"]["kind"], "unit-time-violation");
    assert!(report["error"]["witness"].is_object());
}

#[test]
fn zero_threshold_holds_vacuously() {
    let out = timebound(&["verify", &scenario("zero-threshold.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["statements"][0]["verdict"], "vacuous");
}

#[test]
fn certain_phases_hold_exactly() {
    let out = timebound(&["verify", &scenario("certain-chain.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["holds"], true);
    for st in report["statements"].as_array().unwrap() {
        assert_eq!(st["verdict"], "holds");
        assert_eq!(rational(&st["value"]), ("1".into(), "1".into()));
    }
}

#[test]
fn reports_written_with_out_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let file = scenario("monte-carlo-smoke-n5.json");
    for path in [&a, &b] {
        let out = timebound(&["verify", &file, "--trials", "200", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    timebound(&["verify", &file, "--trials", "200", "--seed", "99", "--out", c.to_str().unwrap()]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn invariant_checker_finds_injected_violation() {
    let clean = timebound(&["invariants", "--n", "3"]);
    assert_eq!(clean.status.code(), Some(0));
    assert_eq!(json(&clean)["holds"], true);
    let forged = timebound(&["invariants", "--n", "3", "--inject-illegal"]);
    assert_eq!(forged.status.code(), Some(1));
    assert!(json(&forged)["counterexample"].is_object() || json(&forged)["counterexample"].is_string());
}

#[test]
fn scenario_listing_names_every_scenario() {
    let out = timebound(&["scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["scenarios"].as_array().unwrap().len(), 14);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(timebound(&["nonsense"]).status.code(), Some(64));
    assert_eq!(timebound(&["verify", "/no/such/file.json"]).status.code(), Some(64));
    assert_eq!(timebound(&["verify", &scenario("ring-chain-n3.json"), "--semantics", "hourly"]).status.code(), Some(64));
}
