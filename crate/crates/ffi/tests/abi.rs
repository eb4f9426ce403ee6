//! Drives the C ABI the way a C caller would.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use timebound_ffi::*;

fn scenario_path(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn take_report(p: *mut c_char) -> serde_json::Value {
    assert!(!p.is_null());
    let v = serde_json::from_str(unsafe { CStr::from_ptr(p) }.to_str().unwrap()).unwrap();
    unsafe { tb_string_free(p) };
    v
}

fn last_error() -> String {
    let p = tb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut TbScenario {
    let mut h = ptr::null_mut();
    let status = unsafe { tb_scenario_load(scenario_path(name).as_ptr(), &mut h) };
    assert_eq!(status, TbStatus::TbOk);
    h
}

#[test]
fn chain_report_round_trips_through_c_strings() {
    let h = load("ring-chain-n3.json");
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { tb_chain(h, &mut report) }, TbStatus::TbOk);
    let v = take_report(report);
    assert_eq!(v["composed"]["prob"]["den"], "8");
    assert_eq!(v["expected_time"]["total"]["num"], "63");
    unsafe { tb_scenario_free(h) };
}

#[test]
fn verification_statuses_follow_the_verdict() {
    let h = load("certain-chain.json");
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { tb_verify(h, &mut report) }, TbStatus::TbOk);
    assert_eq!(take_report(report)["holds"], true);
    unsafe { tb_scenario_free(h) };

    let h = load("stall-violation.json");
    assert_eq!(unsafe { tb_verify(h, &mut report) }, TbStatus::TbUnitTimeViolation);
    assert_eq!(take_report(report)["error"]["kind"], "unit-time-violation");
    assert!(!last_error().is_empty());
    unsafe { tb_scenario_free(h) };

    let h = load("mismatched-schemas.json");
    assert_eq!(unsafe { tb_chain(h, &mut report) }, TbStatus::TbBrokenChain);
    take_report(report);
    unsafe { tb_scenario_free(h) };
}

#[test]
fn bad_inputs_are_reported_not_crashed_on() {
    let mut h = ptr::null_mut();
    let junk = CString::new("{\"name\": 1}").unwrap();
    assert_eq!(unsafe { tb_scenario_from_json(junk.as_ptr(), &mut h) }, TbStatus::TbInvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("invalid scenario"));

    let missing = CString::new("/no/such/scenario.json").unwrap();
    assert_eq!(unsafe { tb_scenario_load(missing.as_ptr(), &mut h) }, TbStatus::TbIoError);
    assert_eq!(unsafe { tb_scenario_load(ptr::null(), &mut h) }, TbStatus::TbNullPointer);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { tb_verify(ptr::null(), &mut report) }, TbStatus::TbNullPointer);
    assert_eq!(unsafe { tb_ring_new(1, &mut ptr::null_mut()) }, TbStatus::TbInvalidArgument);

    // Freeing null is a no-op.
    unsafe {
        tb_string_free(ptr::null_mut());
        tb_scenario_free(ptr::null_mut());
        tb_ring_free(ptr::null_mut());
    }
}

#[test]
fn scenario_from_json_and_seed_override() {
    let text = std::fs::read_to_string(scenario_path("zero-threshold.json").to_str().unwrap()).unwrap();
    let text = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tb_scenario_from_json(text.as_ptr(), &mut h) }, TbStatus::TbOk);
    assert_eq!(unsafe { tb_scenario_set_seed(h, 42) }, TbStatus::TbOk);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { tb_verify(h, &mut report) }, TbStatus::TbOk);
    assert_eq!(take_report(report)["seed"], 42);
    unsafe { tb_scenario_free(h) };
}

#[test]
fn ring_invariants_hold() {
    let mut ring = ptr::null_mut();
    assert_eq!(unsafe { tb_ring_new(3, &mut ring) }, TbStatus::TbOk);
    assert_eq!(unsafe { tb_ring_size(ring) }, 3);
    let mut report = ptr::null_mut();
    let status = unsafe { tb_ring_check_invariants(ring, 0, 0, 1_000_000, 0, &mut report) };
    assert_eq!(status, TbStatus::TbOk);
    let v = take_report(report);
    assert_eq!(v["exhaustive"], true);
    assert_eq!(v["holds"], true);
    let status = unsafe { tb_ring_check_invariants(ring, 20, 50, 0, 1, &mut report) };
    assert_eq!(status, TbStatus::TbOk);
    assert_eq!(take_report(report)["exhaustive"], false);
    unsafe { tb_ring_free(ring) };
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(tb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// The generated header must parse as both C and C++.
#[test]
fn header_compiles() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/timebound.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["tb_verify", "tb_chain", "tb_last_error", "tb_string_free", "TB_UNIT_TIME_VIOLATION"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        match Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
        {
            Ok(status) => assert!(status.success(), "{compiler} rejects the header"),
            Err(_) => eprintln!("{compiler} not found; skipping"),
        }
    }
}
