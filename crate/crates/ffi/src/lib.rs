//! C ABI for the timebound toolkit.
//!
//! Scenario files are loaded into opaque [`TbScenario`] handles and checked
//! with [`tb_verify`] or [`tb_chain`]; rings are created as [`TbRing`]
//! handles for invariant checks. Every function returns a [`TbStatus`];
//! reports come back as NUL-terminated JSON strings owned by the caller and
//! released with [`tb_string_free`]. After a failing call,
//! [`tb_last_error`] describes what went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use timebound::cli::{cmd_chain, cmd_invariants, cmd_verify, FileError, Output, Overrides, ScenarioFile};
use timebound::models::lehmann_rabin::LehmannRabin;
use timebound::report::{EXIT_BROKEN_CHAIN, EXIT_BUDGET, EXIT_FAILS, EXIT_HOLDS, EXIT_VIOLATION};

/// Result of every call. The first five values match the exit codes of the
/// `timebound` command-line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    /// Success; for checks, every statement holds.
    TbOk = 0,
    /// A checked statement does not hold.
    TbFails = 1,
    /// A node or state budget was exhausted.
    TbBudget = 2,
    /// A simulated adversary broke the Unit-Time condition.
    TbUnitTimeViolation = 3,
    /// The statements do not form a chain.
    TbBrokenChain = 4,
    /// An argument or scenario file is invalid.
    TbInvalidArgument = 64,
    /// A required pointer was null.
    TbNullPointer = 65,
    /// Reading a file failed.
    TbIoError = 66,
    /// An internal error; the library caught a panic.
    TbInternal = 70,
}

impl TbStatus {
    fn from_exit_code(code: i32) -> Self {
        match code {
            EXIT_HOLDS => TbStatus::TbOk,
            EXIT_FAILS => TbStatus::TbFails,
            EXIT_BUDGET => TbStatus::TbBudget,
            EXIT_VIOLATION => TbStatus::TbUnitTimeViolation,
            EXIT_BROKEN_CHAIN => TbStatus::TbBrokenChain,
            _ => TbStatus::TbInvalidArgument,
        }
    }
}

/// A parsed and validated scenario file.
pub struct TbScenario {
    file: ScenarioFile,
}

/// A Lehmann–Rabin ring.
pub struct TbRing {
    model: LehmannRabin,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: TbStatus, message: impl Into<String>) -> TbStatus {
    set_error(message);
    status
}

fn file_error(e: FileError) -> TbStatus {
    let status = match e {
        FileError::Io { .. } => TbStatus::TbIoError,
        _ => TbStatus::TbInvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `TbInternal`.
fn guard(f: impl FnOnce() -> TbStatus) -> TbStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(TbStatus::TbInternal, format!("internal error: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, TbStatus> {
    if p.is_null() {
        return Err(fail(TbStatus::TbNullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TbStatus::TbInvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Hands a command's report to the caller and maps its exit code.
unsafe fn deliver(result: Result<Output, FileError>, report_json: *mut *mut c_char) -> TbStatus {
    let out = match result {
        Ok(out) => out,
        Err(e) => return file_error(e),
    };
    let text = match CString::new(out.json) {
        Ok(t) => t,
        Err(_) => return fail(TbStatus::TbInternal, "report contains a NUL byte"),
    };
    *report_json = text.into_raw();
    let status = TbStatus::from_exit_code(out.code);
    if status != TbStatus::TbOk {
        set_error(out.summary.trim_end().to_string());
    }
    status
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failing call on this thread, or null. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a scenario file given as JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_scenario_from_json(json: *const c_char, out: *mut *mut TbScenario) -> TbStatus {
    guard(|| {
        if out.is_null() {
            return fail(TbStatus::TbNullPointer, "out is null");
        }
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let file = match ScenarioFile::parse(text).and_then(|f| f.validate().map(|_| f)) {
            Ok(f) => f,
            Err(e) => return file_error(e),
        };
        *out = Box::into_raw(Box::new(TbScenario { file }));
        TbStatus::TbOk
    })
}

/// Loads and validates a scenario file from disk.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_scenario_load(path: *const c_char, out: *mut *mut TbScenario) -> TbStatus {
    guard(|| {
        if out.is_null() {
            return fail(TbStatus::TbNullPointer, "out is null");
        }
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let file = match ScenarioFile::load(Path::new(path)).and_then(|f| f.validate().map(|_| f)) {
            Ok(f) => f,
            Err(e) => return file_error(e),
        };
        *out = Box::into_raw(Box::new(TbScenario { file }));
        TbStatus::TbOk
    })
}

/// Releases a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_scenario_free(scenario: *mut TbScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Replaces the seed of a loaded scenario.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_scenario_set_seed(scenario: *mut TbScenario, seed: u64) -> TbStatus {
    guard(|| match scenario.as_mut() {
        Some(s) => {
            s.file.seed = seed;
            TbStatus::TbOk
        }
        None => fail(TbStatus::TbNullPointer, "scenario is null"),
    })
}

/// Checks every statement and scenario of `scenario`. On return `report_json`
/// holds the JSON report (free it with [`tb_string_free`]) unless the
/// status is `TbInvalidArgument`, `TbNullPointer`, `TbIoError` or
/// `TbInternal`.
///
/// # Safety
/// `scenario` must be a live handle; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_verify(scenario: *const TbScenario, report_json: *mut *mut c_char) -> TbStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(TbStatus::TbNullPointer, "scenario is null");
        };
        if report_json.is_null() {
            return fail(TbStatus::TbNullPointer, "report_json is null");
        }
        *report_json = ptr::null_mut();
        deliver(cmd_verify(&s.file, &Overrides::default()), report_json)
    })
}

/// Composes the statements of `scenario` into a chain and bounds the
/// expected time. Report ownership as for [`tb_verify`].
///
/// # Safety
/// `scenario` must be a live handle; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_chain(scenario: *const TbScenario, report_json: *mut *mut c_char) -> TbStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(TbStatus::TbNullPointer, "scenario is null");
        };
        if report_json.is_null() {
            return fail(TbStatus::TbNullPointer, "report_json is null");
        }
        *report_json = ptr::null_mut();
        deliver(cmd_chain(&s.file), report_json)
    })
}

/// Creates a ring of `n` processes, `2 <= n <= 64`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_ring_new(n: usize, out: *mut *mut TbRing) -> TbStatus {
    guard(|| {
        if out.is_null() {
            return fail(TbStatus::TbNullPointer, "out is null");
        }
        match LehmannRabin::new(n) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TbRing { model }));
                TbStatus::TbOk
            }
            Err(e) => fail(TbStatus::TbInvalidArgument, e.to_string()),
        }
    })
}

/// Number of processes of a ring, or 0 for null.
///
/// # Safety
/// `ring` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_ring_size(ring: *const TbRing) -> usize {
    ring.as_ref().map_or(0, |r| r.model.n())
}

/// Releases a ring handle. Null is ignored.
///
/// # Safety
/// `ring` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_ring_free(ring: *mut TbRing) {
    if !ring.is_null() {
        drop(Box::from_raw(ring));
    }
}

/// Checks the resource invariant on the ring: on every reachable state when
/// `walk_length` is 0, otherwise along `walks` random walks of that length.
/// Returns `TbOk` when it holds and `TbFails` with a counterexample in the
/// report otherwise. Report ownership as for [`tb_verify`].
///
/// # Safety
/// `ring` must be a live handle; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_ring_check_invariants(
    ring: *const TbRing,
    walks: u64,
    walk_length: usize,
    budget_states: usize,
    seed: u64,
    report_json: *mut *mut c_char,
) -> TbStatus {
    guard(|| {
        let Some(r) = ring.as_ref() else {
            return fail(TbStatus::TbNullPointer, "ring is null");
        };
        if report_json.is_null() {
            return fail(TbStatus::TbNullPointer, "report_json is null");
        }
        *report_json = ptr::null_mut();
        let depth = (walk_length > 0).then_some(walk_length);
        deliver(
            cmd_invariants(r.model.n(), depth, walks, budget_states, seed, false),
            report_json,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_map_to_statuses() {
        assert_eq!(TbStatus::from_exit_code(0), TbStatus::TbOk);
        assert_eq!(TbStatus::from_exit_code(3), TbStatus::TbUnitTimeViolation);
        assert_eq!(TbStatus::from_exit_code(4), TbStatus::TbBrokenChain);
        assert_eq!(TbStatus::from_exit_code(64), TbStatus::TbInvalidArgument);
    }

    #[test]
    fn panics_become_internal_errors() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, TbStatus::TbInternal);
        let msg = unsafe { CStr::from_ptr(tb_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
