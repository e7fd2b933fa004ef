//! C ABI for the bvtransfer engine.
//!
//! A problem is parsed once into an opaque [`BvtProblem`] handle and then
//! run through the `check`, `transfer` and `homotopy` commands. Each command
//! returns a status code and hands back the JSON report as a Rust-allocated
//! string that the caller releases with [`bvt_string_free`]. When a call
//! fails before a report exists, [`bvt_last_error`] describes why.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bvtransfer::commands::{
    cmd_check, cmd_homotopy, cmd_transfer, exit_code_for, CommandOptions, Report, RouteChoice,
};
use bvtransfer::problem::Problem;

/// Every check passed.
pub const BVT_OK: i32 = 0;
/// A report was produced and at least one check failed, or the engine hit
/// an internal inconsistency.
pub const BVT_VERIFICATION_FAILED: i32 = 1;
/// The input could not be used: parse, structural or precondition error.
pub const BVT_INPUT_ERROR: i32 = 2;
/// A required pointer argument was null.
pub const BVT_NULL_POINTER: i32 = 3;
/// The engine panicked.
pub const BVT_INTERNAL: i32 = 4;

/// Opaque handle to a parsed problem.
pub struct BvtProblem {
    problem: Problem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Runs `f`, converting a panic into [`BVT_INTERNAL`].
fn guarded(f: impl FnOnce() -> i32) -> i32 {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {message}"));
            BVT_INTERNAL
        }
    }
}

/// # Safety
/// `text` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, i32> {
    if text.is_null() {
        set_last_error(format!("{what} is null"));
        return Err(BVT_NULL_POINTER);
    }
    CStr::from_ptr(text).to_str().map_err(|e| {
        set_last_error(format!("{what} is not UTF-8: {e}"));
        BVT_INPUT_ERROR
    })
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
unsafe fn emit(outcome: bvtransfer::error::Result<Report>, out: *mut *mut c_char) -> i32 {
    match outcome {
        Ok(report) => match CString::new(report.to_json()) {
            Ok(json) => {
                *out = json.into_raw();
                report.exit_code()
            }
            Err(e) => {
                set_last_error(format!("report contains a NUL byte: {e}"));
                BVT_INTERNAL
            }
        },
        Err(e) => {
            set_last_error(e.to_string());
            exit_code_for(&e)
        }
    }
}

/// Parses a problem from JSON text.
///
/// `max_weight` overrides the file's truncation window when non-zero. On
/// success `*out` receives a handle to release with [`bvt_problem_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvt_problem_from_json(
    json: *const c_char,
    max_weight: u32,
    out: *mut *mut BvtProblem,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            set_last_error("out is null");
            return BVT_NULL_POINTER;
        }
        *out = ptr::null_mut();
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(code) => return code,
        };
        let window = (max_weight != 0).then_some(max_weight);
        match Problem::parse(text, window) {
            Ok(problem) => {
                *out = Box::into_raw(Box::new(BvtProblem { problem }));
                BVT_OK
            }
            Err(e) => {
                set_last_error(e.to_string());
                BVT_INPUT_ERROR
            }
        }
    })
}

/// Releases a problem handle. Null is ignored.
///
/// # Safety
/// `problem` must be null or a handle from [`bvt_problem_from_json`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bvt_problem_free(problem: *mut BvtProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Validates the space and the master equation (or the main identity for
/// problems given by operations).
///
/// # Safety
/// `problem` must be a live handle and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvt_check(problem: *const BvtProblem, report: *mut *mut c_char) -> i32 {
    guarded(|| {
        if problem.is_null() || report.is_null() {
            set_last_error("problem or report is null");
            return BVT_NULL_POINTER;
        }
        *report = ptr::null_mut();
        emit(cmd_check(&(*problem).problem), report)
    })
}

/// Computes the effective action. `route` is `hpl`, `feynman`, `alt` or
/// `all`; null means `hpl`. `seed` drives the random sweep samples.
///
/// # Safety
/// `problem` must be a live handle, `route` null or a valid NUL-terminated
/// string, and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvt_transfer(
    problem: *const BvtProblem,
    route: *const c_char,
    seed: u64,
    report: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if problem.is_null() || report.is_null() {
            set_last_error("problem or report is null");
            return BVT_NULL_POINTER;
        }
        *report = ptr::null_mut();
        let mut options = CommandOptions {
            seed,
            ..CommandOptions::default()
        };
        if !route.is_null() {
            let text = match read_str(route, "route") {
                Ok(t) => t,
                Err(code) => return code,
            };
            match text.parse::<RouteChoice>() {
                Ok(choice) => options.route = choice,
                Err(e) => {
                    set_last_error(e.to_string());
                    return BVT_INPUT_ERROR;
                }
            }
        }
        emit(cmd_transfer(&(*problem).problem, &options), report)
    })
}

/// Computes the exactness witness between the action and its transfer.
///
/// # Safety
/// `problem` must be a live handle and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvt_homotopy(problem: *const BvtProblem, report: *mut *mut c_char) -> i32 {
    guarded(|| {
        if problem.is_null() || report.is_null() {
            set_last_error("problem or report is null");
            return BVT_NULL_POINTER;
        }
        *report = ptr::null_mut();
        emit(
            cmd_homotopy(&(*problem).problem, &CommandOptions::default()),
            report,
        )
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bvt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message describing the last failed call on this thread, or null. The
/// pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn bvt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
