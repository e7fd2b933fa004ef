//! The C entry points called the way a C client would.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use bvtransfer_ffi::*;

fn problem_file(name: &str) -> CString {
    let path = format!("{}/../core/problems/{name}", env!("CARGO_MANIFEST_DIR"));
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn parse(json: &CString) -> *mut BvtProblem {
    let mut handle = ptr::null_mut();
    let code = unsafe { bvt_problem_from_json(json.as_ptr(), 0, &mut handle) };
    assert_eq!(code, BVT_OK, "{:?}", last_error());
    assert!(!handle.is_null());
    handle
}

fn last_error() -> Option<String> {
    let p = bvt_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn take(report: *mut c_char) -> serde_json::Value {
    assert!(!report.is_null());
    let text = unsafe { CStr::from_ptr(report) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { bvt_string_free(report) };
    serde_json::from_str(&text).unwrap()
}

#[test]
fn check_transfer_homotopy_on_f1() {
    let handle = parse(&problem_file("f1_cubic.json"));
    let mut report = ptr::null_mut();

    assert_eq!(unsafe { bvt_check(handle, &mut report) }, BVT_OK);
    let check = take(report);
    assert_eq!(check["command"], "check");
    assert_eq!(check["status"], "pass");

    let route = CString::new("all").unwrap();
    assert_eq!(
        unsafe { bvt_transfer(handle, route.as_ptr(), 3, &mut report) },
        BVT_OK
    );
    let transfer = take(report);
    assert_eq!(transfer["status"], "pass");
    let terms = transfer["effective_action"].as_array().unwrap();
    assert!(terms.iter().any(|t| t["genus"] == 2
        && t["vars"].as_array().unwrap().is_empty()
        && t["coefficient"] == "5/6"));

    assert_eq!(unsafe { bvt_homotopy(handle, &mut report) }, BVT_OK);
    assert_eq!(take(report)["status"], "pass");
    unsafe { bvt_problem_free(handle) };
}

#[test]
fn default_route_when_null() {
    let handle = parse(&problem_file("q_zero.json"));
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { bvt_transfer(handle, ptr::null(), 0, &mut report) },
        BVT_OK
    );
    assert_eq!(take(report)["status"], "pass");
    unsafe { bvt_problem_free(handle) };
}

#[test]
fn verification_failure_still_reports() {
    let handle = parse(&problem_file("corrupted_omega.json"));
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { bvt_check(handle, &mut report) },
        BVT_VERIFICATION_FAILED
    );
    let value = take(report);
    assert_eq!(value["status"], "fail");
    let failed: Vec<&str> = value["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"omega_graded_antisymmetric"));
    unsafe { bvt_problem_free(handle) };
}

#[test]
fn input_errors() {
    let mut handle = ptr::null_mut();
    let bad = CString::new("{\"basis\": [").unwrap();
    assert_eq!(
        unsafe { bvt_problem_from_json(bad.as_ptr(), 0, &mut handle) },
        BVT_INPUT_ERROR
    );
    assert!(handle.is_null());
    assert!(last_error().unwrap().contains("parse error"));

    assert_eq!(
        unsafe { bvt_problem_from_json(ptr::null(), 0, &mut handle) },
        BVT_NULL_POINTER
    );
    let json = problem_file("f1_cubic.json");
    assert_eq!(
        unsafe { bvt_problem_from_json(json.as_ptr(), 0, ptr::null_mut()) },
        BVT_NULL_POINTER
    );

    let handle = parse(&json);
    let mut report = ptr::null_mut();
    let route = CString::new("sideways").unwrap();
    assert_eq!(
        unsafe { bvt_transfer(handle, route.as_ptr(), 0, &mut report) },
        BVT_INPUT_ERROR
    );
    assert!(report.is_null());
    assert!(last_error().is_some());
    assert_eq!(
        unsafe { bvt_check(ptr::null(), &mut report) },
        BVT_NULL_POINTER
    );
    unsafe { bvt_problem_free(handle) };

    // a successful call clears the message
    let handle = parse(&json);
    assert!(last_error().is_none());
    unsafe { bvt_problem_free(handle) };
}

#[test]
fn window_override() {
    let json = problem_file("f1_cubic.json");
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { bvt_problem_from_json(json.as_ptr(), 4, &mut handle) },
        BVT_OK
    );
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { bvt_check(handle, &mut report) }, BVT_OK);
    assert_eq!(take(report)["max_weight"], 4);
    unsafe { bvt_problem_free(handle) };
}

#[test]
fn null_frees_are_ignored() {
    unsafe {
        bvt_problem_free(ptr::null_mut());
        bvt_string_free(ptr::null_mut());
    }
}
