//! The hand-written C header against the exported Rust surface.

use std::collections::BTreeSet;
use std::process::Command;

const HEADER: &str = include_str!("../include/bvtransfer.h");
const SOURCE: &str = include_str!("../src/lib.rs");

fn exported_functions() -> BTreeSet<String> {
    SOURCE
        .lines()
        .filter_map(|line| line.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap().trim().to_string())
        .collect()
}

fn header_functions() -> BTreeSet<String> {
    HEADER
        .lines()
        .filter(|line| !line.trim_start().starts_with("/*") && line.contains('('))
        .filter_map(|line| {
            let name = line.split('(').next()?.split_whitespace().last()?;
            Some(name.trim_start_matches('*').to_string())
        })
        .filter(|name| name.starts_with("bvt_"))
        .collect()
}

#[test]
fn every_export_is_declared() {
    let exported = exported_functions();
    assert_eq!(exported.len(), 7);
    assert_eq!(exported, header_functions());
}

#[test]
fn status_codes_match() {
    let codes = [
        ("BVT_OK", bvtransfer_ffi::BVT_OK),
        (
            "BVT_VERIFICATION_FAILED",
            bvtransfer_ffi::BVT_VERIFICATION_FAILED,
        ),
        ("BVT_INPUT_ERROR", bvtransfer_ffi::BVT_INPUT_ERROR),
        ("BVT_NULL_POINTER", bvtransfer_ffi::BVT_NULL_POINTER),
        ("BVT_INTERNAL", bvtransfer_ffi::BVT_INTERNAL),
    ];
    for (name, value) in codes {
        let line = format!("#define {name} {value}");
        assert!(HEADER.lines().any(|l| l.trim() == line), "missing `{line}`");
    }
    assert_eq!(HEADER.matches("#define BVT_").count(), codes.len());
}

#[test]
fn header_compiles_as_c() {
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bvtransfer.h"))
        .status()
    else {
        eprintln!("no C compiler on PATH; skipped");
        return;
    };
    assert!(status.success());
}
