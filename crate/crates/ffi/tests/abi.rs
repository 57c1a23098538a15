use std::ffi::{CStr, CString};
use std::ptr;

use bivp_ffi::*;

fn corpus(id: &str) -> *mut BivpProblem {
    let id = CString::new(id).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bivp_problem_from_corpus(id.as_ptr(), &mut p) }, BivpStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let m = bivp_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

#[test]
fn theta_constant() {
    assert!((bivp_theta() - 1.659797).abs() < 5e-7);
}

#[test]
fn classify_returns_owned_tag() {
    let p = corpus("counterexample2");
    let mut tag = ptr::null_mut();
    assert_eq!(unsafe { bivp_classify(p, 0.0, 0.0, &mut tag) }, BivpStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(tag) }.to_str().unwrap(), "B1[=,=]");
    unsafe {
        bivp_string_free(tag);
        bivp_problem_free(p);
    }
}

#[test]
fn uniqueness_classes() {
    let p = corpus("example1");
    let mut class = BivpUniqueness::Unknown;
    assert_eq!(unsafe { bivp_uniqueness(p, 0.0, 0.0, &mut class) }, BivpStatus::Ok);
    assert_eq!(class, BivpUniqueness::NonUniqueness);
    assert_eq!(unsafe { bivp_uniqueness(p, 1.0, 1.0, &mut class) }, BivpStatus::Ok);
    assert_eq!(class, BivpUniqueness::Uniqueness);
    assert_eq!(unsafe { bivp_uniqueness(p, -1.0, 0.0, &mut class) }, BivpStatus::OutsideDomain);
    assert!(last_error().contains("outside the domain"));
    unsafe { bivp_problem_free(p) };
}

#[test]
fn solve_traces_the_cubic() {
    let p = corpus("example1");
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bivp_solve(p, 0.0, 0.0, 1.0, 1e-3, BivpPolicy::Interior, &mut t) }, BivpStatus::Ok);
    let n = unsafe { bivp_trace_len(t) };
    assert!(n > 100);
    let (mut x, mut y) = (0.0, 0.0);
    for i in 0..n {
        assert_eq!(unsafe { bivp_trace_point(t, i, &mut x, &mut y) }, BivpStatus::Ok);
        assert!((y - x * x * x).abs() < 1e-2);
    }
    assert_eq!(unsafe { bivp_trace_point(t, n, &mut x, &mut y) }, BivpStatus::IndexOutOfRange);
    let term = unsafe { CStr::from_ptr(bivp_trace_terminal(t)) }.to_str().unwrap();
    assert_eq!(term, "reached-segment-end");
    assert_eq!(unsafe { bivp_solve(p, 0.0, 0.0, 1.0, -1.0, BivpPolicy::Boundary, &mut t) }, BivpStatus::InvalidInput);
    unsafe {
        bivp_trace_free(t);
        bivp_problem_free(p);
    }
}

#[test]
fn json_problems_and_errors() {
    let json = CString::new(r#"{"name": "zero", "interior": ["y >= -1"], "field": "0"}"#).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bivp_problem_from_json(json.as_ptr(), &mut p) }, BivpStatus::Ok);
    let mut class = BivpUniqueness::Unknown;
    assert_eq!(unsafe { bivp_uniqueness(p, 0.0, 0.5, &mut class) }, BivpStatus::Ok);
    assert_eq!(class, BivpUniqueness::Uniqueness);
    unsafe { bivp_problem_free(p) };

    let bad = CString::new(r#"{"name": "bad", "interior": ["x >= "], "field": "y"}"#).unwrap();
    assert_eq!(unsafe { bivp_problem_from_json(bad.as_ptr(), &mut p) }, BivpStatus::InvalidInput);
    assert!(last_error().contains("syntax error"));

    let id = CString::new("nope").unwrap();
    assert_eq!(unsafe { bivp_problem_from_corpus(id.as_ptr(), &mut p) }, BivpStatus::UnknownCorpus);
    assert_eq!(unsafe { bivp_problem_from_corpus(ptr::null(), &mut p) }, BivpStatus::NullArgument);
    assert_eq!(unsafe { bivp_classify(ptr::null(), 0.0, 0.0, &mut ptr::null_mut()) }, BivpStatus::NullArgument);
    unsafe {
        bivp_problem_free(ptr::null_mut());
        bivp_trace_free(ptr::null_mut());
        bivp_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { bivp_trace_len(ptr::null()) }, 0);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bivp.h")).unwrap();
    for name in [
        "bivp_last_error_message",
        "bivp_string_free",
        "bivp_theta",
        "bivp_problem_from_corpus",
        "bivp_problem_from_json",
        "bivp_problem_free",
        "bivp_classify",
        "bivp_uniqueness",
        "bivp_solve",
        "bivp_trace_len",
        "bivp_trace_point",
        "bivp_trace_terminal",
        "bivp_trace_free",
        "BIVP_STATUS_OUTSIDE_DOMAIN = 3",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"bivp.h\"\nint main(void) {\n  BivpProblem *p = 0;\n  BivpStatus s = bivp_problem_from_corpus(\"example1\", &p);\n  return s == BIVP_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let Ok(out) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler, skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
