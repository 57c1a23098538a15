//! C ABI over `bivp-core`.
//!
//! Every fallible call returns a [`BivpStatus`]. On failure the message is
//! kept per thread and read with [`bivp_last_error_message`]. Handles are
//! opaque and released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bivp_core::classifier::classify;
use bivp_core::config::Config;
use bivp_core::integrator::{euler_with, EulerOptions, Policy, Trace};
use bivp_core::normalize::to_origin_with;
use bivp_core::uniqueness::{uniqueness_membership, UniquenessClass};
use bivp_core::{corpus, Direction, Error, ProblemFile, ProblemSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BivpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    OutsideDomain = 3,
    Numeric = 4,
    UnknownCorpus = 5,
    IndexOutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BivpUniqueness {
    Uniqueness = 0,
    FormalOnly = 1,
    HiddenNonUniqueness = 2,
    NonUniqueness = 3,
    Unknown = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BivpPolicy {
    Interior = 0,
    Boundary = 1,
}

/// A parsed and validated problem.
pub struct BivpProblem {
    spec: ProblemSpec,
}

/// Euler nodes in global coordinates.
pub struct BivpTrace {
    points: Vec<(f64, f64)>,
    terminal: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: BivpStatus, msg: impl Into<String>) -> BivpStatus {
    set_error(msg.into());
    status
}

fn from_core(e: Error) -> BivpStatus {
    let status = match e {
        Error::OutsideDomain(..) => BivpStatus::OutsideDomain,
        Error::Numeric(_) | Error::Eval(_) => BivpStatus::Numeric,
        Error::UnknownCorpus(_) => BivpStatus::UnknownCorpus,
        _ => BivpStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> BivpStatus) -> BivpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(BivpStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, BivpStatus> {
    if s.is_null() {
        return Err(fail(BivpStatus::NullArgument, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(BivpStatus::InvalidInput, "string is not UTF-8"))
}

fn emit<T>(out: *mut *mut T, value: T) -> BivpStatus {
    unsafe { *out = Box::into_raw(Box::new(value)) };
    BivpStatus::Ok
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn bivp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bivp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The constant θ of the cusp example.
#[no_mangle]
pub extern "C" fn bivp_theta() -> c_double {
    corpus::theta()
}

/// # Safety
/// `id` must be a nul-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bivp_problem_from_corpus(id: *const c_char, out: *mut *mut BivpProblem) -> BivpStatus {
    guard(|| {
        if out.is_null() {
            return fail(BivpStatus::NullArgument, "null output pointer");
        }
        let id = match text(id) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match corpus::get(id) {
            Ok(e) => emit(out, BivpProblem { spec: e.problem }),
            Err(e) => from_core(e),
        }
    })
}

/// Parses a problem file in its JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bivp_problem_from_json(json: *const c_char, out: *mut *mut BivpProblem) -> BivpStatus {
    guard(|| {
        if out.is_null() {
            return fail(BivpStatus::NullArgument, "null output pointer");
        }
        let json = match text(json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match ProblemFile::from_json(json).and_then(|f| f.build()) {
            Ok(spec) => emit(out, BivpProblem { spec }),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `p` must come from a `bivp_problem_from_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bivp_problem_free(p: *mut BivpProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Case tag at `(x, y)` looking right, such as `B1[=,=]` or `unclassified`.
/// The string is freed with [`bivp_string_free`].
///
/// # Safety
/// `p` must be a live problem handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bivp_classify(p: *const BivpProblem, x: c_double, y: c_double, out: *mut *mut c_char) -> BivpStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(BivpStatus::NullArgument, "null argument");
        }
        let cfg = Config::default();
        match to_origin_with(&(*p).spec, (x, y), Direction::Right, 1.0) {
            Ok(np) => {
                let tag = classify(&np, &cfg.classifier).tag();
                *out = CString::new(tag).expect("tags are ASCII").into_raw();
                BivpStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Uniqueness membership at `(x, y)` with default settings.
///
/// # Safety
/// `p` must be a live problem handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bivp_uniqueness(
    p: *const BivpProblem,
    x: c_double,
    y: c_double,
    out: *mut BivpUniqueness,
) -> BivpStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(BivpStatus::NullArgument, "null argument");
        }
        match uniqueness_membership(&(*p).spec, (x, y), &Config::default()) {
            Ok(v) => {
                *out = match v.class {
                    UniquenessClass::Uniqueness => BivpUniqueness::Uniqueness,
                    UniquenessClass::FormalOnly => BivpUniqueness::FormalOnly,
                    UniquenessClass::HiddenNonUniqueness => BivpUniqueness::HiddenNonUniqueness,
                    UniquenessClass::NonUniqueness => BivpUniqueness::NonUniqueness,
                    UniquenessClass::Unknown => BivpUniqueness::Unknown,
                };
                BivpStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Euler polygon from `(x, y)` to the right over `span` with step `eps`.
///
/// # Safety
/// `p` must be a live problem handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bivp_solve(
    p: *const BivpProblem,
    x: c_double,
    y: c_double,
    span: c_double,
    eps: c_double,
    policy: BivpPolicy,
    out: *mut *mut BivpTrace,
) -> BivpStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(BivpStatus::NullArgument, "null argument");
        }
        let policy = match policy {
            BivpPolicy::Interior => Policy::Interior,
            BivpPolicy::Boundary => Policy::Boundary,
        };
        let trace: Trace = match to_origin_with(&(*p).spec, (x, y), Direction::Right, 1.0)
            .and_then(|np| euler_with(&np, span, eps, &EulerOptions::new(policy)))
        {
            Ok(t) => t,
            Err(e) => return from_core(e),
        };
        let points = (0..trace.len()).map(|i| trace.global(i)).collect();
        let terminal = CString::new(trace.terminal.as_str()).expect("ASCII");
        emit(out, BivpTrace { points, terminal })
    })
}

/// # Safety
/// `t` must be a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn bivp_trace_len(t: *const BivpTrace) -> usize {
    if t.is_null() {
        0
    } else {
        (*t).points.len()
    }
}

/// Node `i` of the trace.
///
/// # Safety
/// `t` must be a live trace handle, `x` and `y` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bivp_trace_point(t: *const BivpTrace, i: usize, x: *mut c_double, y: *mut c_double) -> BivpStatus {
    guard(|| {
        if t.is_null() || x.is_null() || y.is_null() {
            return fail(BivpStatus::NullArgument, "null argument");
        }
        match (&(*t).points).get(i) {
            Some(&(px, py)) => {
                *x = px;
                *y = py;
                BivpStatus::Ok
            }
            None => fail(BivpStatus::IndexOutOfRange, format!("node {i} of {}", (*t).points.len())),
        }
    })
}

/// Why integration stopped. Owned by the trace.
///
/// # Safety
/// `t` must be a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn bivp_trace_terminal(t: *const BivpTrace) -> *const c_char {
    if t.is_null() {
        ptr::null()
    } else {
        (*t).terminal.as_ptr()
    }
}

/// # Safety
/// `t` must come from [`bivp_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bivp_trace_free(t: *mut BivpTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}
