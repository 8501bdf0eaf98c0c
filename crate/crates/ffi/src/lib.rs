//! C ABI over the `relfix` library.
//!
//! Instances and solutions are opaque handles created by this library and
//! released with the matching `_free` function. Every entry point returns a
//! [`RelfixStatus`]; on failure a description is available from
//! [`relfix_last_error`] on the same thread. Strings returned through `char**`
//! out-parameters are owned by the caller and released with
//! [`relfix_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relfix::io::{instance_json, InstanceFile};
use relfix::solver::{self, FixedPointResult};
use relfix::space::FiniteInstance;
use relfix::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelfixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    ParseError = 4,
    IoError = 5,
    /// The requested value does not exist, e.g. no fixed point was reached.
    NotFound = 6,
    Panic = 7,
}

/// A validated-shape finite instance.
pub struct RelfixInstance {
    inner: FiniteInstance,
}

/// Result of a certified existence solve.
pub struct RelfixSolution {
    inner: FixedPointResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> RelfixStatus {
    match e {
        Error::Io(_) => RelfixStatus::IoError,
        Error::Json(_) | Error::Expr(_) | Error::MapParse { .. } | Error::Csv(_) => RelfixStatus::ParseError,
        _ => RelfixStatus::InvalidInput,
    }
}

type FfiResult<T = ()> = Result<T, RelfixStatus>;

fn lift<T>(r: relfix::Result<T>) -> FfiResult<T> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn fail(status: RelfixStatus, msg: &str) -> RelfixStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> FfiResult) -> RelfixStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RelfixStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(RelfixStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(fail(RelfixStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(RelfixStatus::InvalidUtf8, "argument is not UTF-8"))
}

unsafe fn deref<'a, T>(p: *const T) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| fail(RelfixStatus::NullPointer, "null handle"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(fail(RelfixStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(RelfixStatus::InvalidInput, "string contains NUL"))
}

fn finite_from_text(text: &str) -> FfiResult<FiniteInstance> {
    match lift(InstanceFile::parse(text))? {
        InstanceFile::Finite(spec) => lift(spec.to_instance()),
        InstanceFile::Real(_) => Err(fail(RelfixStatus::InvalidInput, "only finite instances are supported")),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn relfix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses instance JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn relfix_instance_from_json(json: *const c_char, out: *mut *mut RelfixInstance) -> RelfixStatus {
    guard(|| {
        let inst = finite_from_text(read_str(json)?)?;
        write_out(out, Box::into_raw(Box::new(RelfixInstance { inner: inst })))
    })
}

/// Reads instance JSON from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn relfix_instance_load(path: *const c_char, out: *mut *mut RelfixInstance) -> RelfixStatus {
    guard(|| {
        let text = std::fs::read_to_string(read_str(path)?).map_err(|e| fail(RelfixStatus::IoError, &e.to_string()))?;
        let inst = finite_from_text(&text)?;
        write_out(out, Box::into_raw(Box::new(RelfixInstance { inner: inst })))
    })
}

/// Releases an instance; NULL is ignored.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relfix_instance_free(inst: *mut RelfixInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of points.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_instance_len(inst: *const RelfixInstance, out: *mut usize) -> RelfixStatus {
    guard(|| write_out(out, deref(inst)?.inner.len()))
}

/// Metric axioms and transitivity.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_instance_validate(inst: *const RelfixInstance, out: *mut bool) -> RelfixStatus {
    guard(|| write_out(out, deref(inst)?.inner.validate().is_valid()))
}

/// Serializes the instance back to JSON.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_instance_to_json(inst: *const RelfixInstance, out: *mut *mut c_char) -> RelfixStatus {
    guard(|| {
        let text = lift(instance_json(&deref(inst)?.inner))?;
        write_out(out, owned_string(text)?)
    })
}

/// Hypothesis report for theorem 3 or 5 as JSON.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_check_json(
    inst: *const RelfixInstance,
    theorem: u8,
    out: *mut *mut c_char,
) -> RelfixStatus {
    guard(|| {
        let report = lift(solver::check_hypotheses(&deref(inst)?.inner, theorem))?;
        let text = lift(relfix::fmt::to_json(&report).map_err(Error::from))?;
        write_out(out, owned_string(text)?)
    })
}

/// Certified Picard iteration from the instance start point.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_solve(inst: *const RelfixInstance, out: *mut *mut RelfixSolution) -> RelfixStatus {
    guard(|| {
        let result = lift(solver::solve_t3(&deref(inst)?.inner))?;
        write_out(out, Box::into_raw(Box::new(RelfixSolution { inner: result })))
    })
}

/// Releases a solution; NULL is ignored.
///
/// # Safety
/// `sol` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relfix_solution_free(sol: *mut RelfixSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// The limit point; `RELFIX_STATUS_NOT_FOUND` when the orbit cycled.
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_solution_fixed_point(sol: *const RelfixSolution, out: *mut usize) -> RelfixStatus {
    guard(|| match deref(sol)?.inner.xstar {
        Some(p) => write_out(out, p),
        None => Err(fail(RelfixStatus::NotFound, "no fixed point was reached")),
    })
}

/// Number of map applications performed.
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_solution_iterations(sol: *const RelfixSolution, out: *mut usize) -> RelfixStatus {
    guard(|| write_out(out, deref(sol)?.inner.iterations))
}

/// Whether every hypothesis of the certificate holds.
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_solution_certified(sol: *const RelfixSolution, out: *mut bool) -> RelfixStatus {
    guard(|| write_out(out, deref(sol)?.inner.certificate.overall))
}

/// Full result as JSON.
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_solution_to_json(sol: *const RelfixSolution, out: *mut *mut c_char) -> RelfixStatus {
    guard(|| {
        let text = lift(relfix::fmt::to_json(&deref(sol)?.inner).map_err(Error::from))?;
        write_out(out, owned_string(text)?)
    })
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relfix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `m k^n ε`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_step_bound(m: usize, k: f64, epsilon: f64, n: usize, out: *mut f64) -> RelfixStatus {
    guard(|| write_out(out, lift(solver::step_bound(m, k, epsilon, n))?))
}

/// `k^n ε / (1 - k)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_tail_bound(k: f64, epsilon: f64, n: usize, out: *mut f64) -> RelfixStatus {
    guard(|| write_out(out, lift(solver::tail_bound(k, epsilon, n))?))
}

/// Smallest `n0` with `m k^n0 < 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relfix_select_n0(m: usize, k: f64, out: *mut usize) -> RelfixStatus {
    guard(|| write_out(out, lift(solver::select_n0(m, k))?))
}
