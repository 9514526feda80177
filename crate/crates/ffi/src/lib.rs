//! C ABI over `qmarginal`.
//!
//! Instances live behind opaque handles created by the `*_parse` and
//! `*_generate` functions and released with the matching `*_free`. Every
//! function returns a [`QmStatus`]; on failure the message is available from
//! [`qm_last_error`] on the same thread until the next failing call. Strings
//! returned through `char **` belong to the caller and are released with
//! [`qm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qmarginal::cli::{cmd_check, load_config};
use qmarginal::hamiltonian::{min_eigenvalue, random_lh, LocalHamiltonianInstance, Promise};
use qmarginal::io::{self, AnyConsistency};
use qmarginal::oracle::Decision;
use qmarginal::reduction::{amplified, ReductionConfig};
use qmarginal::state::DensityMatrix;
use qmarginal::verifier::verifier_gap;
use qmarginal::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    NullOrInvalidArgument = 1,
    /// Input JSON did not match its schema.
    Schema = 2,
    /// Parameters or configuration were rejected.
    Config = 3,
    /// A numerical precondition failed (dimensions, spectra, positivity).
    Numerical = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// A promise-problem answer.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmDecision {
    Yes = 0,
    No = 1,
}

impl From<Decision> for QmDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Yes => QmDecision::Yes,
            Decision::No => QmDecision::No,
        }
    }
}

/// A Local Hamiltonian instance.
pub struct QmLocalHamiltonian(LocalHamiltonianInstance);

/// A consistency instance in trace or Pauli-coordinate form.
pub struct QmConsistency(AnyConsistency);

/// A global density matrix.
pub struct QmState(DensityMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Schema(_) | Error::Json(_) => QmStatus::Schema,
            Error::Config(_) | Error::InvalidThresholds { .. } => QmStatus::Config,
            _ => QmStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(what: &str) -> Failure {
    Failure(QmStatus::NullOrInvalidArgument, format!("{what} is null or invalid"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(what))
}

unsafe fn config(p: *const c_char) -> Result<ReductionConfig, Failure> {
    if p.is_null() {
        return Ok(load_config(None)?);
    }
    let t = text(p, "config")?;
    serde_json::from_str(t).map_err(|e| Failure(QmStatus::Schema, format!("config: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid(what));
    }
    out.write(v);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no nul bytes").into_raw()
}

/// Message of the last failing call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn qm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a Local Hamiltonian instance from JSON.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_lh_parse(json: *const c_char, out: *mut *mut QmLocalHamiltonian) -> QmStatus {
    guard(|| {
        let lh = io::parse_lh(text(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(QmLocalHamiltonian(lh))), "out")
    })
}

/// Random promise instance; `promise_yes` selects the YES side.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_lh_generate(
    n: usize,
    m: usize,
    k: usize,
    gap: f64,
    promise_yes: bool,
    seed: u64,
    out: *mut *mut QmLocalHamiltonian,
) -> QmStatus {
    guard(|| {
        let promise = if promise_yes { Promise::Yes } else { Promise::No };
        let lh = random_lh(&mut ChaCha8Rng::seed_from_u64(seed), n, m, k, gap, promise)?;
        write_out(out, Box::into_raw(Box::new(QmLocalHamiltonian(lh))), "out")
    })
}

/// Canonical JSON of an instance, released with [`qm_string_free`].
///
/// # Safety
/// `lh` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_lh_to_json(lh: *const QmLocalHamiltonian, out: *mut *mut c_char) -> QmStatus {
    guard(|| {
        let lh = handle(lh, "lh")?;
        let s = io::to_canonical_string(&io::lh_value(&lh.0));
        write_out(out, into_c_string(s), "out")
    })
}

/// Exact ground energy by dense diagonalization.
///
/// # Safety
/// `lh` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_lh_min_eigenvalue(lh: *const QmLocalHamiltonian, out: *mut f64) -> QmStatus {
    guard(|| {
        let v = min_eigenvalue(&handle(lh, "lh")?.0)?;
        write_out(out, v, "out")
    })
}

/// Majority answer of `runs` (odd) reduction runs. `config_json` may be null.
///
/// # Safety
/// `lh` must be a live handle; `config_json` null or a nul-terminated string;
/// `answer` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_lh_reduce(
    lh: *const QmLocalHamiltonian,
    config_json: *const c_char,
    runs: usize,
    seed: u64,
    answer: *mut QmDecision,
) -> QmStatus {
    guard(|| {
        let lh = handle(lh, "lh")?;
        let cfg = config(config_json)?;
        let amp = amplified(&lh.0, &cfg, runs, seed)?;
        write_out(answer, amp.answer.into(), "answer")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `lh` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qm_lh_free(lh: *mut QmLocalHamiltonian) {
    if !lh.is_null() {
        drop(Box::from_raw(lh));
    }
}

/// Parses a consistency instance in either form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_consistency_parse(json: *const c_char, out: *mut *mut QmConsistency) -> QmStatus {
    guard(|| {
        let inst = io::parse_any_consistency(text(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(QmConsistency(inst))), "out")
    })
}

/// Runs the consistency oracle. `distance` may be null.
///
/// # Safety
/// `inst` must be a live handle; `config_json` null or a nul-terminated
/// string; `decision` writable; `distance` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qm_consistency_check(
    inst: *const QmConsistency,
    config_json: *const c_char,
    decision: *mut QmDecision,
    distance: *mut f64,
) -> QmStatus {
    guard(|| {
        let inst = handle(inst, "inst")?;
        let cfg = config(config_json)?;
        let (report, d) = cmd_check(&inst.0, &cfg.oracle, false)?;
        write_out(decision, d.into(), "decision")?;
        if !distance.is_null() {
            distance.write(report["distance"].as_f64().unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// # Safety
/// `inst` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qm_consistency_free(inst: *mut QmConsistency) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Parses a state file `{"n", "matrix"}`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_parse(json: *const c_char, out: *mut *mut QmState) -> QmStatus {
    guard(|| {
        let sigma = io::parse_state(text(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(QmState(sigma))), "out")
    })
}

/// # Safety
/// `state` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qm_state_free(state: *mut QmState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Largest deviation of the witness's acceptance probability from its
/// target over all verifier rounds. Requires a trace-form instance.
///
/// # Safety
/// `inst` and `witness` must be live handles; `gap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_verifier_gap(
    inst: *const QmConsistency,
    witness: *const QmState,
    gap: *mut f64,
) -> QmStatus {
    guard(|| {
        let inst = match &handle(inst, "inst")?.0 {
            AnyConsistency::Trace(i) => i,
            AnyConsistency::Prime(_) => {
                return Err(Failure(QmStatus::Config, "verifier needs a trace-form instance".into()))
            }
        };
        let report = verifier_gap(inst, &handle(witness, "witness")?.0)?;
        write_out(gap, report.gap, "gap")
    })
}
