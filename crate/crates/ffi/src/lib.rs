//! C interface to `facloc`.
//!
//! Instances are opaque heap handles created by `facloc_instance_*` and
//! released with `facloc_instance_free`. Every fallible call returns an
//! `FlStatus`; on failure `facloc_last_error` describes the problem. Strings
//! handed out by the library (JSON documents, rationals as `p/q`) are owned
//! by the caller and must be released with `facloc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use facloc::objectives::optimum;
use facloc::verification::{check_sp_deterministic, check_sp_in_expectation, measure_ratio, DeviationSet};
use facloc::{eval_cost, parse_instance, Error, Instance, Mechanism, MechanismSpec, ObjectiveKind, Rational};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Malformed = 3,
    EmptyProfile = 4,
    OutlierBudget = 5,
    Infeasible = 6,
    IndexOutOfRange = 7,
    PhantomCount = 8,
    OddProfile = 9,
    GammaOutOfRange = 10,
    MissingPrediction = 11,
    TooLarge = 12,
    InvalidParameters = 13,
    NotDeterministic = 14,
    Panic = 15,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlObjective {
    Utilitarian = 0,
    Egalitarian = 1,
}

impl From<FlObjective> for ObjectiveKind {
    fn from(o: FlObjective) -> Self {
        match o {
            FlObjective::Utilitarian => ObjectiveKind::Utilitarian,
            FlObjective::Egalitarian => ObjectiveKind::Egalitarian,
        }
    }
}

/// Opaque instance handle.
pub struct FlInstance {
    inner: Instance,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Malformed(_) => FlStatus::Malformed,
            Error::EmptyProfile => FlStatus::EmptyProfile,
            Error::OutlierBudget { .. } => FlStatus::OutlierBudget,
            Error::Infeasible { .. } => FlStatus::Infeasible,
            Error::IndexOutOfRange { .. } => FlStatus::IndexOutOfRange,
            Error::PhantomCount { .. } => FlStatus::PhantomCount,
            Error::OddProfile { .. } => FlStatus::OddProfile,
            Error::GammaOutOfRange { .. } => FlStatus::GammaOutOfRange,
            Error::MissingPrediction => FlStatus::MissingPrediction,
            Error::TooLarge { .. } => FlStatus::TooLarge,
            Error::InvalidParameters(_) => FlStatus::InvalidParameters,
            Error::NotDeterministic => FlStatus::NotDeterministic,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

/// Runs `f`, records any error and converts it to a status.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FlStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(FlStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn read_instance<'a>(p: *const FlInstance) -> FfiResult<&'a Instance> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("instance"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|e| Failure(FlStatus::Malformed, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> FfiResult<String> {
    serde_json::to_string(v).map_err(|e| Failure(FlStatus::Malformed, e.to_string()))
}

unsafe fn store_instance(out: *mut *mut FlInstance, inner: Instance) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(FlInstance { inner }));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn facloc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an instance document: `{"locations": [...], "z": k, "prediction": p}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_from_json(json: *const c_char, out: *mut *mut FlInstance) -> FlStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        store_instance(out, parse_instance(text)?)
    })
}

/// Builds an instance from `n` fractions `nums[i] / dens[i]`.
///
/// # Safety
/// `nums` and `dens` must point to `n` values each; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_from_fractions(
    nums: *const i64,
    dens: *const i64,
    n: usize,
    z: usize,
    out: *mut *mut FlInstance,
) -> FlStatus {
    guard(|| {
        if n > 0 && (nums.is_null() || dens.is_null()) {
            return Err(null("nums/dens"));
        }
        let (nums, dens) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(nums, n), std::slice::from_raw_parts(dens, n))
        };
        let mut locations = Vec::with_capacity(n);
        for (&p, &d) in nums.iter().zip(dens) {
            if d == 0 || d == i64::MIN || p == i64::MIN {
                return Err(Failure(FlStatus::Malformed, format!("bad fraction {p}/{d}")));
            }
            locations.push(Rational::new(p, d));
        }
        store_instance(out, Instance::new(locations, z)?)
    })
}

/// # Safety
/// `instance` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_free(instance: *mut FlInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of agents, 0 for NULL.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_n(instance: *const FlInstance) -> usize {
    instance.as_ref().map_or(0, |h| h.inner.n())
}

/// Outlier budget, 0 for NULL.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_z(instance: *const FlInstance) -> usize {
    instance.as_ref().map_or(0, |h| h.inner.z())
}

/// Sets the predicted location (`"p/q"` or decimal); NULL clears it.
///
/// # Safety
/// `instance` must be a live handle; `value` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_set_prediction(instance: *mut FlInstance, value: *const c_char) -> FlStatus {
    guard(|| {
        let h = instance.as_mut().ok_or_else(|| null("instance"))?;
        let prediction = if value.is_null() { None } else { Some(read_str(value, "value")?.parse::<Rational>()?) };
        h.inner = h.inner.clone().with_prediction(prediction);
        Ok(())
    })
}

/// Optimal solution as JSON (`location`, `cost`, `window`, `alternates`).
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn facloc_solve(
    instance: *const FlInstance,
    objective: FlObjective,
    out: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        let inst = read_instance(instance)?;
        write_string(out, to_json(&optimum(inst, objective.into()))?)
    })
}

/// Outlier-adjusted cost at `y`, written as a `p/q` string.
///
/// # Safety
/// `instance` must be a live handle, `y` a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn facloc_eval_cost(
    instance: *const FlInstance,
    y: *const c_char,
    objective: FlObjective,
    out: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        let inst = read_instance(instance)?;
        let y: Rational = read_str(y, "y")?.parse()?;
        write_string(out, eval_cost(inst, &y, objective.into()).cost.to_string())
    })
}

fn parse_mech(s: &str) -> FfiResult<MechanismSpec> {
    Ok(s.parse::<MechanismSpec>()?)
}

/// Mechanism outcome as JSON: a `p/q` string, `"inf"`/`"-inf"`, or a list of
/// `[location, probability]` pairs for lotteries. `mech` takes the short form
/// (`left_z`, `kth:3`, `in_range:1`, ...) or a JSON tag.
///
/// # Safety
/// Pointers must be valid as for [`facloc_solve`]; `mech` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn facloc_run(instance: *const FlInstance, mech: *const c_char, out: *mut *mut c_char) -> FlStatus {
    guard(|| {
        let inst = read_instance(instance)?;
        let spec = parse_mech(read_str(mech, "mech")?)?;
        write_string(out, to_json(&spec.outcome(inst)?)?)
    })
}

/// Ratio report as JSON (`mechanism_cost`, `opt_cost`, `ratio`, `bound`, ...).
///
/// # Safety
/// As for [`facloc_run`].
#[no_mangle]
pub unsafe extern "C" fn facloc_measure_ratio(
    instance: *const FlInstance,
    mech: *const c_char,
    objective: FlObjective,
    out: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        let inst = read_instance(instance)?;
        let spec = parse_mech(read_str(mech, "mech")?)?;
        write_string(out, to_json(&measure_ratio(&spec, inst, objective.into())?)?)
    })
}

/// Searches the default deviation grid. `*found` is set when a profitable
/// misreport exists and `out` receives the certificate JSON (`null` if none).
/// Randomized mechanisms are compared in expectation.
///
/// # Safety
/// As for [`facloc_run`]; `found` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn facloc_check_sp(
    instance: *const FlInstance,
    mech: *const c_char,
    found: *mut bool,
    out: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        let inst = read_instance(instance)?;
        let spec = parse_mech(read_str(mech, "mech")?)?;
        if found.is_null() {
            return Err(null("found"));
        }
        let cert = if spec.is_randomized() {
            check_sp_in_expectation(&spec, inst, &DeviationSet::DefaultGrid)?
        } else {
            check_sp_deterministic(&spec, inst, &DeviationSet::DefaultGrid)?
        };
        *found = cert.is_some();
        write_string(out, to_json(&cert)?)
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string from this library, released only once.
#[no_mangle]
pub unsafe extern "C" fn facloc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn facloc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
