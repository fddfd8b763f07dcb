//! C ABI over `shl`.
//!
//! Objects are opaque handles created by `*_new`/`*_build` and released by
//! the matching `*_free`. Every fallible call returns an [`ShlStatus`]; on a
//! non-zero status the message is available from [`shl_last_error_message`]
//! on the same thread. Strings returned through `char **` are owned by the
//! caller and must be released with [`shl_string_free`].

use shl::config::RunConfig;
use shl::demo::run_demo;
use shl::elliptic::{build_singular_profile, ShootingOptions, SingularProfile};
use shl::nonlinearity::{classify, find_beta, NonlinearitySpec};
use shl::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownSpec = 3,
    Domain = 4,
    Accuracy = 5,
    SearchFailure = 6,
    Construction = 7,
    StepFailure = 8,
    NumericalFailure = 9,
    Config = 10,
    Io = 11,
    Panic = 99,
}

/// Catalog nonlinearity.
pub struct ShlSpec(NonlinearitySpec);

/// Singular stationary profile with dense output.
pub struct ShlProfile(SingularProfile);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ShlStatus {
    match e.root() {
        Error::Domain(_) => ShlStatus::Domain,
        Error::Accuracy(_) => ShlStatus::Accuracy,
        Error::SearchFailure(_) => ShlStatus::SearchFailure,
        Error::Construction(_) => ShlStatus::Construction,
        Error::StepFailure { .. } => ShlStatus::StepFailure,
        Error::NumericalFailure(_) => ShlStatus::NumericalFailure,
        Error::UnknownSpec(_) => ShlStatus::UnknownSpec,
        Error::Config(_) => ShlStatus::Config,
        Error::Io(_) => ShlStatus::Io,
        Error::Stage { .. } => unreachable!("root skips stage wrappers"),
    }
}

struct Fail(ShlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> ShlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ShlStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside shl");
            ShlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(ShlStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(ShlStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(ShlStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(ShlStatus::NullPointer, format!("{name} is null")))
}

fn owned_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s).map(CString::into_raw).map_err(|_| Fail(ShlStatus::Domain, "interior NUL in output".into()))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Fail> {
    serde_json::to_string(v).map_err(|e| Fail(ShlStatus::Io, e.to_string()))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn shl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a catalog key such as `smoothed:B=2` or `power_exp:q=2,r=0`.
///
/// # Safety
/// `key` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_new(key: *const c_char, out: *mut *mut ShlSpec) -> ShlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let spec = NonlinearitySpec::parse(str_arg(key, "key")?)?;
        *out = Box::into_raw(Box::new(ShlSpec(spec)));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from [`shl_spec_new`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_free(spec: *mut ShlSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// f(s) and its derivatives for `order` in 0..=2.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_evaluate(spec: *const ShlSpec, s: f64, order: u8, out: *mut f64) -> ShlStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        *out_arg(out, "out")? = spec.0.evaluate(s, order)?;
        Ok(())
    })
}

/// F(s) = ∫_s^∞ dσ/f(σ).
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_big_f(spec: *const ShlSpec, s: f64, out: *mut f64) -> ShlStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        *out_arg(out, "out")? = spec.0.eval_big_f(s)?;
        Ok(())
    })
}

/// Inverse of F.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_big_f_inv(spec: *const ShlSpec, y: f64, out: *mut f64) -> ShlStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        *out_arg(out, "out")? = spec.0.eval_big_f_inv(y)?;
        Ok(())
    })
}

/// Smallest β from which the supersolution conditions hold.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_beta(spec: *const ShlSpec, out: *mut f64) -> ShlStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        *out_arg(out, "out")? = find_beta(&spec.0)?;
        Ok(())
    })
}

/// Hypothesis report as JSON. Free the result with [`shl_string_free`].
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_spec_classify_json(spec: *const ShlSpec, out: *mut *mut c_char) -> ShlStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = owned_string(to_json(&classify(&spec.0))?)?;
        Ok(())
    })
}

/// Shoots the singular profile. Non-positive `r_seed` or `ode_tol` select
/// the defaults (10⁻⁶ and 10⁻⁹).
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_profile_build(
    spec: *const ShlSpec,
    r_seed: f64,
    ode_tol: f64,
    out: *mut *mut ShlProfile,
) -> ShlStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let mut opts = ShootingOptions::default();
        if r_seed > 0.0 {
            opts.r_seed = r_seed;
        }
        if ode_tol > 0.0 {
            opts.ode_tol = ode_tol;
        }
        let prof = build_singular_profile(&spec.0, &opts)?;
        *out = Box::into_raw(Box::new(ShlProfile(prof)));
        Ok(())
    })
}

/// # Safety
/// `profile` must come from [`shl_profile_build`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn shl_profile_free(profile: *mut ShlProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Wall radius R with U(R) = 0.
///
/// # Safety
/// `profile` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_profile_radius(profile: *const ShlProfile, out: *mut f64) -> ShlStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        *out_arg(out, "out")? = p.0.radius;
        Ok(())
    })
}

/// U(r) and dU/dr for r in [r_seed, R]. Either output may be null.
///
/// # Safety
/// `profile` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_profile_eval(profile: *const ShlProfile, r: f64, u: *mut f64, du: *mut f64) -> ShlStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        let (a, b) = p.0.eval(r)?;
        if let Some(u) = u.as_mut() {
            *u = a;
        }
        if let Some(du) = du.as_mut() {
            *du = b;
        }
        Ok(())
    })
}

/// Runs the two-solution pipeline and returns its report as JSON.
/// `config` is the text of a run configuration file; null means defaults.
///
/// # Safety
/// `config` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_demo_run_json(config: *const c_char, out: *mut *mut c_char) -> ShlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = if config.is_null() { RunConfig::default() } else { RunConfig::parse(str_arg(config, "config")?)? };
        let run = run_demo(&cfg.demo)?;
        *out = owned_string(to_json(&run.report)?)?;
        Ok(())
    })
}
