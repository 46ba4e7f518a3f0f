//! C interface to the `platesize` library.
//!
//! Every function returns a [`PsStatus`]. On failure the message is kept in
//! thread-local storage and can be read with [`ps_last_error_message`].
//! Strings returned through `char **` out-parameters are owned by the caller
//! and must be released with [`ps_string_free`]. Handles are released with
//! their matching `*_free` function.

use platesize::config::ExperimentConfig;
use platesize::experiment::{run_command, Command};
use platesize::geometry::{geometric_constants, k_of_rho, GeometricConstants};
use platesize::tensor::{
    classify_dichotomy, dichotomy_value, ellipticity_gamma, sample_grid, DichotomyClass,
    SymbolQuartic, TensorField, DICHOTOMY_ZERO_TOL,
};
use platesize::{Error, Vec2};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A mathematical hypothesis failed (ellipticity, dichotomy, jump sign, geometry).
    Hypothesis = 3,
    /// Mesh generation or the linear solve failed, or the load is incompatible.
    Solver = 4,
    /// Invalid configuration, expression or missing calibration.
    Config = 5,
    /// Any other library error.
    Other = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> PsStatus {
    match e.exit_code() {
        2 => PsStatus::Hypothesis,
        3 => PsStatus::Solver,
        4 => PsStatus::Config,
        _ => PsStatus::Other,
    }
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("panic: {msg}"));
            PsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(PsStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    non_null(p, name)?;
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(PsStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior NULs removed")
        .into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Dichotomy value `|det S|/a0` of the quartic with coefficients `quartic[0..5]`.
///
/// # Safety
/// `quartic` must point to 5 doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_dichotomy_value(quartic: *const f64, out: *mut f64) -> PsStatus {
    guard(|| {
        non_null(quartic, "quartic")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null; the caller guarantees 5 readable values.
        let a = unsafe { std::slice::from_raw_parts(quartic, 5) };
        let q = SymbolQuartic {
            a0: a[0],
            a1: a[1],
            a2: a[2],
            a3: a[3],
            a4: a[4],
        };
        let v = dichotomy_value(&q)?;
        // SAFETY: checked non-null.
        unsafe { *out = v };
        Ok(())
    })
}

/// Geometric constants of the chain construction.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsGeometricConstants {
    pub m0: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub s: f64,
    pub chi: f64,
    pub h0: f64,
    pub tau_chain: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
    pub rho_bar: f64,
}

impl From<GeometricConstants> for PsGeometricConstants {
    fn from(c: GeometricConstants) -> Self {
        PsGeometricConstants {
            m0: c.m0,
            theta0: c.theta0,
            theta1: c.theta1,
            s: c.s,
            chi: c.chi,
            h0: c.h0,
            tau_chain: c.tau_chain,
            rho1: c.rho1,
            rho2: c.rho2,
            rho3: c.rho3,
            rho4: c.rho4,
            rho_bar: c.rho_bar,
        }
    }
}

/// # Safety
/// `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_geometric_constants(
    m0: f64,
    h0: f64,
    out: *mut PsGeometricConstants,
) -> PsStatus {
    guard(|| {
        non_null(out, "out")?;
        let c = geometric_constants(m0, h0)?;
        // SAFETY: checked non-null.
        unsafe { *out = c.into() };
        Ok(())
    })
}

/// Chain length `k` and radius `r_k` for the dimensionless radius `rho`.
///
/// # Safety
/// `k` and `r_k` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_k_of_rho(
    rho: f64,
    m0: f64,
    h0: f64,
    k: *mut usize,
    r_k: *mut f64,
) -> PsStatus {
    guard(|| {
        non_null(k, "k")?;
        non_null(r_k, "r_k")?;
        let c = geometric_constants(m0, h0)?;
        let res = k_of_rho(rho, &c)?;
        // SAFETY: checked non-null.
        unsafe {
            *k = res.k;
            *r_k = res.r_k;
        }
        Ok(())
    })
}

/// Opaque elasticity tensor field.
pub struct PsTensorField(TensorField);

/// Opaque experiment configuration.
pub struct PsExperiment(ExperimentConfig);

fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    non_null(out, "out")?;
    // SAFETY: checked non-null.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Isotropic tensor with Lamé moduli `lambda`, `mu`.
///
/// # Safety
/// `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_tensor_isotropic(
    lambda: f64,
    mu: f64,
    out: *mut *mut PsTensorField,
) -> PsStatus {
    guard(|| emit(out, PsTensorField(TensorField::isotropic(lambda, mu))))
}

/// Constant tensor from `(C1111, C1122, C1112, C1222, C1212, C2222)`.
///
/// # Safety
/// `coefficients` must point to 6 doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_tensor_constant(
    coefficients: *const f64,
    out: *mut *mut PsTensorField,
) -> PsStatus {
    guard(|| {
        non_null(coefficients, "coefficients")?;
        // SAFETY: checked non-null; the caller guarantees 6 readable values.
        let c = unsafe { std::slice::from_raw_parts(coefficients, 6) };
        emit(
            out,
            PsTensorField(TensorField::orthotropic(c[0], c[1], c[2], c[3], c[4], c[5])),
        )
    })
}

/// Tensor whose six components are expressions in `x1`, `x2`.
///
/// # Safety
/// `expressions` must point to 6 NUL-terminated strings and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_tensor_from_expressions(
    expressions: *const *const c_char,
    out: *mut *mut PsTensorField,
) -> PsStatus {
    guard(|| {
        non_null(expressions, "expressions")?;
        // SAFETY: checked non-null; the caller guarantees 6 pointers.
        let ptrs = unsafe { std::slice::from_raw_parts(expressions, 6) };
        let mut parts = Vec::with_capacity(6);
        for p in ptrs {
            // SAFETY: forwarded caller guarantee.
            parts.push(unsafe { read_str(*p, "expression") }?);
        }
        let t = TensorField::from_expressions([
            parts[0], parts[1], parts[2], parts[3], parts[4], parts[5],
        ])?;
        emit(out, PsTensorField(t))
    })
}

/// # Safety
/// `t` must come from a `ps_tensor_*` constructor and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_tensor_free(t: *mut PsTensorField) {
    if !t.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(t) });
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsDichotomyClass {
    PositiveEverywhere = 0,
    IdenticallyZero = 1,
    Violated = 2,
}

/// Dichotomy classification over a sampling grid.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsDichotomy {
    pub classification: PsDichotomyClass,
    /// Smallest sampled dichotomy value.
    pub mu: f64,
    /// Ellipticity constant over the same grid.
    pub gamma: f64,
}

/// Classifies `t` on an `n × n` grid over `[xmin, xmax] × [ymin, ymax]`.
///
/// # Safety
/// `t` must be a live handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_tensor_classify(
    t: *const PsTensorField,
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
    n: usize,
    out: *mut PsDichotomy,
) -> PsStatus {
    guard(|| {
        non_null(t, "tensor")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null, live handle per contract.
        let t = unsafe { &(*t).0 };
        let samples = sample_grid(Vec2::new(xmin, ymin), Vec2::new(xmax, ymax), n.max(1));
        let gamma = ellipticity_gamma(t, &samples)?;
        let r = classify_dichotomy(t, &samples, DICHOTOMY_ZERO_TOL)?;
        let classification = match r.classification {
            DichotomyClass::PositiveEverywhere => PsDichotomyClass::PositiveEverywhere,
            DichotomyClass::IdenticallyZero => PsDichotomyClass::IdenticallyZero,
            DichotomyClass::Violated => PsDichotomyClass::Violated,
        };
        // SAFETY: checked non-null.
        unsafe {
            *out = PsDichotomy {
                classification,
                mu: r.mu,
                gamma,
            }
        };
        Ok(())
    })
}

/// Parses a JSON experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ps_experiment_from_json(
    json: *const c_char,
    out: *mut *mut PsExperiment,
) -> PsStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantee.
        let src = unsafe { read_str(json, "json") }?;
        emit(out, PsExperiment(ExperimentConfig::from_json(src)?))
    })
}

/// # Safety
/// `e` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_experiment_set_seed(e: *mut PsExperiment, seed: u64) -> PsStatus {
    guard(|| {
        non_null(e, "experiment")?;
        // SAFETY: checked non-null, live handle per contract.
        unsafe { (*e).0.seed = seed };
        Ok(())
    })
}

/// Runs `command` (`check-tensor`, `solve`, `scan`, `calibrate`, `bounds`
/// or `all`) writing into `out_dir`. The JSON summary is returned in
/// `summary` when it is not null.
///
/// # Safety
/// `e` must be a live handle; strings must be NUL-terminated; `summary` may be null.
#[no_mangle]
pub unsafe extern "C" fn ps_experiment_run(
    e: *const PsExperiment,
    command: *const c_char,
    out_dir: *const c_char,
    summary: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        non_null(e, "experiment")?;
        // SAFETY: forwarded caller guarantees.
        let (cmd, dir) = unsafe { (read_str(command, "command")?, read_str(out_dir, "out_dir")?) };
        // SAFETY: checked non-null, live handle per contract.
        let cfg = unsafe { &(*e).0 };
        let value = run_command(Command::parse(cmd)?, cfg, Path::new(dir))?;
        if !summary.is_null() {
            // SAFETY: checked non-null.
            unsafe { *summary = to_c_string(value.to_string()) };
        }
        Ok(())
    })
}

/// # Safety
/// `e` must come from `ps_experiment_from_json` and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_experiment_free(e: *mut PsExperiment) {
    if !e.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(e) });
    }
}

/// Parses `config_json` and runs `command` in one call.
///
/// # Safety
/// Strings must be NUL-terminated; `summary` may be null.
#[no_mangle]
pub unsafe extern "C" fn ps_run_json(
    config_json: *const c_char,
    command: *const c_char,
    out_dir: *const c_char,
    summary: *mut *mut c_char,
) -> PsStatus {
    let mut handle: *mut PsExperiment = ptr::null_mut();
    // SAFETY: forwarded caller guarantees.
    let status = unsafe { ps_experiment_from_json(config_json, &mut handle) };
    if status != PsStatus::Ok {
        return status;
    }
    // SAFETY: `handle` was just created and is freed below.
    let status = unsafe { ps_experiment_run(handle, command, out_dir, summary) };
    // SAFETY: as above.
    unsafe { ps_experiment_free(handle) };
    status
}
