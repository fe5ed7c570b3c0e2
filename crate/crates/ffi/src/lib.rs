//! C interface to `quench-thermo`.
//!
//! Every entry point returns a [`QtStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`qt_last_error_message`]. Panics are caught at the boundary and reported
//! as [`QtStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quench_thermo::kernel::{thermal_rho_coupled, QuadraticKernel};
use quench_thermo::negativity::{critical_temperature, TcMethod};
use quench_thermo::spectra::{entropies, mutual_information, purity_coupled};
use quench_thermo::sweep::config_tc;
use quench_thermo::{mode_thermo, Error, ErrorClass, QuenchSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtStatus {
    Ok = 0,
    InvalidArgument = 1,
    DomainError = 2,
    NumericalError = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtTcMethod {
    Exact = 0,
    Approx = 1,
}

/// Opaque quench parameters.
pub struct QtQuench(QuenchSpec);

/// Opaque Gaussian kernel.
pub struct QtKernel(QuadraticKernel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QtStatus {
    match e.class() {
        ErrorClass::Config => QtStatus::InvalidArgument,
        ErrorClass::Domain => QtStatus::DomainError,
        ErrorClass::Numerical => QtStatus::NumericalError,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QtStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            QtStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QtStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn qt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qt_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(c) => c,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qt_quench_new(k0_i: f64, k0_f: f64, j_i: f64, j_f: f64, out: *mut *mut QtQuench) -> QtStatus {
    guard(|| {
        let spec = QuenchSpec::new(k0_i, k0_f, j_i, j_f)?;
        write(out, Box::into_raw(Box::new(QtQuench(spec))), "out")
    })
}

/// # Safety
/// `q` must be NULL or a handle from [`qt_quench_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_quench_free(q: *mut QtQuench) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Writes (omega1_i, omega1_f, omega2_i, omega2_f).
///
/// # Safety
/// `q` must be a live handle and `out` must point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn qt_quench_normal_modes(q: *const QtQuench, out: *mut f64) -> QtStatus {
    guard(|| {
        let (m1, m2) = deref(q, "quench")?.0.normal_modes()?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        for (i, v) in [m1.omega_i, m1.omega_f, m2.omega_i, m2.omega_f].into_iter().enumerate() {
            out.add(i).write(v);
        }
        Ok(())
    })
}

unsafe fn with_thermo<T>(
    q: *const QtQuench,
    beta: f64,
    f: impl FnOnce(&quench_thermo::ModeThermo, &quench_thermo::ModeThermo) -> quench_thermo::Result<T>,
) -> Result<T, Failure> {
    let (m1, m2) = deref(q, "quench")?.0.normal_modes()?;
    Ok(f(&mode_thermo(&m1, beta)?, &mode_thermo(&m2, beta)?)?)
}

/// Purity tr ρ² of the coupled thermal state at inverse temperature `beta`.
///
/// # Safety
/// `q` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_purity(q: *const QtQuench, beta: f64, out: *mut f64) -> QtStatus {
    guard(|| {
        let v = with_thermo(q, beta, |a, b| Ok(purity_coupled(a, b)))?;
        write(out, v, "out")
    })
}

/// Rényi entropy of order `alpha` (1 gives von Neumann).
///
/// # Safety
/// `q` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_entropy(q: *const QtQuench, beta: f64, alpha: f64, out: *mut f64) -> QtStatus {
    guard(|| {
        let v = with_thermo(q, beta, |a, b| entropies(a.xi, b.xi, alpha).map(|p| p.total))?;
        write(out, v, "out")
    })
}

/// # Safety
/// `q` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_mutual_information(q: *const QtQuench, beta: f64, out: *mut f64) -> QtStatus {
    guard(|| {
        let v = with_thermo(q, beta, |a, b| mutual_information(&thermal_rho_coupled(a, b)?))?;
        write(out, v, "out")
    })
}

/// Negativity-like quantity N of the coupled state.
///
/// # Safety
/// `q` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_negativity(q: *const QtQuench, beta: f64, out: *mut f64) -> QtStatus {
    guard(|| {
        let v = quench_thermo::negativity::negativity_at(&deref(q, "quench")?.0, beta)?;
        write(out, v, "out")
    })
}

/// Temperature above which N vanishes for this quench.
///
/// # Safety
/// `q` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_critical_temperature(q: *const QtQuench, out: *mut f64) -> QtStatus {
    guard(|| {
        let v = config_tc(&deref(q, "quench")?.0)?;
        write(out, v, "out")
    })
}

/// Critical temperature of two unquenched normal modes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_critical_temperature_const(omega1: f64, omega2: f64, method: QtTcMethod, out: *mut f64) -> QtStatus {
    guard(|| {
        let m = match method {
            QtTcMethod::Exact => TcMethod::Exact,
            QtTcMethod::Approx => TcMethod::Approx,
        };
        write(out, critical_temperature(omega1, omega2, m, 1e-12)?, "out")
    })
}

/// Thermal density kernel of the coupled state.
///
/// # Safety
/// `q` must be a live handle and `out` a valid pointer for one handle.
#[no_mangle]
pub unsafe extern "C" fn qt_thermal_kernel(q: *const QtQuench, beta: f64, out: *mut *mut QtKernel) -> QtStatus {
    guard(|| {
        let k = with_thermo(q, beta, thermal_rho_coupled)?;
        write(out, Box::into_raw(Box::new(QtKernel(k))), "out")
    })
}

/// # Safety
/// `k` must be a live kernel handle and `out` a valid pointer for one handle.
#[no_mangle]
pub unsafe extern "C" fn qt_kernel_partial_transpose(k: *const QtKernel, out: *mut *mut QtKernel) -> QtStatus {
    guard(|| {
        let pt = deref(k, "kernel")?.0.partial_transpose()?;
        write(out, Box::into_raw(Box::new(QtKernel(pt))), "out")
    })
}

/// # Safety
/// `k` must be a live kernel handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_kernel_trace(k: *const QtKernel, out: *mut f64) -> QtStatus {
    guard(|| {
        let t = deref(k, "kernel")?.0.trace()?;
        write(out, t, "out")
    })
}

/// JSON form `{"dim", "norm", "Q"}`; release with [`qt_string_free`].
///
/// # Safety
/// `k` must be a live kernel handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_kernel_to_json(k: *const QtKernel, out: *mut *mut c_char) -> QtStatus {
    guard(|| {
        let s = deref(k, "kernel")?.0.to_json();
        let c = CString::new(s).map_err(|e| Error::Numerical(e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// Parses a kernel from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_kernel_from_json(json: *const c_char, out: *mut *mut QtKernel) -> QtStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| Error::Config(e.to_string()))?;
        let k = QuadraticKernel::from_json(s)?;
        write(out, Box::into_raw(Box::new(QtKernel(k))), "out")
    })
}

/// # Safety
/// `k` must be NULL or a kernel handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_kernel_free(k: *mut QtKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
