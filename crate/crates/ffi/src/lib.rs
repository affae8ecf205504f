//! C ABI over `torus-eig`.
//!
//! Every fallible call returns a [`TorusEigStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! read with [`torus_eig_last_error`]. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use torus_eig::bounds::{conjectured_sup, threshold_b, uniform_bound, upper_bound_u};
use torus_eig::flat_spectrum::enumerate_spectrum;
use torus_eig::galerkin::{bound_certificate, BoundCertificate, ConformalWeight};
use torus_eig::{Error, ExitCode, TorusParams};

/// Status codes. The nonzero values shared with the CLI have the same
/// meaning as its exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusEigStatus {
    Ok = 0,
    InvalidInput = 2,
    Io = 3,
    Numeric = 4,
    NullPointer = 5,
    Panic = 6,
}

impl From<ExitCode> for TorusEigStatus {
    fn from(c: ExitCode) -> Self {
        match c {
            ExitCode::Success => TorusEigStatus::Ok,
            ExitCode::InvalidInput => TorusEigStatus::InvalidInput,
            ExitCode::Io => TorusEigStatus::Io,
            ExitCode::Numeric => TorusEigStatus::Numeric,
        }
    }
}

/// Normalized flat spectrum `λ̄_0 = 0, λ̄_1, ...` of one torus.
pub struct TorusEigSpectrum {
    values: Vec<f64>,
}

/// Galerkin bound certificate for a conformal weight.
pub struct TorusEigCertificate {
    inner: BoundCertificate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TorusEigStatus, msg: impl Into<String>) -> TorusEigStatus {
    set_error(msg.into());
    status
}

/// Run `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<TorusEigStatus, Error>) -> TorusEigStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => fail(e.exit_code().into(), e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TorusEigStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

/// Store `v` through `out`, or report a null pointer.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, v: T) -> TorusEigStatus {
    if out.is_null() {
        return fail(TorusEigStatus::NullPointer, "output pointer is null");
    }
    out.write(v);
    TorusEigStatus::Ok
}

/// Message of the last failed call on this thread, or null after a
/// successful one. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn torus_eig_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `U(a, b)` for `(a, b)` in the fundamental region.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_upper_bound(a: f64, b: f64, out: *mut f64) -> TorusEigStatus {
    guard(|| {
        let p = TorusParams::new(a, b)?;
        Ok(write_out(out, upper_bound_u(&p)))
    })
}

/// Smallest `b` with `U(a, b) <= target`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_threshold(a: f64, target: f64, out: *mut f64) -> TorusEigStatus {
    guard(|| Ok(write_out(out, threshold_b(a, target)?)))
}

/// `8π²/√3 + 8π`.
#[no_mangle]
pub extern "C" fn torus_eig_conjectured_sup() -> f64 {
    conjectured_sup()
}

/// `16π²/√3`.
#[no_mangle]
pub extern "C" fn torus_eig_uniform_bound() -> f64 {
    uniform_bound()
}

/// Normalized eigenvalues `λ̄_0..=λ̄_count` of the flat torus, with
/// multiplicity.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_spectrum_new(
    a: f64,
    b: f64,
    count: usize,
    out: *mut *mut TorusEigSpectrum,
) -> TorusEigStatus {
    guard(|| {
        if out.is_null() {
            return Ok(fail(TorusEigStatus::NullPointer, "output pointer is null"));
        }
        let p = TorusParams::new(a, b)?;
        let area = p.flat_area();
        let values = enumerate_spectrum(&p, count)?
            .flattened(count + 1)
            .iter()
            .map(|l| l * area)
            .collect();
        Ok(write_out(out, Box::into_raw(Box::new(TorusEigSpectrum { values }))))
    })
}

/// Number of stored eigenvalues, `count + 1`; zero for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle from `torus_eig_spectrum_new`.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_spectrum_len(spectrum: *const TorusEigSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.values.len())
}

/// `λ̄_k`.
///
/// # Safety
/// `spectrum` must be null or a live handle; `out` must be null or
/// writable for one `double`.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_spectrum_get(
    spectrum: *const TorusEigSpectrum,
    k: usize,
    out: *mut f64,
) -> TorusEigStatus {
    guard(|| {
        let Some(s) = spectrum.as_ref() else {
            return Ok(fail(TorusEigStatus::NullPointer, "spectrum handle is null"));
        };
        match s.values.get(k) {
            Some(&v) => Ok(write_out(out, v)),
            None => Err(Error::OutOfRange(format!(
                "index {k} beyond {} stored eigenvalues",
                s.values.len()
            ))),
        }
    })
}

/// # Safety
/// `spectrum` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_spectrum_free(spectrum: *mut TorusEigSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Ritz `λ̄₁`, `λ̄₂` for the metric `ω(u, v)·g_flat` with `ω` given as an
/// expression in `u`, `v`, against `U(a, b)`.
///
/// # Safety
/// `weight` must be null or a NUL-terminated string; `out` must be null or
/// writable for one pointer.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_new(
    a: f64,
    b: f64,
    weight: *const c_char,
    cutoff: f64,
    out: *mut *mut TorusEigCertificate,
) -> TorusEigStatus {
    guard(|| {
        if out.is_null() || weight.is_null() {
            return Ok(fail(TorusEigStatus::NullPointer, "null argument"));
        }
        let src = CStr::from_ptr(weight)
            .to_str()
            .map_err(|_| Error::InvalidWeight("expression is not UTF-8".into()))?;
        let p = TorusParams::new(a, b)?;
        let inner = bound_certificate(&p, &ConformalWeight::from_expr(src)?, cutoff)?;
        Ok(write_out(out, Box::into_raw(Box::new(TorusEigCertificate { inner }))))
    })
}

/// Read one field of a certificate.
///
/// # Safety
/// `cert` must be null or a live handle; `out` must be null or writable.
unsafe fn certificate_field<T>(
    cert: *const TorusEigCertificate,
    out: *mut T,
    f: impl FnOnce(&BoundCertificate) -> T,
) -> TorusEigStatus {
    guard(|| match cert.as_ref() {
        Some(c) => Ok(write_out(out, f(&c.inner))),
        None => Ok(fail(TorusEigStatus::NullPointer, "certificate handle is null")),
    })
}

/// Normalized Ritz `λ̄₁`.
///
/// # Safety
/// `cert` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_lambda1(
    cert: *const TorusEigCertificate,
    out: *mut f64,
) -> TorusEigStatus {
    certificate_field(cert, out, |c| c.lambda1_bar)
}

/// Normalized Ritz `λ̄₂`.
///
/// # Safety
/// `cert` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_lambda2(
    cert: *const TorusEigCertificate,
    out: *mut f64,
) -> TorusEigStatus {
    certificate_field(cert, out, |c| c.lambda2_bar)
}

/// `U(a, b)`.
///
/// # Safety
/// `cert` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_bound(
    cert: *const TorusEigCertificate,
    out: *mut f64,
) -> TorusEigStatus {
    certificate_field(cert, out, |c| c.u)
}

/// Galerkin basis size.
///
/// # Safety
/// `cert` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_basis_size(
    cert: *const TorusEigCertificate,
    out: *mut usize,
) -> TorusEigStatus {
    certificate_field(cert, out, |c| c.basis_size)
}

/// Whether `λ̄₂ < U`.
///
/// # Safety
/// `cert` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_certified(
    cert: *const TorusEigCertificate,
    out: *mut bool,
) -> TorusEigStatus {
    certificate_field(cert, out, |c| c.certified)
}

/// # Safety
/// `cert` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn torus_eig_certificate_free(cert: *mut TorusEigCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> Option<String> {
        let p = torus_eig_last_error();
        (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }

    #[test]
    fn bound_and_errors() {
        let mut u = 0.0;
        assert_eq!(unsafe { torus_eig_upper_bound(0.0, 1.0, &mut u) }, TorusEigStatus::Ok);
        assert!((u - 8.0 * std::f64::consts::PI.powi(2)).abs() < 1e-10);
        assert!(last_error().is_none());
        assert_eq!(
            unsafe { torus_eig_upper_bound(0.0, -1.0, &mut u) },
            TorusEigStatus::InvalidInput
        );
        assert!(last_error().unwrap().contains("invalid torus parameters"));
        assert_eq!(
            unsafe { torus_eig_upper_bound(0.0, 1.0, ptr::null_mut()) },
            TorusEigStatus::NullPointer
        );
    }

    #[test]
    fn threshold_without_crossing_is_numeric() {
        let mut b = 0.0;
        assert_eq!(
            unsafe { torus_eig_threshold(0.25, 500.0, &mut b) },
            TorusEigStatus::Numeric
        );
        assert_eq!(
            unsafe { torus_eig_threshold(0.5, torus_eig_conjectured_sup(), &mut b) },
            TorusEigStatus::Ok
        );
        assert!(b > 1.70 && b < 1.76);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, TorusEigStatus::Panic);
        assert!(last_error().unwrap().contains("boom"));
    }
}
