//! C interface to `bootci`.
//!
//! Every function returns a [`BciStatus`]. On anything other than
//! `BCI_STATUS_OK` a message is available from [`bci_last_error`] on the
//! same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bootci::evaluation::{bradley_bounds, kl_bounds, kl_coverage};
use bootci::{Error, Functional, MethodId, ReplicationContext, ResampleSettings, RngStream, Sample, TieRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BciStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The method ran but could not produce a value for this sample.
    MethodFailure = 3,
    Panic = 4,
}

/// Opaque sample handle.
pub struct BciSample {
    inner: Sample,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BciStatus {
    match e {
        Error::Failure(_) => BciStatus::MethodFailure,
        _ => BciStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (BciStatus, String)>) -> BciStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BciStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BciStatus::Panic
        }
    }
}

fn fail(e: Error) -> (BciStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BciStatus, String) {
    (BciStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], (BciStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, (BciStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| (BciStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

fn store<T>(out: *mut T, value: T, what: &str) -> Result<(), (BciStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

/// Creates a one-column sample from `len` values.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` must be writable.
/// The handle must be released with [`bci_sample_free`].
#[no_mangle]
pub unsafe extern "C" fn bci_sample_new(values: *const f64, len: usize, out: *mut *mut BciSample) -> BciStatus {
    guard(|| {
        let v = slice(values, len, "values")?;
        let s = Sample::univariate(v.to_vec()).map_err(fail)?;
        store(out, Box::into_raw(Box::new(BciSample { inner: s })), "out")
    })
}

/// Creates a paired sample from two columns of `len` values each.
///
/// # Safety
/// `x` and `y` must each point to `len` readable doubles and `out` must be
/// writable. The handle must be released with [`bci_sample_free`].
#[no_mangle]
pub unsafe extern "C" fn bci_sample_new_paired(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut *mut BciSample,
) -> BciStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        let y = slice(y, len, "y")?;
        let rows = x.iter().zip(y).map(|(&a, &b)| [a, b]).collect();
        let s = Sample::bivariate(rows).map_err(fail)?;
        store(out, Box::into_raw(Box::new(BciSample { inner: s })), "out")
    })
}

/// Number of observations in the sample, 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bci_sample_len(sample: *const BciSample) -> usize {
    sample.as_ref().map_or(0, |s| s.inner.len())
}

/// Releases a sample. Null is ignored.
///
/// # Safety
/// `sample` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bci_sample_free(sample: *mut BciSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Evaluates a functional (`"mean"`, `"median"`, `"std"`, `"q05"`, `"q95"`, `"corr"`) on a sample.
///
/// # Safety
/// `sample` must be a live handle, `functional` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bci_estimate(sample: *const BciSample, functional: *const c_char, out: *mut f64) -> BciStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        let f: Functional = text(functional, "functional")?.parse().map_err(fail)?;
        store(out, f.evaluate(&s.inner).map_err(fail)?, "out")
    })
}

/// One-sided endpoint at level `alpha`: the true value lies below it with
/// probability about `alpha`.
///
/// `b_inner` is used by the double bootstrap and `b_inner_bt` by the
/// studentized bootstrap; other methods ignore them.
///
/// # Safety
/// `sample` must be a live handle, the strings NUL-terminated and `out`
/// writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bci_endpoint(
    sample: *const BciSample,
    functional: *const c_char,
    method: *const c_char,
    alpha: f64,
    b: usize,
    b_inner: usize,
    b_inner_bt: usize,
    seed: u64,
    out: *mut f64,
) -> BciStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        let f: Functional = text(functional, "functional")?.parse().map_err(fail)?;
        let m: MethodId = text(method, "method")?.parse().map_err(fail)?;
        let settings = ResampleSettings { b, b_inner, b_inner_bt, tie_rule: TieRule::default() };
        settings.validate().map_err(fail)?;
        let ctx = ReplicationContext::new(&s.inner, f, settings, RngStream::new(seed));
        store(out, ctx.endpoint(m, alpha).map_err(fail)?, "out")
    })
}

/// Kullback-Leibler divergence (bits) of observed coverage `p` from nominal `pi`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bci_kl_coverage(p: f64, pi: f64, out: *mut f64) -> BciStatus {
    guard(|| store(out, kl_coverage(p, pi).map_err(fail)?, "out"))
}

/// Coverage values whose divergence from `pi` equals `level`.
///
/// # Safety
/// `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bci_kl_bounds(pi: f64, level: f64, lower: *mut f64, upper: *mut f64) -> BciStatus {
    guard(|| {
        let (lo, hi) = kl_bounds(pi, level).map_err(fail)?;
        store(lower, lo, "lower")?;
        store(upper, hi, "upper")
    })
}

/// Bradley's robustness band around `pi` with multiplier `k`.
///
/// # Safety
/// `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bci_bradley_bounds(pi: f64, k: f64, lower: *mut f64, upper: *mut f64) -> BciStatus {
    guard(|| {
        let (lo, hi) = bradley_bounds(pi, k).map_err(fail)?;
        store(lower, lo, "lower")?;
        store(upper, hi, "upper")
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn bci_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bci_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
