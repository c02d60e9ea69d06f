//! C ABI over the `smcurve` library.
//!
//! Results are returned through opaque handles that the caller releases with
//! the matching `*_free` function. Every entry point returns an [`SmcStatus`];
//! on failure, [`smc_last_error`] yields a message for the calling thread.
//! Strings handed out by the library are released with [`smc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use smcurve::pipeline::{self, NormResult, TableRow};
use smcurve::Error;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmcStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    Collision = 3,
    Precision = 4,
    Calibration = 5,
    NullPointer = 6,
    Internal = 7,
    Panic = 8,
}

/// Which norm an accessor reads.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmcQuantity {
    /// Norm of t_D over the CM 0-cycle.
    Value = 0,
    /// Norm of the companion offset − t_D.
    Companion = 1,
}

/// Result of a norm computation.
pub struct SmcNorm(NormResult);

/// Rows of a norm table, ordered by |Δ|.
pub struct SmcTable(Vec<TableRow>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmcStatus {
    match e {
        Error::Argument(_) | Error::Parse(_) | Error::EtaCondition { .. } => {
            SmcStatus::InvalidArgument
        }
        Error::Domain(_) | Error::Infeasible(_) => SmcStatus::Domain,
        Error::Collision(_) => SmcStatus::Collision,
        Error::Precision(_) => SmcStatus::Precision,
        Error::Calibration(_) => SmcStatus::Calibration,
        Error::Internal(_) | Error::Io(_) => SmcStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SmcStatus, String)>) -> SmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside smcurve".into());
            SmcStatus::Panic
        }
    }
}

fn lib<T>(r: smcurve::Result<T>) -> Result<T, (SmcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), (SmcStatus, String)> {
    if p.is_null() {
        Err((SmcStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), (SmcStatus, String)> {
    let c = CString::new(s).map_err(|e| (SmcStatus::Internal, e.to_string()))?;
    // SAFETY: callers check `out` for null first.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library.
#[no_mangle]
pub unsafe extern "C" fn smc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Computes the norms at the CM points of discriminant `disc` on X*_D.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_compute(d: u64, disc: i64, out: *mut *mut SmcNorm) -> SmcStatus {
    guard(|| {
        non_null(out, "out")?;
        let r = lib(pipeline::cm_norm(d, disc))?;
        *out = Box::into_raw(Box::new(SmcNorm(r)));
        Ok(())
    })
}

/// Releases a norm handle.
///
/// # Safety
/// `h` must be null or a handle from [`smc_norm_compute`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_free(h: *mut SmcNorm) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Writes the factored norm as a newly allocated string, e.g. `2^2*5/3^4`.
///
/// # Safety
/// `h` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_string(
    h: *const SmcNorm,
    which: SmcQuantity,
    out: *mut *mut c_char,
) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(out, "out")?;
        let r = &(*h).0;
        let v = match which {
            SmcQuantity::Value => &r.value,
            SmcQuantity::Companion => &r.companion_value,
        };
        out_string(v.to_string(), out)
    })
}

/// Reads the exponent of the prime `p` in the factored norm (0 when absent).
///
/// # Safety
/// `h` must be a live handle and `exponent` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_exponent(
    h: *const SmcNorm,
    which: SmcQuantity,
    p: u64,
    exponent: *mut i64,
) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(exponent, "exponent")?;
        let r = &(*h).0;
        let v = match which {
            SmcQuantity::Value => &r.value,
            SmcQuantity::Companion => &r.companion_value,
        };
        *exponent = v.exponents().get(&p).copied().unwrap_or(0);
        Ok(())
    })
}

/// Sign of the value (+1 or −1) and whether it was determined.
///
/// # Safety
/// `h` must be a live handle; output pointers valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_sign(
    h: *const SmcNorm,
    sign: *mut i32,
    determined: *mut bool,
) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(sign, "sign")?;
        non_null(determined, "determined")?;
        let r = &(*h).0;
        *sign = r.value.sign() as i32;
        *determined = r.signed;
        Ok(())
    })
}

/// Number of CM points in the orbit and the archimedean residual.
///
/// # Safety
/// `h` must be a live handle; output pointers valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_degree(
    h: *const SmcNorm,
    degree: *mut u64,
    residual: *mut f64,
) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(degree, "degree")?;
        non_null(residual, "residual")?;
        let r = &(*h).0;
        let deg = smcurve::arith::q_to_i64(&r.degree_info)
            .and_then(|x| u64::try_from(x).ok())
            .ok_or_else(|| {
                (
                    SmcStatus::Internal,
                    format!("degree {} is not a count", r.degree_info),
                )
            })?;
        *degree = deg;
        *residual = r.arch_residual;
        Ok(())
    })
}

/// The full result as a JSON document.
///
/// # Safety
/// `h` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_norm_json(h: *const SmcNorm, out: *mut *mut c_char) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(out, "out")?;
        let s = serde_json::to_string(&(*h).0).map_err(|e| (SmcStatus::Internal, e.to_string()))?;
        out_string(s, out)
    })
}

/// Recomputes the normalization constant c_D; fails with
/// `SMC_STATUS_CALIBRATION` when it disagrees with the stored value.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_calibrate(d: u64, out: *mut *mut c_char) -> SmcStatus {
    guard(|| {
        non_null(out, "out")?;
        let c = lib(pipeline::calibrate(d))?;
        out_string(c.to_string(), out)
    })
}

/// Runs the built-in reference cases.
///
/// # Safety
/// Output pointers must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_selfcheck(passed: *mut u32, total: *mut u32) -> SmcStatus {
    guard(|| {
        non_null(passed, "passed")?;
        non_null(total, "total")?;
        let checks = pipeline::selfcheck();
        *passed = checks.iter().filter(|c| c.passed).count() as u32;
        *total = checks.len() as u32;
        Ok(())
    })
}

/// Computes the norm table for fundamental discriminants with |d| ≤ `max_abs_d`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_table_compute(
    d: u64,
    max_abs_d: i64,
    out: *mut *mut SmcTable,
) -> SmcStatus {
    guard(|| {
        non_null(out, "out")?;
        let rows = lib(pipeline::table(d, max_abs_d))?;
        *out = Box::into_raw(Box::new(SmcTable(rows)));
        Ok(())
    })
}

/// Releases a table handle.
///
/// # Safety
/// `h` must be null or a handle from [`smc_table_compute`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smc_table_free(h: *mut SmcTable) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of rows in a table.
///
/// # Safety
/// `h` must be a live handle and `len` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_table_len(h: *const SmcTable, len: *mut usize) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(len, "len")?;
        *len = (*h).0.len();
        Ok(())
    })
}

/// Discriminant of row `i` and a new handle to its result. A row whose
/// computation failed yields `SMC_STATUS_DOMAIN` with the row's flags as the
/// error message.
///
/// # Safety
/// `h` must be a live handle; output pointers valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_table_row(
    h: *const SmcTable,
    i: usize,
    disc: *mut i64,
    out: *mut *mut SmcNorm,
) -> SmcStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(disc, "disc")?;
        non_null(out, "out")?;
        let rows = &(*h).0;
        let row = rows
            .get(i)
            .ok_or_else(|| (SmcStatus::InvalidArgument, format!("row {i} out of range")))?;
        *disc = row.disc;
        let r = row
            .result
            .clone()
            .ok_or_else(|| (SmcStatus::Domain, row.flags.join("; ")))?;
        *out = Box::into_raw(Box::new(SmcNorm(r)));
        Ok(())
    })
}

/// Parses a factored rational such as `-2^3*7/5^2` and re-emits it in
/// canonical form; useful for comparing against stored values.
///
/// # Safety
/// `s` must be a NUL-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn smc_canonical_factored(
    s: *const c_char,
    out: *mut *mut c_char,
) -> SmcStatus {
    guard(|| {
        non_null(s, "s")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(s)
            .to_str()
            .map_err(|e| (SmcStatus::InvalidArgument, e.to_string()))?;
        let v: smcurve::arith::FactoredRational = lib(text.parse())?;
        out_string(v.to_string(), out)
    })
}
