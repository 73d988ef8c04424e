//! C ABI over `degenlab`.
//!
//! Every function returns an `int` status (`DL_OK` on success) and writes results
//! through out-pointers. Parameter sets live behind an opaque `DlParams` handle.
//! The message of the last failure on the calling thread is available from
//! `dl_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use degenlab::geometry::{distance_d, DegeneracyParams, Point, Region};
use degenlab::heat::{crossing_mass, default_domain, evolve_kernel};
use degenlab::sde::{hitting_oracle, simulate_hitting, HittingExperiment};
use degenlab::spectral::{poincare_constant, Conductance, Resolution};
use degenlab::Error;

pub const DL_OK: c_int = 0;
pub const DL_ERR_NULL: c_int = 1;
pub const DL_ERR_INVALID: c_int = 2;
pub const DL_ERR_DIMENSION: c_int = 3;
/// Non-convergence, censoring overflow or quadrature failure.
pub const DL_ERR_NUMERICAL: c_int = 4;
pub const DL_ERR_PANIC: c_int = 5;

/// Opaque parameter set.
pub struct DlParams(DegeneracyParams);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code(e: &Error) -> c_int {
    match e {
        Error::Invalid(_) | Error::Io(_) => DL_ERR_INVALID,
        Error::Dimension(_) => DL_ERR_DIMENSION,
        _ => DL_ERR_NUMERICAL,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), c_int>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DL_OK,
        Ok(Err(c)) => c,
        Err(_) => {
            set_error("internal panic".into());
            DL_ERR_PANIC
        }
    }
}

fn lift<T>(r: degenlab::Result<T>) -> Result<T, c_int> {
    r.map_err(|e| {
        set_error(e.to_string());
        code(&e)
    })
}

fn null(what: &str) -> c_int {
    set_error(format!("null pointer: {what}"));
    DL_ERR_NULL
}

unsafe fn params<'a>(p: *const DlParams) -> Result<&'a DegeneracyParams, c_int> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("params"))
}

unsafe fn point(p: &DegeneracyParams, x: *const f64, len: usize) -> Result<Point, c_int> {
    if x.is_null() {
        return Err(null("point"));
    }
    let v = std::slice::from_raw_parts(x, len);
    lift(Point::from_flat(p, v))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), c_int> {
    if out.is_null() {
        return Err(null("output"));
    }
    *out = v;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn dl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a parameter set; free it with `dl_params_free`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_params_new(n: usize, m: usize, d1: f64, d1p: f64, d2: f64, d2p: f64, out: *mut *mut DlParams) -> c_int {
    guard(|| {
        let p = lift(DegeneracyParams::new(n, m, d1, d1p, d2, d2p))?;
        write(out, Box::into_raw(Box::new(DlParams(p))))
    })
}

/// # Safety
/// `p` must come from `dl_params_new` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dl_params_free(p: *mut DlParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Quasi-distance between two points of `n + m` coordinates each.
///
/// # Safety
/// `x` and `y` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_distance(p: *const DlParams, x: *const f64, y: *const f64, len: usize, out: *mut f64) -> c_int {
    guard(|| {
        let p = params(p)?;
        let (x, y) = (point(p, x, len)?, point(p, y, len)?);
        write(out, lift(distance_d(p, &x, &y))?)
    })
}

/// Spectral gap of the Neumann form on the interval `(a, b)` with `cells` (odd) cells.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_interval_gap(p: *const DlParams, a: f64, b: f64, cells: usize, out: *mut f64) -> c_int {
    guard(|| {
        let p = params(p)?;
        let e = lift(poincare_constant(p, &Region::Interval { a, b }, Resolution::line(cells), Conductance::Harmonic))?;
        write(out, e.gap)
    })
}

/// Heat kernel `K_t(x0; x0)` on the default truncation cube (`n = 1`, `m <= 1`).
///
/// # Safety
/// `x0` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_heat_diagonal(p: *const DlParams, x0: *const f64, len: usize, t: f64, dt: f64, cells: usize, out: *mut f64) -> c_int {
    guard(|| {
        let p = params(p)?;
        let x = point(p, x0, len)?;
        let dom = lift(default_domain(p, &x, t))?;
        let res = if p.m == 0 { Resolution::line(cells) } else { Resolution::Uniform { n1: cells, n2: cells } };
        let f = lift(evolve_kernel(p, &dom, &x, t, dt, res))?;
        write(out, f.at_source())
    })
}

/// Heat mass on `x1 < 0` at time `t` from `x0 > 0` (`n = 1`, `m = 0`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_crossing_mass(p: *const DlParams, x0: f64, t: f64, dt: f64, cells: usize, out: *mut f64) -> c_int {
    guard(|| {
        let p = params(p)?;
        write(out, lift(crossing_mass(p, x0, t, dt, Resolution::line(cells)))?.fraction)
    })
}

/// Probability of reaching `a` before `b` from `x0` for the coefficient `(1 v |x|)^(2 deltap)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_hitting_oracle(deltap: f64, a: f64, x0: f64, b: f64, out: *mut f64) -> c_int {
    guard(|| write(out, lift(hitting_oracle(deltap, a, x0, b))?))
}

/// Euler-Maruyama estimate of the same probability with its standard error.
///
/// # Safety
/// `estimate` and `stderr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_simulate_hitting(
    deltap: f64,
    a: f64,
    x0: f64,
    b: f64,
    dt: f64,
    paths: u64,
    seed: u64,
    estimate: *mut f64,
    stderr: *mut f64,
) -> c_int {
    guard(|| {
        if estimate.is_null() || stderr.is_null() {
            return Err(null("output"));
        }
        let e = lift(simulate_hitting(&HittingExperiment::new(deltap, x0, a, b, dt, paths, seed)))?;
        write(estimate, e.empirical)?;
        write(stderr, e.stderr)
    })
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to `len`).
/// Returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn dl_copy_last_error(buf: *mut c_char, len: usize) -> usize {
    let msg = CStr::from_ptr(dl_last_error()).to_bytes();
    if !buf.is_null() && len > 0 {
        let k = msg.len().min(len - 1);
        std::ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, k);
        *buf.add(k) = 0;
    }
    msg.len()
}
