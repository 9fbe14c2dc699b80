//! C ABI over the lattice laboratory. Lattices travel as opaque handles;
//! every function returns a status code (`LATLAB_OK` = 0, negative on
//! error) and writes results through out-pointers. A per-thread message for
//! the last failure is available via `latlab_last_error_message`.
//!
//! The committed header `include/latlab.h` mirrors these declarations; the
//! bundled cbindgen.toml regenerates it.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use latlab::equidist::{eps_of_balancing, gamma_tilde, rhs_mixing_bound};
use latlab::error::Error;
use latlab::fitting::decay_fit;
use latlab::group::Dims;
use latlab::lattice::{siegel_mean, Lattice, RadialFunction};
use latlab::matrix::Mat;

pub const LATLAB_OK: c_int = 0;
pub const LATLAB_ERR_NULL_ARGUMENT: c_int = -1;
pub const LATLAB_ERR_INVALID_ARGUMENT: c_int = -2;
pub const LATLAB_ERR_BUDGET_EXCEEDED: c_int = -3;
pub const LATLAB_ERR_NUMERIC: c_int = -4;
pub const LATLAB_ERR_INSUFFICIENT_DATA: c_int = -5;
pub const LATLAB_ERR_PANIC: c_int = -9;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn code_for(err: &Error) -> c_int {
    match err {
        Error::BudgetExceeded { .. } => LATLAB_ERR_BUDGET_EXCEEDED,
        Error::Accuracy(_) => LATLAB_ERR_NUMERIC,
        Error::InsufficientData(_) => LATLAB_ERR_INSUFFICIENT_DATA,
        _ => LATLAB_ERR_INVALID_ARGUMENT,
    }
}

fn guarded(body: impl FnOnce() -> c_int + std::panic::UnwindSafe) -> c_int {
    match catch_unwind(body) {
        Ok(code) => code,
        Err(_) => {
            set_error("panic crossed the C boundary".into());
            LATLAB_ERR_PANIC
        }
    }
}

/// Opaque lattice handle.
pub struct LatlabLattice {
    inner: Lattice,
}

/// Version string of the library; static storage, do not free.
#[no_mangle]
pub extern "C" fn latlab_version() -> *const c_char {
    concat!("latlab ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, or null.
/// Valid until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn latlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(c) => c.as_ptr(),
        None => std::ptr::null(),
    })
}

/// Create a lattice from a row-major k x k basis whose columns generate;
/// the determinant must be 1 within 1e-9.
///
/// # Safety
/// `basis_row_major` must point to k*k readable doubles and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latlab_lattice_create(
    k: usize,
    basis_row_major: *const f64,
    out: *mut *mut LatlabLattice,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if basis_row_major.is_null() || out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        if k < 2 {
            set_error("need k >= 2".into());
            return LATLAB_ERR_INVALID_ARGUMENT;
        }
        let data = std::slice::from_raw_parts(basis_row_major, k * k);
        let mat = Mat::from_fn(k, k, |i, j| data[i * k + j]);
        let dims = match Dims::new(1, k - 1) {
            Ok(d) => d,
            Err(e) => {
                set_error(e.to_string());
                return LATLAB_ERR_INVALID_ARGUMENT;
            }
        };
        match Lattice::new(dims, mat) {
            Ok(lattice) => {
                clear_error();
                *out = Box::into_raw(Box::new(LatlabLattice { inner: lattice }));
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                code_for(&e)
            }
        }
    }))
}

/// Release a lattice handle; null is a no-op.
///
/// # Safety
/// `handle` must come from `latlab_lattice_create` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn latlab_lattice_free(handle: *mut LatlabLattice) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Length of a shortest nonzero vector.
///
/// # Safety
/// `handle` must be a live lattice handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_lattice_lambda1(
    handle: *const LatlabLattice,
    out: *mut f64,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if handle.is_null() || out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        match (*handle).inner.shortest_vector() {
            Ok(r) => {
                clear_error();
                *out = r.lambda1;
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                code_for(&e)
            }
        }
    }))
}

/// Shortest vector with its integer coordinates in the creation basis.
///
/// # Safety
/// `out_vector` and `out_coeffs` must point to k writable slots each.
#[no_mangle]
pub unsafe extern "C" fn latlab_lattice_shortest_vector(
    handle: *const LatlabLattice,
    out_vector: *mut f64,
    out_coeffs: *mut i64,
    out_lambda1: *mut f64,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if handle.is_null() || out_vector.is_null() || out_coeffs.is_null() || out_lambda1.is_null()
        {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        let k = (*handle).inner.k();
        match (*handle).inner.shortest_vector() {
            Ok(r) => {
                clear_error();
                std::slice::from_raw_parts_mut(out_vector, k).copy_from_slice(&r.vector);
                std::slice::from_raw_parts_mut(out_coeffs, k).copy_from_slice(&r.coeffs);
                *out_lambda1 = r.lambda1;
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                code_for(&e)
            }
        }
    }))
}

/// Membership in the compact set of lattices with no vector shorter than
/// eps: writes 1 or 0.
///
/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_lattice_in_k_eps(
    handle: *const LatlabLattice,
    eps: f64,
    out: *mut c_int,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if handle.is_null() || out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        match (*handle).inner.in_k_eps(eps) {
            Ok(member) => {
                clear_error();
                *out = c_int::from(member);
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                code_for(&e)
            }
        }
    }))
}

/// Haar mean of the primitive-vector sum of the closed-ball indicator:
/// vol_k(radius) / zeta(k).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_siegel_mean_ball(k: usize, radius: f64, out: *mut f64) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        if !(radius.is_finite() && radius >= 0.0) {
            set_error("radius must be finite and nonnegative".into());
            return LATLAB_ERR_INVALID_ARGUMENT;
        }
        match siegel_mean(&RadialFunction::ball_indicator(radius), k) {
            Ok(v) => {
                clear_error();
                *out = v;
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                code_for(&e)
            }
        }
    }))
}

/// Effective decay exponent gamma / (1 + m n k (k-1) (2 ell + N/2)) with
/// N = m^2 + mn + n^2 - 1.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_gamma_tilde(
    gamma: f64,
    ell: u32,
    m: usize,
    n: usize,
    out: *mut f64,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        match Dims::new(m, n) {
            Ok(dims) => {
                clear_error();
                *out = gamma_tilde(gamma, ell as usize, dims);
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                LATLAB_ERR_INVALID_ARGUMENT
            }
        }
    }))
}

/// Mixing-side error bound E (r f_l1 + r^-(2 ell + big_n / 2) f_sobolev e^{-gamma t}).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_rhs_mixing_bound(
    e: f64,
    r: f64,
    f_l1: f64,
    f_sobolev: f64,
    ell: u32,
    big_n: u32,
    gamma: f64,
    t: f64,
    out: *mut f64,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        clear_error();
        *out = rhs_mixing_bound(e, r, f_l1, f_sobolev, ell as usize, big_n as usize, gamma, t);
        LATLAB_OK
    }))
}

/// The balancing scale ((2/c) e^{-beta t})^(1/k).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_eps_of_balancing(
    c: f64,
    beta: f64,
    t: f64,
    k: usize,
    out: *mut f64,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        if k == 0 || c <= 0.0 || beta <= 0.0 {
            set_error("need k >= 1, c > 0, beta > 0".into());
            return LATLAB_ERR_INVALID_ARGUMENT;
        }
        clear_error();
        *out = eps_of_balancing(c, beta, t, k);
        LATLAB_OK
    }))
}

/// Log-linear decay fit on (floor_t, err) pairs; drops nonpositive errors
/// and needs at least three remaining points.
///
/// # Safety
/// `floor_t` and `err` must point to `len` readable doubles each; the out
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn latlab_decay_fit(
    floor_t: *const f64,
    err: *const f64,
    len: usize,
    out_gamma_hat: *mut f64,
    out_log_c_hat: *mut f64,
    out_residual: *mut f64,
) -> c_int {
    guarded(AssertUnwindSafe(|| {
        if floor_t.is_null()
            || err.is_null()
            || out_gamma_hat.is_null()
            || out_log_c_hat.is_null()
            || out_residual.is_null()
        {
            set_error("null argument".into());
            return LATLAB_ERR_NULL_ARGUMENT;
        }
        let s = std::slice::from_raw_parts(floor_t, len);
        let e = std::slice::from_raw_parts(err, len);
        let pts: Vec<(f64, f64)> = s.iter().copied().zip(e.iter().copied()).collect();
        match decay_fit(&pts) {
            Ok(fit) => {
                clear_error();
                *out_gamma_hat = fit.gamma_hat;
                *out_log_c_hat = fit.log_c_hat;
                *out_residual = fit.residual;
                LATLAB_OK
            }
            Err(e) => {
                set_error(e.to_string());
                code_for(&e)
            }
        }
    }))
}
