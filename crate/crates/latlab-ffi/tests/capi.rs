//! Exercise the C surface exactly as a foreign caller would: through the
//! exported extern functions, raw pointers and status codes.

use latlab_ffi::*;
use std::ffi::CStr;

#[test]
fn version_and_error_message_plumbing() {
    let v = unsafe { CStr::from_ptr(latlab_version()) };
    assert!(v.to_str().unwrap().starts_with("latlab "));

    // a failing call leaves a readable message
    let mut out: *mut LatlabLattice = std::ptr::null_mut();
    let singular = [1.0, 1.0, 1.0, 1.0];
    let code = unsafe { latlab_lattice_create(2, singular.as_ptr(), &mut out) };
    assert_eq!(code, LATLAB_ERR_INVALID_ARGUMENT);
    let msg = latlab_last_error_message();
    assert!(!msg.is_null());
    let text = unsafe { CStr::from_ptr(msg) }.to_str().unwrap();
    assert!(text.contains("determinant"), "message: {text}");
}

#[test]
fn lattice_handle_lifecycle_and_queries() {
    // diag(2, 1/2): lambda1 = 1/2 attained at the second generator
    let basis = [2.0, 0.0, 0.0, 0.5];
    let mut handle: *mut LatlabLattice = std::ptr::null_mut();
    let code = unsafe { latlab_lattice_create(2, basis.as_ptr(), &mut handle) };
    assert_eq!(code, LATLAB_OK);
    assert!(!handle.is_null());

    let mut lambda1 = 0.0f64;
    assert_eq!(unsafe { latlab_lattice_lambda1(handle, &mut lambda1) }, LATLAB_OK);
    assert!((lambda1 - 0.5).abs() < 1e-12);

    let mut vector = [0.0f64; 2];
    let mut coeffs = [0i64; 2];
    let mut l1 = 0.0f64;
    let code = unsafe {
        latlab_lattice_shortest_vector(handle, vector.as_mut_ptr(), coeffs.as_mut_ptr(), &mut l1)
    };
    assert_eq!(code, LATLAB_OK);
    assert_eq!(coeffs[0], 0);
    assert_eq!(coeffs[1].abs(), 1);
    assert!((vector[1].abs() - 0.5).abs() < 1e-12);

    let mut member = -1;
    assert_eq!(unsafe { latlab_lattice_in_k_eps(handle, 0.5, &mut member) }, LATLAB_OK);
    assert_eq!(member, 1);
    assert_eq!(unsafe { latlab_lattice_in_k_eps(handle, 0.6, &mut member) }, LATLAB_OK);
    assert_eq!(member, 0);

    unsafe { latlab_lattice_free(handle) };
    unsafe { latlab_lattice_free(std::ptr::null_mut()) }; // no-op
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = 0.0f64;
    assert_eq!(
        unsafe { latlab_lattice_lambda1(std::ptr::null(), &mut out) },
        LATLAB_ERR_NULL_ARGUMENT
    );
    let basis = [1.0, 0.0, 0.0, 1.0];
    assert_eq!(
        unsafe { latlab_lattice_create(2, basis.as_ptr(), std::ptr::null_mut()) },
        LATLAB_ERR_NULL_ARGUMENT
    );
}

#[test]
fn scalar_bookkeeping_functions() {
    let mut out = 0.0f64;
    assert_eq!(unsafe { latlab_gamma_tilde(1.0, 1, 1, 1, &mut out) }, LATLAB_OK);
    assert!((out - 1.0 / 7.0).abs() < 1e-15);

    assert_eq!(
        unsafe { latlab_rhs_mixing_bound(1.0, 0.1, 1.0, 10.0, 1, 2, 1.0, 10.0, &mut out) },
        LATLAB_OK
    );
    assert!((out - 0.554).abs() < 1e-3);

    assert_eq!(unsafe { latlab_eps_of_balancing(0.5, 1.0, 2.0, 2, &mut out) }, LATLAB_OK);
    assert!((out - 0.7358).abs() < 1e-4);

    assert_eq!(unsafe { latlab_siegel_mean_ball(2, 1.0, &mut out) }, LATLAB_OK);
    assert!((out - 6.0 / std::f64::consts::PI).abs() < 1e-9);

    // zero-radius ball: empty sum
    assert_eq!(unsafe { latlab_siegel_mean_ball(2, 0.0, &mut out) }, LATLAB_OK);
    assert_eq!(out, 0.0);
}

#[test]
fn decay_fit_through_the_abi() {
    let s: Vec<f64> = (1..=10).map(|x| x as f64).collect();
    let err: Vec<f64> = s.iter().map(|&x| 5.0 * (-0.3 * x).exp()).collect();
    let (mut g, mut c, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let code = unsafe {
        latlab_decay_fit(s.as_ptr(), err.as_ptr(), s.len(), &mut g, &mut c, &mut r)
    };
    assert_eq!(code, LATLAB_OK);
    assert!((g - 0.3).abs() < 1e-12);
    assert!((c.exp() - 5.0).abs() < 1e-10);

    // too few positive points
    let bad = [0.0f64, -1.0, 0.0];
    let code = unsafe {
        latlab_decay_fit(s.as_ptr(), bad.as_ptr(), 3, &mut g, &mut c, &mut r)
    };
    assert_eq!(code, LATLAB_ERR_INSUFFICIENT_DATA);
    assert!(!latlab_last_error_message().is_null());
}
