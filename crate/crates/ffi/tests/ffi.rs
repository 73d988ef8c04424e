use std::ffi::CStr;
use std::ptr;

use degenlab_ffi::*;

fn params(n: usize, m: usize, d: [f64; 4]) -> *mut DlParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dl_params_new(n, m, d[0], d[1], d[2], d[3], &mut p) }, DL_OK);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dl_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(dl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn flat_distance() {
    let p = params(1, 1, [0.0; 4]);
    let (x, y, mut d) = ([0.0, 0.0], [1.0, 0.0], f64::NAN);
    assert_eq!(unsafe { dl_distance(p, x.as_ptr(), y.as_ptr(), 2, &mut d) }, DL_OK);
    assert!((d - 1.0).abs() < 1e-12);
    unsafe { dl_params_free(p) };
}

#[test]
fn invalid_params_and_nulls() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dl_params_new(1, 0, 1.5, 0.0, 0.0, 0.0, &mut p) }, DL_ERR_INVALID);
    assert!(p.is_null());
    assert!(!last_error().is_empty());
    let mut d = 0.0;
    let x = [0.0];
    assert_eq!(unsafe { dl_distance(ptr::null(), x.as_ptr(), x.as_ptr(), 1, &mut d) }, DL_ERR_NULL);
    assert_eq!(unsafe { dl_hitting_oracle(0.0, -1.0, 0.0, 1.0, ptr::null_mut()) }, DL_ERR_NULL);
    unsafe { dl_params_free(ptr::null_mut()) };
}

#[test]
fn wrong_length_is_dimension_error() {
    let p = params(1, 1, [0.0; 4]);
    let x = [0.0; 3];
    let mut d = 0.0;
    assert_eq!(unsafe { dl_distance(p, x.as_ptr(), x.as_ptr(), 3, &mut d) }, DL_ERR_DIMENSION);
    unsafe { dl_params_free(p) };
}

#[test]
fn interval_gap_is_pi_squared_over_four() {
    let p = params(1, 0, [0.0; 4]);
    let mut g = 0.0;
    assert_eq!(unsafe { dl_interval_gap(p, -1.0, 1.0, 201, &mut g) }, DL_OK, "{}", last_error());
    let exact = std::f64::consts::PI.powi(2) / 4.0;
    assert!((g - exact).abs() / exact < 1e-3, "{g}");
    unsafe { dl_params_free(p) };
}

#[test]
fn flat_heat_diagonal() {
    let p = params(1, 0, [0.0; 4]);
    let (x0, mut k) = ([0.0], 0.0);
    assert_eq!(unsafe { dl_heat_diagonal(p, x0.as_ptr(), 1, 1.0, 0.01, 401, &mut k) }, DL_OK, "{}", last_error());
    let exact = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
    assert!((k - exact).abs() / exact < 1e-2, "{k}");
    unsafe { dl_params_free(p) };
}

#[test]
fn degenerate_crossing_is_zero() {
    let p = params(1, 0, [0.5, 0.5, 0.0, 0.0]);
    let mut f = 1.0;
    assert_eq!(unsafe { dl_crossing_mass(p, 0.5, 1.0, 0.01, 400, &mut f) }, DL_OK, "{}", last_error());
    assert!(f < 1e-10, "{f}");
    unsafe { dl_params_free(p) };
}

#[test]
fn hitting_flat_is_linear() {
    let mut h = 0.0;
    assert_eq!(unsafe { dl_hitting_oracle(0.0, -1.0, 0.5, 3.0, &mut h) }, DL_OK);
    assert!((h - 2.5 / 4.0).abs() < 1e-12, "{h}");
}

#[test]
fn simulated_hitting_agrees_with_oracle() {
    let (mut e, mut s, mut h) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { dl_simulate_hitting(0.0, -1.0, 0.0, 1.0, 1e-3, 4000, 7, &mut e, &mut s) }, DL_OK, "{}", last_error());
    assert_eq!(unsafe { dl_hitting_oracle(0.0, -1.0, 0.0, 1.0, &mut h) }, DL_OK);
    assert!((e - h).abs() < 4.0 * s + 0.02, "{e} {s}");
}

#[test]
fn copy_last_error_truncates() {
    let mut p = ptr::null_mut();
    let _ = unsafe { dl_params_new(0, 0, 0.0, 0.0, 0.0, 0.0, &mut p) };
    let mut buf = [1 as std::ffi::c_char; 8];
    let full = unsafe { dl_copy_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 0);
    assert_eq!(buf[full.min(7)], 0);
}
