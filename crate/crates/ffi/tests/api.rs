use std::ffi::CStr;
use std::f64::consts::PI;
use std::ptr;

use meanfield_ffi::*;

fn last_error() -> Option<String> {
    let p = mf_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn grid(n: usize) -> *mut MfGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mf_grid_new(n, &mut g) }, MfStatus::Ok);
    g
}

#[test]
fn version_and_status_strings() {
    let v = unsafe { CStr::from_ptr(mf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let s = unsafe { CStr::from_ptr(mf_status_str(MfStatus::OutsideRegion as i32)) };
    assert!(s.to_str().unwrap().contains("outside"));
    let s = unsafe { CStr::from_ptr(mf_status_str(99)) };
    assert_eq!(s.to_str().unwrap(), "unknown status");
}

#[test]
fn bad_grid_sets_the_last_error() {
    let mut g = ptr::dangling_mut::<MfGrid>();
    assert_eq!(unsafe { mf_grid_new(17, &mut g) }, MfStatus::InvalidArgument);
    assert!(g.is_null());
    assert!(last_error().unwrap().contains("17"));
    // a later success clears it
    let g = grid(16);
    assert!(last_error().is_none());
    unsafe { mf_grid_free(g) };
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { mf_grid_new(16, ptr::null_mut()) }, MfStatus::NullPointer);
    let mut v = 0.0;
    assert_eq!(unsafe { mf_first_eigenvalue(ptr::null(), &mut v) }, MfStatus::NullPointer);
    let mut f = ptr::null_mut();
    let g = grid(16);
    assert_eq!(unsafe { mf_field_new(g, ptr::null(), 256, &mut f) }, MfStatus::NullPointer);
    unsafe {
        mf_grid_free(g);
        mf_grid_free(ptr::null_mut());
        mf_field_free(ptr::null_mut());
        mf_solve_result_free(ptr::null_mut());
        assert!(mf_solve_result_c_est(ptr::null()).is_nan());
    }
}

#[test]
fn field_round_trip_and_energy() {
    let n = 32;
    let g = grid(n);
    let mut mu = 0.0;
    assert_eq!(unsafe { mf_first_eigenvalue(g, &mut mu) }, MfStatus::Ok);
    assert!((mu - 4.0 * PI * PI).abs() < 1e-9);

    // 1 + cos 2πx: the constant is removed on entry
    let values: Vec<f64> = (0..n * n).map(|k| 1.0 + (2.0 * PI * (k / n) as f64 / n as f64).cos()).collect();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { mf_field_new(g, values.as_ptr(), values.len(), &mut f) }, MfStatus::Ok);
    assert_eq!(unsafe { mf_field_len(f) }, n * n);
    let mut back = vec![0.0; n * n];
    assert_eq!(unsafe { mf_field_copy_values(f, back.as_mut_ptr(), back.len()) }, MfStatus::Ok);
    for (a, b) in back.iter().zip(&values) {
        assert!((a - (b - 1.0)).abs() < 1e-14);
    }
    assert_eq!(unsafe { mf_field_copy_values(f, back.as_mut_ptr(), 3) }, MfStatus::InvalidArgument);

    let mut e = MfEnergy { dirichlet: 0.0, g_plus: 0.0, g_minus: 0.0, total: 0.0 };
    assert_eq!(unsafe { mf_energy(f, 0.0, 0.0, &mut e) }, MfStatus::Ok);
    // ½∫|∇cos 2πx|² = π²
    assert!((e.dirichlet - PI * PI).abs() < 1e-10);
    assert_eq!(unsafe { mf_energy(f, -1.0, 0.0, &mut e) }, MfStatus::InvalidArgument);
    let mut r = 0.0;
    assert_eq!(unsafe { mf_residual_norm(f, 0.0, 0.0, &mut r) }, MfStatus::Ok);
    // −Δ cos 2πx = 4π² cos 2πx, whose L² norm is 4π²/√2
    assert!((r - 4.0 * PI * PI / 2f64.sqrt()).abs() < 1e-8);

    let short = [1.0, 2.0];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { mf_field_new(g, short.as_ptr(), 2, &mut h) }, MfStatus::InvalidArgument);
    assert!(h.is_null());
    unsafe {
        mf_field_free(f);
        mf_grid_free(g);
    }
}

#[test]
fn region_and_threshold() {
    let mut r = MfRegion { in_region: false, margin: 0.0 };
    assert_eq!(unsafe { mf_in_region(30.0, 5.0, &mut r) }, MfStatus::Ok);
    assert!(r.in_region && r.margin > 0.0);
    assert_eq!(unsafe { mf_in_region(10.0, 10.0, &mut r) }, MfStatus::Ok);
    assert!(!r.in_region);
    assert!((mf_two_sided_threshold() - 4.0 * (3.0 + 5f64.sqrt()) * PI).abs() < 1e-9);
}

#[test]
fn slopes_match_the_library() {
    let g = grid(512);
    let eps = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
    let mut s = MfSlopes { dirichlet: 0.0, ln_exp_plus: 0.0, ln_exp_minus: 0.0, energy: 0.0 };
    assert_eq!(unsafe { mf_expansion_slopes(g, 0.25, 30.0, 5.0, eps.as_ptr(), 5, &mut s) }, MfStatus::Ok);
    let p = meanfield::Params::new(30.0, 5.0).unwrap();
    let r = meanfield::bumps::expansion_report(meanfield::bumps::DEFAULT_CENTER, 0.25, &eps, &p, meanfield::TorusGrid::new(512).unwrap()).unwrap();
    assert_eq!(s.dirichlet, r.fits.dirichlet.slope);
    assert_eq!(s.energy, r.fits.i_value.slope);
    assert_eq!(unsafe { mf_expansion_slopes(g, 0.25, 30.0, 5.0, eps.as_ptr(), 3, &mut s) }, MfStatus::InvalidArgument);
    unsafe { mf_grid_free(g) };
}

#[test]
fn solve_through_handles() {
    let g = grid(128);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { mf_solve(g, 30.0, 5.0, ptr::null(), &mut res) }, MfStatus::Ok);
    unsafe {
        assert!(mf_solve_result_minimax_converged(res));
        assert!(mf_solve_result_c_est(res) > 0.0);
        assert!(mf_solve_result_sweeps(res) > 0);
        assert!(mf_solve_result_residual(res) <= 1e-8);
    }
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { mf_solve_result_field(res, &mut u) }, MfStatus::Ok);
    let mut r = 0.0;
    assert_eq!(unsafe { mf_residual_norm(u, 30.0, 5.0, &mut r) }, MfStatus::Ok);
    assert!(r <= 1e-8);

    let mut other = ptr::null_mut();
    assert_eq!(unsafe { mf_solve(g, 10.0, 10.0, ptr::null(), &mut other) }, MfStatus::OutsideRegion);
    assert!(other.is_null());

    let mut opts = mf_solve_options_default();
    opts.band = 0.9;
    assert_eq!(unsafe { mf_solve(g, 30.0, 5.0, &opts, &mut other) }, MfStatus::InvalidArgument);

    let mut opts = mf_solve_options_default();
    opts.max_iters = 2;
    opts.tol_residual = 1e-300;
    assert_eq!(unsafe { mf_solve(g, 30.0, 5.0, &opts, &mut other) }, MfStatus::NotConverged);
    assert!(!other.is_null());
    assert!(last_error().is_some());
    unsafe {
        assert!(!mf_solve_result_minimax_converged(other));
        mf_solve_result_free(other);
        mf_solve_result_free(res);
        mf_field_free(u);
        mf_grid_free(g);
    }
}
