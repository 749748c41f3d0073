//! C ABI for the `meanfield` solver.
//!
//! Grids, fields and solve results are opaque handles owned by the caller
//! and released with their `_free` function. Every fallible call returns an
//! [`MfStatus`]; on failure [`mf_last_error`] describes the most recent error
//! on the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use meanfield::minimax::{self, MinimaxOptions, MinimaxResult};
use meanfield::{bumps, diagnostics, functional, torus, Error, Field, MeanZeroField, Params, TorusGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutsideRegion = 3,
    Numerical = 4,
    NotConverged = 5,
    Panic = 6,
}

/// A uniform `n × n` grid on the unit torus.
pub struct MfGrid(TorusGrid);

/// A zero-mean grid function.
pub struct MfField(MeanZeroField);

/// A finished minimax solve with its refinement.
pub struct MfSolveResult(MinimaxResult);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfEnergy {
    /// `½∫|∇u|²`
    pub dirichlet: f64,
    /// `ln ∫ e^u`
    pub g_plus: f64,
    /// `ln ∫ e^{−u}`
    pub g_minus: f64,
    pub total: f64,
}

/// Minimax settings; seeds are the library defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfSolveOptions {
    pub nodes: usize,
    pub max_iters: usize,
    pub step0: f64,
    pub grad_tol: f64,
    pub band: f64,
    pub reparam_every: usize,
    pub tol_residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfRegion {
    pub in_region: bool,
    pub margin: f64,
}

/// Fitted slopes against `ln(1/ε)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfSlopes {
    pub dirichlet: f64,
    pub ln_exp_plus: f64,
    pub ln_exp_minus: f64,
    pub energy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> MfStatus {
    match e {
        Error::OutsideRegion(..) => MfStatus::OutsideRegion,
        Error::InvalidGrid(_)
        | Error::GridMismatch(..)
        | Error::ShapeMismatch { .. }
        | Error::NonFinite(_)
        | Error::NotMeanZero { .. }
        | Error::InvalidParams(_)
        | Error::InvalidBump(_)
        | Error::InvalidEpsList(_)
        | Error::InvalidOptions(_)
        | Error::Parse(_) => MfStatus::InvalidArgument,
        _ => MfStatus::Numerical,
    }
}

type Call = Result<(), (MfStatus, String)>;

fn fail(status: MfStatus, msg: impl Into<String>) -> Call {
    Err((status, msg.into()))
}

fn lib(e: Error) -> (MfStatus, String) {
    (status_of(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> Call) -> MfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MfStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MfStatus, String)> {
    p.as_ref().ok_or_else(|| (MfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (MfStatus, String)> {
    p.as_mut().ok_or_else(|| (MfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (MfStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err((MfStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn params(lambda1: f64, lambda2: f64) -> Result<Params, (MfStatus, String)> {
    Params::new(lambda1, lambda2).map_err(lib)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code; unknown codes get a generic text.
#[no_mangle]
pub extern "C" fn mf_status_str(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid argument",
        3 => c"parameters outside the admissible region",
        4 => c"numerical failure",
        5 => c"not converged",
        6 => c"internal panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

/// # Safety
/// `out_grid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_grid_new(n: usize, out_grid: *mut *mut MfGrid) -> MfStatus {
    guard(|| {
        let slot = out(out_grid, "out_grid")?;
        *slot = ptr::null_mut();
        let g = TorusGrid::new(n).map_err(lib)?;
        *slot = Box::into_raw(Box::new(MfGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from [`mf_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mf_grid_free(grid: *mut MfGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_grid_n(grid: *const MfGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

/// First nonzero eigenvalue of `−Δ` on the grid.
///
/// # Safety
/// `grid` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_first_eigenvalue(grid: *const MfGrid, out_value: *mut f64) -> MfStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        *out(out_value, "out_value")? = torus::first_eigenvalue(g.0);
        Ok(())
    })
}

/// A field from `n²` row-major samples, `values[i*n + j] = u(i/n, j/n)`.
/// The mean is subtracted.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out_field` be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_field_new(
    grid: *const MfGrid,
    values: *const f64,
    len: usize,
    out_field: *mut *mut MfField,
) -> MfStatus {
    guard(|| {
        let slot = out(out_field, "out_field")?;
        *slot = ptr::null_mut();
        let g = get(grid, "grid")?;
        let v = slice(values, len, "values")?;
        let f = Field::from_values(g.0, v.to_vec()).map_err(lib)?;
        *slot = Box::into_raw(Box::new(MfField(MeanZeroField::project(f))));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_field_free(field: *mut MfField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of samples, `n²`.
///
/// # Safety
/// `field` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_field_len(field: *const MfField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies the samples into `buffer`, which must hold exactly
/// [`mf_field_len`] doubles.
///
/// # Safety
/// `buffer` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_field_copy_values(field: *const MfField, buffer: *mut f64, len: usize) -> MfStatus {
    guard(|| {
        let f = get(field, "field")?;
        let v = f.0.values();
        if len != v.len() {
            return fail(MfStatus::InvalidArgument, format!("buffer holds {len} values, field has {}", v.len()));
        }
        if buffer.is_null() {
            return fail(MfStatus::NullPointer, "buffer is null");
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `field` must be a live handle and `out_energy` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_energy(
    field: *const MfField,
    lambda1: f64,
    lambda2: f64,
    out_energy: *mut MfEnergy,
) -> MfStatus {
    guard(|| {
        let f = get(field, "field")?;
        let p = params(lambda1, lambda2)?;
        let e = functional::eval_i(&f.0, &p);
        *out(out_energy, "out_energy")? = MfEnergy {
            dirichlet: e.dirichlet,
            g_plus: e.g_plus,
            g_minus: e.g_minus,
            total: e.total,
        };
        Ok(())
    })
}

/// L² norm of the equation residual.
///
/// # Safety
/// `field` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_residual_norm(
    field: *const MfField,
    lambda1: f64,
    lambda2: f64,
    out_value: *mut f64,
) -> MfStatus {
    guard(|| {
        let f = get(field, "field")?;
        let p = params(lambda1, lambda2)?;
        *out(out_value, "out_value")? = functional::residual(&f.0, &p).l2_norm();
        Ok(())
    })
}

/// # Safety
/// `out_region` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_in_region(lambda1: f64, lambda2: f64, out_region: *mut MfRegion) -> MfStatus {
    guard(|| {
        let v = diagnostics::in_lambda(&params(lambda1, lambda2)?);
        *out(out_region, "out_region")? = MfRegion {
            in_region: v.in_region,
            margin: v.margin,
        };
        Ok(())
    })
}

/// Least total mass `m1 + m2` of a two-sided blow-up point.
#[no_mangle]
pub extern "C" fn mf_two_sided_threshold() -> f64 {
    diagnostics::two_sided_threshold()
}

/// Bubble slopes at the torus centre over `count` strictly decreasing scales.
///
/// # Safety
/// `eps` must point to `count` readable doubles and `out_slopes` be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_expansion_slopes(
    grid: *const MfGrid,
    r0: f64,
    lambda1: f64,
    lambda2: f64,
    eps: *const f64,
    count: usize,
    out_slopes: *mut MfSlopes,
) -> MfStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        let eps = slice(eps, count, "eps")?;
        let p = params(lambda1, lambda2)?;
        let r = bumps::expansion_report(bumps::DEFAULT_CENTER, r0, eps, &p, g.0).map_err(lib)?;
        *out(out_slopes, "out_slopes")? = MfSlopes {
            dirichlet: r.fits.dirichlet.slope,
            ln_exp_plus: r.fits.ln_exp_plus.slope,
            ln_exp_minus: r.fits.ln_exp_minus.slope,
            energy: r.fits.i_value.slope,
        };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn mf_solve_options_default() -> MfSolveOptions {
    let m = MinimaxOptions::default();
    MfSolveOptions {
        nodes: m.nodes,
        max_iters: m.max_iters,
        step0: m.step0,
        grad_tol: m.grad_tol,
        band: m.band,
        reparam_every: m.reparam_every,
        tol_residual: 1e-8,
    }
}

/// Minimax and refinement. `options` may be null for the defaults.
///
/// Returns [`MfStatus::NotConverged`] with a valid result handle when the
/// refinement misses `tol_residual`; the handle must still be freed.
///
/// # Safety
/// `grid` must be a live handle, `options` null or readable and
/// `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_solve(
    grid: *const MfGrid,
    lambda1: f64,
    lambda2: f64,
    options: *const MfSolveOptions,
    out_result: *mut *mut MfSolveResult,
) -> MfStatus {
    let mut converged = true;
    let status = guard(|| {
        let slot = out(out_result, "out_result")?;
        *slot = ptr::null_mut();
        let g = get(grid, "grid")?;
        let o = options.as_ref().copied().unwrap_or_else(|| mf_solve_options_default());
        let opts = MinimaxOptions {
            nodes: o.nodes,
            max_iters: o.max_iters,
            step0: o.step0,
            grad_tol: o.grad_tol,
            band: o.band,
            reparam_every: o.reparam_every,
            ..Default::default()
        };
        if o.tol_residual.is_nan() || o.tol_residual <= 0.0 {
            return fail(MfStatus::InvalidArgument, format!("tol_residual = {} must be positive", o.tol_residual));
        }
        let r = minimax::solve(&params(lambda1, lambda2)?, g.0, &opts, o.tol_residual).map_err(lib)?;
        converged = r.refined.as_ref().is_some_and(|u| u.converged);
        *slot = Box::into_raw(Box::new(MfSolveResult(r)));
        Ok(())
    });
    if status == MfStatus::Ok && !converged {
        set_error("refinement did not reach the residual tolerance");
        return MfStatus::NotConverged;
    }
    status
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_solve_result_free(result: *mut MfSolveResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Minimax level estimate; NaN for a null handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_solve_result_c_est(result: *const MfSolveResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.c_est)
}

/// Deformation sweeps performed.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_solve_result_sweeps(result: *const MfSolveResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.history.len().saturating_sub(1))
}

/// Whether the path deformation met its gradient tolerance.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_solve_result_minimax_converged(result: *const MfSolveResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.converged)
}

/// L² residual of the refined solution; NaN for a null handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_solve_result_residual(result: *const MfSolveResult) -> f64 {
    result
        .as_ref()
        .and_then(|r| r.0.refined.as_ref())
        .map_or(f64::NAN, |u| u.residual)
}

/// A new field handle holding the refined solution.
///
/// # Safety
/// `result` must be a live handle and `out_field` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_solve_result_field(result: *const MfSolveResult, out_field: *mut *mut MfField) -> MfStatus {
    guard(|| {
        let slot = out(out_field, "out_field")?;
        *slot = ptr::null_mut();
        let r = get(result, "result")?;
        let Some(u) = r.0.refined.as_ref() else {
            return fail(MfStatus::Numerical, "result has no refined field");
        };
        *slot = Box::into_raw(Box::new(MfField(u.field.clone())));
        Ok(())
    })
}
