//! C ABI for the stable-lab core.
//!
//! Objects are opaque heap handles released with the matching `_free`.
//! Every entry point returns an `i32` status; `SL_OK` is success, and the
//! message for the last failure on the calling thread is available through
//! [`sl_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use stable_lab::approximation::newton_solve;
use stable_lab::catalog::RadialSolution;
use stable_lab::cli::{self, ExperimentConfig};
use stable_lab::estimates::matrix_sweep;
use stable_lab::grid::{build_ball_domain, BallDomain, GridField};
use stable_lab::nonlinearity::Nonlinearity;
use stable_lab::stability::{is_stable, Stability};
use stable_lab::LabError;

pub const SL_OK: i32 = 0;
pub const SL_ERR_NULL_POINTER: i32 = 1;
pub const SL_ERR_INVALID_UTF8: i32 = 2;
pub const SL_ERR_PANIC: i32 = 3;
pub const SL_ERR_BUFFER_TOO_SMALL: i32 = 4;
pub const SL_ERR_DIMENSION_OUT_OF_RANGE: i32 = 10;
pub const SL_ERR_SPACING_TOO_COARSE: i32 = 11;
pub const SL_ERR_INVALID_PARAMETER: i32 = 12;
pub const SL_ERR_DOMAIN_MISMATCH: i32 = 13;
pub const SL_ERR_NON_FINITE: i32 = 14;
pub const SL_ERR_INDEFINITE_SHIFT: i32 = 15;
pub const SL_ERR_NON_LIPSCHITZ: i32 = 16;
pub const SL_ERR_EIGEN_NOT_CONVERGED: i32 = 17;
pub const SL_ERR_SOLVE_NOT_CONVERGED: i32 = 18;
pub const SL_ERR_NEWTON_FAILED: i32 = 19;
pub const SL_ERR_MONOTONICITY_VIOLATION: i32 = 20;
pub const SL_ERR_UNSTABLE_INPUT: i32 = 21;
pub const SL_ERR_ORIGIN_RESOLUTION: i32 = 22;
pub const SL_ERR_DEGENERATE_FIT: i32 = 23;
pub const SL_ERR_PARSE: i32 = 24;
pub const SL_ERR_UNKNOWN_SERIES: i32 = 25;
pub const SL_ERR_IO: i32 = 26;
pub const SL_ERR_JSON: i32 = 27;

pub const SL_STABLE: i32 = 0;
pub const SL_UNSTABLE: i32 = 1;
pub const SL_MARGINAL: i32 = 2;

/// Ball grid.
pub struct SlDomain(Arc<BallDomain>);

/// Nodal field on a [`SlDomain`].
pub struct SlField(GridField);

pub struct SlNonlinearity(Nonlinearity);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &LabError) -> i32 {
    match e {
        LabError::DimensionOutOfRange(_) => SL_ERR_DIMENSION_OUT_OF_RANGE,
        LabError::SpacingTooCoarse { .. } => SL_ERR_SPACING_TOO_COARSE,
        LabError::InvalidParameter(_) => SL_ERR_INVALID_PARAMETER,
        LabError::DomainMismatch => SL_ERR_DOMAIN_MISMATCH,
        LabError::NonFinite { .. } => SL_ERR_NON_FINITE,
        LabError::IndefiniteShift { .. } => SL_ERR_INDEFINITE_SHIFT,
        LabError::NonLipschitz { .. } => SL_ERR_NON_LIPSCHITZ,
        LabError::EigenNotConverged { .. } => SL_ERR_EIGEN_NOT_CONVERGED,
        LabError::SolveNotConverged { .. } => SL_ERR_SOLVE_NOT_CONVERGED,
        LabError::NewtonFailed(_) => SL_ERR_NEWTON_FAILED,
        LabError::MonotonicityViolation { .. } => SL_ERR_MONOTONICITY_VIOLATION,
        LabError::UnstableInput { .. } => SL_ERR_UNSTABLE_INPUT,
        LabError::OriginResolution { .. } => SL_ERR_ORIGIN_RESOLUTION,
        LabError::DegenerateFit { .. } => SL_ERR_DEGENERATE_FIT,
        LabError::Parse(_) => SL_ERR_PARSE,
        LabError::UnknownSeries(_) => SL_ERR_UNKNOWN_SERIES,
        LabError::Io(_) => SL_ERR_IO,
        LabError::Json(_) => SL_ERR_JSON,
    }
}

struct Fail(i32, String);

impl From<LabError> for Fail {
    fn from(e: LabError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SL_ERR_NULL_POINTER, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SL_OK,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SL_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SL_ERR_INVALID_UTF8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Static version string, e.g. `stable-lab 0.1.0`.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!("stable-lab ", env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes (without the nul) of the last error message on this thread, 0 if none.
#[no_mangle]
pub extern "C" fn sl_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message, nul-terminated, into `buf` of `len` bytes.
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_last_error_message(buf: *mut c_char, len: usize) -> i32 {
    let msg = LAST_ERROR.with(|e| e.borrow().clone()).unwrap_or_default();
    let bytes = msg.as_bytes_with_nul();
    if buf.is_null() {
        return SL_ERR_NULL_POINTER;
    }
    if len < bytes.len() {
        return SL_ERR_BUFFER_TOO_SMALL;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
    SL_OK
}

/// Builds the grid on `B_radius(center)` in dimension `n`.
///
/// # Safety
/// `center` must point to `n` doubles (or be null for the origin); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_new(
    n: usize,
    center: *const f64,
    radius: f64,
    spacing: f64,
    out: *mut *mut SlDomain,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = if center.is_null() { vec![0.0; n] } else { slice_arg(center, n, "center")?.to_vec() };
        let d = build_ball_domain(n, &c, radius, spacing)?;
        *out = Box::into_raw(Box::new(SlDomain(d)));
        Ok(())
    })
}

/// # Safety
/// `d` must come from [`sl_domain_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_free(d: *mut SlDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Total nodes, interior first then boundary.
///
/// # Safety
/// `d` must be a live domain handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_node_count(d: *const SlDomain, out: *mut usize) -> i32 {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(d, "domain")?.0.node_count();
        Ok(())
    })
}

/// # Safety
/// `d` must be a live domain handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_interior_count(d: *const SlDomain, out: *mut usize) -> i32 {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(d, "domain")?.0.interior_count();
        Ok(())
    })
}

/// Coordinates of node `idx` into `coords[0..n]`.
///
/// # Safety
/// `d` must be live; `coords` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_coord(d: *const SlDomain, idx: usize, coords: *mut f64, n: usize) -> i32 {
    guard(|| {
        let d = &ref_arg(d, "domain")?.0;
        if n != d.dim() {
            return Err(Fail(SL_ERR_INVALID_PARAMETER, format!("coordinate buffer has {n} slots, dimension is {}", d.dim())));
        }
        if idx >= d.node_count() {
            return Err(Fail(SL_ERR_INVALID_PARAMETER, format!("node {idx} out of range")));
        }
        if coords.is_null() {
            return Err(null("coords"));
        }
        d.coord_into(idx, std::slice::from_raw_parts_mut(coords, n));
        Ok(())
    })
}

/// Field from `len == node_count` values in node order.
///
/// # Safety
/// `d` must be live, `values` valid for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_field_from_values(
    d: *const SlDomain,
    values: *const f64,
    len: usize,
    out: *mut *mut SlField,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = &ref_arg(d, "domain")?.0;
        let f = GridField::from_values(d, slice_arg(values, len, "values")?.to_vec())?;
        *out = Box::into_raw(Box::new(SlField(f)));
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_field_free(f: *mut SlField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Copies the nodal values into `buf`, which must hold exactly `node_count` doubles.
///
/// # Safety
/// `f` must be live and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_field_values(f: *const SlField, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let v = ref_arg(f, "field")?.0.values();
        if len != v.len() {
            return Err(Fail(SL_ERR_BUFFER_TOO_SMALL, format!("buffer holds {len} values, field has {}", v.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
        Ok(())
    })
}

/// Parses `exp`, `pow:p=…`, `affine:a=…,b=…`, `ramp` or `table:<csv>`.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_nonlinearity_parse(spec: *const c_char, out: *mut *mut SlNonlinearity) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let f = Nonlinearity::parse(str_arg(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(SlNonlinearity(f)));
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_nonlinearity_free(f: *mut SlNonlinearity) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_nonlinearity_eval(f: *const SlNonlinearity, t: f64, out: *mut f64) -> i32 {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(f, "nonlinearity")?.0.eval(t);
        Ok(())
    })
}

/// Left derivative `f'_−(t)`.
///
/// # Safety
/// `f` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_nonlinearity_left_derivative(f: *const SlNonlinearity, t: f64, out: *mut f64) -> i32 {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(f, "nonlinearity")?.0.left_derivative(t)?;
        Ok(())
    })
}

/// Solves `−Δu = f(u)` with the boundary values of `boundary` by damped Newton.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_newton_solve(
    boundary: *const SlField,
    f: *const SlNonlinearity,
    tol: f64,
    out: *mut *mut SlField,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let (u, _) = newton_solve(&ref_arg(boundary, "boundary")?.0, &ref_arg(f, "nonlinearity")?.0, tol)?;
        *out = Box::into_raw(Box::new(SlField(u)));
        Ok(())
    })
}

/// Stability of `u` for `f`; `tol` NaN selects the default band.
///
/// # Safety
/// Handles must be live; `verdict` and `lambda1` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_is_stable(
    u: *const SlField,
    f: *const SlNonlinearity,
    tol: f64,
    verdict: *mut i32,
    lambda1: *mut f64,
) -> i32 {
    guard(|| {
        let verdict = out_arg(verdict, "verdict")?;
        let lambda1 = out_arg(lambda1, "lambda1")?;
        let tol = if tol.is_nan() { None } else { Some(tol) };
        let v = is_stable(&ref_arg(u, "field")?.0, &ref_arg(f, "nonlinearity")?.0, tol)?;
        *verdict = match v.verdict {
            Stability::Stable => SL_STABLE,
            Stability::Unstable => SL_UNSTABLE,
            Stability::Marginal => SL_MARGINAL,
        };
        *lambda1 = v.lambda1;
        Ok(())
    })
}

/// Random sweep of the matrix inequality in dimension `n`.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_matrix_sweep(
    n: usize,
    trials: u64,
    seed: u64,
    min_scaled_margin: *mut f64,
    violations: *mut u64,
) -> i32 {
    guard(|| {
        let m = out_arg(min_scaled_margin, "min_scaled_margin")?;
        let v = out_arg(violations, "violations")?;
        let s = matrix_sweep(n, trials, seed)?;
        *m = s.min_scaled_margin;
        *v = s.violations;
        Ok(())
    })
}

/// Radial `λ₁` of a catalog entry on `(delta, 1)` with `points` nodes.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_catalog_radial_lambda1(name: *const c_char, delta: f64, points: usize, out: *mut f64) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rs = RadialSolution::parse(str_arg(name, "name")?)?;
        *out = rs.radial_lambda1(delta, points)?;
        Ok(())
    })
}

/// Runs the experiment in the TOML file `config_path`, writing its report under
/// `out_dir` (null: the default output root). `exit_code` receives 0, 1 or 2 as
/// the command-line tool would return.
///
/// # Safety
/// Strings must be nul-terminated; `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_run_config(config_path: *const c_char, out_dir: *const c_char, exit_code: *mut i32) -> i32 {
    guard(|| {
        let code = out_arg(exit_code, "exit_code")?;
        let path = PathBuf::from(str_arg(config_path, "config_path")?);
        let flag = if out_dir.is_null() { None } else { Some(PathBuf::from(str_arg(out_dir, "out_dir")?)) };
        let cfg = ExperimentConfig::load(&path, &[])?;
        let dir = cli::resolve_output(&cfg, Some(&path), flag.as_deref());
        let report = cli::run_to_dir(&cfg, &dir)?;
        *code = report.exit_code();
        Ok(())
    })
}
