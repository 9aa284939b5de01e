//! C ABI for the fw-core solvers.
//!
//! Problems and results are opaque handles created and released through this API.
//! Every fallible call returns an [`FwStatus`]; on failure a description is kept per
//! thread and can be read with [`fw_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fw_core::geometry::pwidth;
use fw_core::{solve, FwError, PolytopeSpec, QuadraticObjective, Solution, SolverConfig, Start, Status, Variant};

/// Return codes of every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidDomain = 4,
    InvalidObjective = 5,
    SolverError = 6,
    Unavailable = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwVariant {
    Fw = 0,
    Afw = 1,
    Pfw = 2,
    Fcfw = 3,
    Mnp = 4,
}

/// Termination reason of a finished solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwSolveStatus {
    Converged = 0,
    MaxIter = 1,
    Stalled = 2,
    NonFinite = 3,
}

/// A quadratic objective together with its domain.
pub struct FwProblem {
    obj: QuadraticObjective,
    spec: PolytopeSpec,
}

/// The outcome of [`fw_solve`].
pub struct FwResult {
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &FwError) -> FwStatus {
    match e {
        FwError::DimensionMismatch { .. } => FwStatus::DimensionMismatch,
        FwError::InvalidPolytope(_) | FwError::Parse(_) | FwError::Json(_) => FwStatus::InvalidDomain,
        FwError::InvalidObjective(_) | FwError::NotQuadratic(_) => FwStatus::InvalidObjective,
        FwError::InvalidConfig(_) | FwError::NonFiniteInput(_) => FwStatus::InvalidArgument,
        FwError::WidthUnavailable | FwError::CapExceeded(_) | FwError::EnumerationInfeasible { .. } => {
            FwStatus::Unavailable
        }
        _ => FwStatus::SolverError,
    }
}

fn guard<F: FnOnce() -> Result<(), (FwStatus, String)>>(f: F) -> FwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FwStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            FwStatus::Panic
        }
    }
}

fn core_err(e: FwError) -> (FwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FwStatus, String) {
    (FwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FwStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (FwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// The message of the last failed call on this thread, or null if there was none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates `f(x) = ½ xᵀQx + bᵀx + c` over the domain described by `domain_json`.
///
/// `q` is `dim × dim` in row-major order and `b` has `dim` entries. The domain JSON
/// uses the same format as experiment configs, e.g. `{"variant":"simplex","dim":3}`.
///
/// # Safety
/// `q`, `b` must point to `dim*dim` and `dim` readable doubles, `domain_json` to a
/// NUL-terminated string, and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fw_problem_new_quadratic(
    dim: usize,
    q: *const f64,
    b: *const f64,
    c: f64,
    domain_json: *const c_char,
    out: *mut *mut FwProblem,
) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if dim == 0 {
            return Err((FwStatus::InvalidArgument, "dim must be positive".into()));
        }
        let q = read_slice(q, dim * dim, "q")?;
        let b = read_slice(b, dim, "b")?;
        let domain = read_str(domain_json, "domain_json")?;
        let spec = PolytopeSpec::from_json_str(domain, None).map_err(core_err)?;
        let obj = QuadraticObjective::from_row_major(dim, q, b.to_vec(), c).map_err(core_err)?;
        if spec.dim() != dim {
            return Err((
                FwStatus::DimensionMismatch,
                format!("domain has dimension {}, objective {dim}", spec.dim()),
            ));
        }
        *out = Box::into_raw(Box::new(FwProblem { obj, spec }));
        Ok(())
    })
}

/// Creates `f(x) = ½‖x − center‖²` over the domain described by `domain_json`.
///
/// # Safety
/// `center` must point to `dim` readable doubles; see [`fw_problem_new_quadratic`].
#[no_mangle]
pub unsafe extern "C" fn fw_problem_new_squared_distance(
    dim: usize,
    center: *const f64,
    domain_json: *const c_char,
    out: *mut *mut FwProblem,
) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if dim == 0 {
            return Err((FwStatus::InvalidArgument, "dim must be positive".into()));
        }
        let center = read_slice(center, dim, "center")?;
        let domain = read_str(domain_json, "domain_json")?;
        let spec = PolytopeSpec::from_json_str(domain, None).map_err(core_err)?;
        if spec.dim() != dim {
            return Err((
                FwStatus::DimensionMismatch,
                format!("domain has dimension {}, objective {dim}", spec.dim()),
            ));
        }
        let obj = QuadraticObjective::squared_distance(center).map_err(core_err)?;
        *out = Box::into_raw(Box::new(FwProblem { obj, spec }));
        Ok(())
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `p` must come from a `fw_problem_new_*` call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fw_problem_free(p: *mut FwProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of the problem, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn fw_problem_dim(p: *const FwProblem) -> usize {
    p.as_ref().map_or(0, |p| p.spec.dim())
}

/// Runs a solver from the default start until the FW gap is at most `epsilon` or
/// `max_iter` steps were taken. Not converging is not an error; inspect
/// [`fw_result_status`].
///
/// # Safety
/// `p` must be a live problem handle and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fw_solve(
    p: *const FwProblem,
    variant: FwVariant,
    epsilon: f64,
    max_iter: usize,
    out: *mut *mut FwResult,
) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let v = match variant {
            FwVariant::Fw => Variant::FW,
            FwVariant::Afw => Variant::AFW,
            FwVariant::Pfw => Variant::PFW,
            FwVariant::Fcfw => Variant::FCFW,
            FwVariant::Mnp => Variant::MNP,
        };
        let cfg = SolverConfig::new(v).with_epsilon(epsilon).with_max_iter(max_iter);
        let solution = solve(&p.obj, &p.spec, &cfg, Start::Default).map_err(core_err)?;
        *out = Box::into_raw(Box::new(FwResult { solution }));
        Ok(())
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `r` must come from [`fw_solve`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fw_result_free(r: *mut FwResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fw_result_status(r: *const FwResult, out: *mut FwSolveStatus) -> FwStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match r.solution.status {
            Status::Converged => FwSolveStatus::Converged,
            Status::MaxIter => FwSolveStatus::MaxIter,
            Status::Stalled(_) => FwSolveStatus::Stalled,
            Status::NonFinite => FwSolveStatus::NonFinite,
        };
        Ok(())
    })
}

/// Number of steps taken, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fw_result_iterations(r: *const FwResult) -> usize {
    r.as_ref().map_or(0, |r| r.solution.trace.steps().count())
}

/// Final objective value and FW gap.
///
/// # Safety
/// `r` must be a live result handle; `value` and `gap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_result_value_gap(r: *const FwResult, value: *mut f64, gap: *mut f64) -> FwStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if value.is_null() || gap.is_null() {
            return Err(null("output"));
        }
        let last = r.solution.trace.last().ok_or((FwStatus::SolverError, "empty trace".into()))?;
        *value = last.f_value;
        *gap = last.fw_gap;
        Ok(())
    })
}

/// Copies the final iterate into `buf`, which must hold at least `len ≥ dim` doubles.
///
/// # Safety
/// `r` must be a live result handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fw_result_x(r: *const FwResult, buf: *mut f64, len: usize) -> FwStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let x = r.solution.x();
        if len < x.len() {
            return Err((
                FwStatus::DimensionMismatch,
                format!("buffer holds {len} values, need {}", x.len()),
            ));
        }
        slice::from_raw_parts_mut(buf, x.len()).copy_from_slice(x);
        Ok(())
    })
}

/// The trace as CSV text. Release the string with [`fw_string_free`].
///
/// # Safety
/// `r` must be a live result handle and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fw_result_trace_csv(r: *const FwResult, out: *mut *mut c_char) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        let text = r.solution.trace.to_csv_string();
        let c = CString::new(text).map_err(|_| (FwStatus::SolverError, "trace contains NUL".into()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Pyramidal width estimate of `n` points of dimension `dim`, stored row-major.
///
/// # Safety
/// `points` must hold `n*dim` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_pwidth(
    points: *const f64,
    n: usize,
    dim: usize,
    n_directions: usize,
    out: *mut f64,
) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 || dim == 0 {
            return Err((FwStatus::InvalidArgument, "need at least one point of positive dimension".into()));
        }
        let flat = read_slice(points, n * dim, "points")?;
        let atoms: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
        *out = pwidth(&atoms, n_directions).map_err(core_err)?.pwidth_estimate;
        Ok(())
    })
}
