//! C ABI over `mcsense`.
//!
//! Every fallible call returns an [`McsStatus`]; on failure the message is
//! available from [`mcs_last_error`] on the same thread. Matrices are passed in
//! row-major order and states are 0-based. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mcsense::bounds::bound_report;
use mcsense::hilly::{scaled_hilly, HillyConfig};
use mcsense::mc_verify::estimate_q;
use mcsense::{
    q_all_fast, q_all_oracle, stationary_distribution, validate_stochastic, validate_substochastic,
    DenseMatrix, Error, SensitivityMatrix, StochasticMatrix, SubstochasticMatrix, DEFAULT_ROW_SUM_TOL,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMatrix = 3,
    Reducible = 4,
    Singular = 5,
    DominationViolated = 6,
    IndexOutOfRange = 7,
    BufferTooSmall = 8,
    Io = 9,
    Numerical = 10,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McsMethod {
    Fast = 0,
    Oracle = 1,
}

/// Log-scale bounds for one `(F, F~, S)` triple. `ocinneide` is NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct McsBoundSummary {
    pub true_error: f64,
    pub log_form: f64,
    pub linear_form: f64,
    pub ipsen_meyer: f64,
    pub ocinneide: f64,
    pub cho_meyer: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct McsEstimate {
    pub point: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
}

/// Opaque square matrix.
pub struct McsMatrix(DenseMatrix);

/// Opaque sensitivity table.
pub struct McsSensitivities(SensitivityMatrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> McsStatus {
    match e {
        Error::Reducible { .. } => McsStatus::Reducible,
        Error::SingularMatrix { .. } => McsStatus::Singular,
        Error::DominationViolated { .. } | Error::NotDominated { .. } => McsStatus::DominationViolated,
        Error::IndexOutOfRange { .. } | Error::SameIndex(_) => McsStatus::IndexOutOfRange,
        Error::Io(_) | Error::Parse { .. } => McsStatus::Io,
        Error::NotSquare { .. }
        | Error::Empty
        | Error::NonFinite { .. }
        | Error::NegativeEntry { .. }
        | Error::RowSumOutOfTolerance { .. }
        | Error::RowSumExceedsOne { .. }
        | Error::DimensionMismatch { .. } => McsStatus::InvalidMatrix,
        Error::ZeroSamples | Error::InvalidConfig(_) | Error::EtaTooLarge { .. } | Error::NoSlack { .. } => {
            McsStatus::InvalidArgument
        }
        _ => McsStatus::Numerical,
    }
}

enum Failure {
    Lib(Error),
    Status(McsStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(McsStatus::NullPointer, "null pointer argument".into())
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> McsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            McsStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            McsStatus::Panic
        }
    }
}

unsafe fn matrix_ref<'a>(m: *const McsMatrix) -> Result<&'a DenseMatrix, Failure> {
    m.as_ref().map(|m| &m.0).ok_or_else(null)
}

unsafe fn stochastic(m: *const McsMatrix) -> Result<StochasticMatrix, Failure> {
    Ok(validate_stochastic(matrix_ref(m)?.clone(), DEFAULT_ROW_SUM_TOL)?)
}

unsafe fn substochastic(m: *const McsMatrix) -> Result<SubstochasticMatrix, Failure> {
    Ok(validate_substochastic(matrix_ref(m)?.clone(), DEFAULT_ROW_SUM_TOL)?)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `dim * dim` row-major values into a new matrix handle.
///
/// # Safety
/// `data` must point to `dim * dim` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_matrix_new(dim: usize, data: *const f64, out: *mut *mut McsMatrix) -> McsStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return Err(null());
        }
        let len = dim
            .checked_mul(dim)
            .ok_or_else(|| Failure::Status(McsStatus::InvalidArgument, "dimension overflow".into()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let m = DenseMatrix::new(dim, values)?;
        write_out(out, Box::into_raw(Box::new(McsMatrix(m))))
    })
}

/// Reads a CSV or Matrix Market file into a new matrix handle.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_matrix_read(path: *const c_char, out: *mut *mut McsMatrix) -> McsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null());
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::Status(McsStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let m = mcsense::io::read_matrix(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(McsMatrix(m))))
    })
}

/// Dimension of a matrix handle, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_matrix_dim(m: *const McsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Copies the matrix in row-major order into `buf` (capacity `len`).
///
/// # Safety
/// `m` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mcs_matrix_copy(m: *const McsMatrix, buf: *mut f64, len: usize) -> McsStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        copy_into(m.as_slice(), buf, len)
    })
}

unsafe fn copy_into(values: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null());
    }
    if len < values.len() {
        return Err(Failure::Status(
            McsStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
    Ok(())
}

/// Releases a matrix handle. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcs_matrix_free(m: *mut McsMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Invariant distribution of a stochastic matrix into `pi` (capacity `len`).
///
/// # Safety
/// `m` must be a live handle; `pi` must hold `len` doubles; `residual` may be null.
#[no_mangle]
pub unsafe extern "C" fn mcs_stationary(
    m: *const McsMatrix,
    pi: *mut f64,
    len: usize,
    residual: *mut f64,
) -> McsStatus {
    guard(|| {
        let f = stochastic(m)?;
        let dist = stationary_distribution(&f)?;
        copy_into(dist.values(), pi, len)?;
        if !residual.is_null() {
            residual.write(dist.residual());
        }
        Ok(())
    })
}

/// Sensitivities `Q_ij(S)` of an irreducible substochastic matrix.
///
/// # Safety
/// `s` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_sensitivities(
    s: *const McsMatrix,
    method: McsMethod,
    out: *mut *mut McsSensitivities,
) -> McsStatus {
    guard(|| {
        let s = substochastic(s)?;
        s.require_irreducible()?;
        let q = match method {
            McsMethod::Fast => q_all_fast(&s)?,
            McsMethod::Oracle => q_all_oracle(&s)?,
        };
        write_out(out, Box::into_raw(Box::new(McsSensitivities(q))))
    })
}

/// `Q_ij` for `i ≠ j`.
///
/// # Safety
/// `q` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_sensitivities_get(
    q: *const McsSensitivities,
    i: usize,
    j: usize,
    out: *mut f64,
) -> McsStatus {
    guard(|| {
        let q = &q.as_ref().ok_or_else(null)?.0;
        let n = q.dim();
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: i.max(j), dim: n }.into());
        }
        let v = q.get(i, j).ok_or(Error::SameIndex(i))?;
        write_out(out, v)
    })
}

/// Row-major `L × L` table into `buf`; the diagonal is NaN.
///
/// # Safety
/// `q` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcs_sensitivities_copy(q: *const McsSensitivities, buf: *mut f64, len: usize) -> McsStatus {
    guard(|| {
        let q = &q.as_ref().ok_or_else(null)?.0;
        let n = q.dim();
        let values: Vec<f64> = (0..n * n).map(|k| q.get(k / n, k % n).unwrap_or(f64::NAN)).collect();
        copy_into(&values, buf, len)
    })
}

/// Releases a sensitivity handle. Null is ignored.
///
/// # Safety
/// `q` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcs_sensitivities_free(q: *mut McsSensitivities) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Bound report for stochastic `f`, `ftilde` and lower envelope `s`
/// (null `s` selects the entrywise minimum).
///
/// # Safety
/// `f` and `ftilde` must be live handles, `s` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_bounds(
    f: *const McsMatrix,
    ftilde: *const McsMatrix,
    s: *const McsMatrix,
    out: *mut McsBoundSummary,
) -> McsStatus {
    guard(|| {
        let f = stochastic(f)?;
        let ft = stochastic(ftilde)?;
        let s = if s.is_null() { None } else { Some(substochastic(s)?) };
        let r = bound_report(&f, &ft, s)?;
        write_out(
            out,
            McsBoundSummary {
                true_error: r.true_error,
                log_form: r.log_form,
                linear_form: r.linear_form,
                ipsen_meyer: r.ipsen_meyer_bound,
                ocinneide: r.ocinneide.unwrap_or(f64::NAN),
                cho_meyer: r.cho_meyer_bound,
            },
        )
    })
}

/// Hilly-landscape matrix `αF` on `size` states with the default potential.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_hilly_matrix(size: usize, alpha: f64, out: *mut *mut McsMatrix) -> McsStatus {
    guard(|| {
        let s = scaled_hilly(&HillyConfig::new(size).with_alpha(alpha))?;
        write_out(out, Box::into_raw(Box::new(McsMatrix(s.into_inner()))))
    })
}

/// Monte Carlo estimate of `Q_ij(S)` from `n` seeded trajectories.
///
/// # Safety
/// `s` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcs_estimate_q(
    s: *const McsMatrix,
    i: usize,
    j: usize,
    n: u64,
    seed: u64,
    out: *mut McsEstimate,
) -> McsStatus {
    guard(|| {
        let s = substochastic(s)?;
        let e = estimate_q(&s, i, j, n, seed)?;
        write_out(
            out,
            McsEstimate {
                point: e.point,
                std_error: e.stderr,
                n: e.n,
                seed: e.seed,
            },
        )
    })
}
