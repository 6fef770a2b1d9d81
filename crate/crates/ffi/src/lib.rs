//! C ABI for `fbls`.
//!
//! Problems and traces are opaque handles created and freed through this
//! interface. Every function returns an [`FblsStatus`]; on a non-zero status
//! [`fbls_last_error`] describes the failure. Messages are kept per thread.
//! Panics never cross the boundary, they come back as [`FblsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fbls::cli::{self, CertificateRequest, RunConfig};
use fbls::diagnostics::CertificateStatus;
use fbls::{build_problem, solve, CompositeProblem, ProblemSpec, SolverConfig, SolverTrace, Termination, Vector};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FblsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed TOML or a parameter out of range.
    InvalidArgument = 3,
    /// Wrong dimension, start outside the domain, or an unsatisfiable request.
    Precondition = 4,
    /// An oracle returned a non-finite value or a certificate could not run.
    Failed = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FblsTermination {
    ResidualTolerance = 0,
    MaxIterations = 1,
    LinesearchFailure = 2,
    Diverged = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FblsCertificateStatus {
    Passed = 0,
    Violated = 1,
    NotObserved = 2,
}

/// One iteration. Fields without a value for the method are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FblsRecord {
    pub k: usize,
    pub objective: f64,
    pub stepsize: f64,
    pub residual: f64,
    pub step_norm: f64,
    pub ls_trials: usize,
    pub cum_prox: usize,
    pub cum_grad: usize,
    pub cum_f: usize,
    pub t_k: f64,
    pub dist_to_solution: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FblsCertificate {
    pub passed: bool,
    pub status: FblsCertificateStatus,
    pub worst_margin: f64,
    /// Record index of the worst margin.
    pub worst_index: usize,
    pub tolerance: f64,
}

/// Opaque problem handle.
pub struct FblsProblem {
    spec: ProblemSpec,
    problem: CompositeProblem,
}

/// Opaque trace handle. Keeps the start point and linesearch parameters so
/// certificates can be evaluated later.
pub struct FblsTrace {
    trace: SolverTrace,
    x0: Vector,
    config: SolverConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(FblsStatus, String);

impl From<fbls::Error> for Failure {
    fn from(e: fbls::Error) -> Self {
        use fbls::Error::*;
        let status = match &e {
            InvalidParameter(_) | Config(_) | MalformedProblem(_) | Serialization(_) => FblsStatus::InvalidArgument,
            DimensionMismatch { .. } | OutsideDomain | Precondition(_) => FblsStatus::Precondition,
            Io(_) => FblsStatus::Io,
            _ => FblsStatus::Failed,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FblsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FblsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("panic inside fbls");
            FblsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FblsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(FblsStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn toml_error(e: impl std::fmt::Display) -> Failure {
    Failure(FblsStatus::InvalidArgument, e.to_string())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fbls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a problem from a TOML table such as `family = "lasso"` plus its
/// fields.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbls_problem_from_toml(toml: *const c_char, out: *mut *mut FblsProblem) -> FblsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: ProblemSpec = toml::from_str(text(toml, "toml")?).map_err(toml_error)?;
        let problem = build_problem(&spec)?;
        *out = Box::into_raw(Box::new(FblsProblem { spec, problem }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`fbls_problem_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn fbls_problem_dimension(problem: *const FblsProblem, out: *mut usize) -> FblsStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        *out.as_mut().ok_or_else(|| null("out"))? = p.problem.dimension();
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or come from [`fbls_problem_from_toml`], and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbls_problem_free(problem: *mut FblsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs a solver. `solver_toml` is a solver table (`method = "method1"`,
/// optional `[params]`, ...). A null `x0` selects the family's default start.
///
/// # Safety
/// `x0` must point to `len` doubles when not null; the other pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn fbls_solve(
    problem: *const FblsProblem,
    solver_toml: *const c_char,
    x0: *const f64,
    len: usize,
    out: *mut *mut FblsTrace,
) -> FblsStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config: SolverConfig = toml::from_str(text(solver_toml, "solver_toml")?).map_err(toml_error)?;
        let x0 = if x0.is_null() {
            p.spec.default_start()?
        } else {
            Vector::from_column_slice(std::slice::from_raw_parts(x0, len))
        };
        let trace = solve(&p.problem, &config, &x0)?;
        *out = Box::into_raw(Box::new(FblsTrace { trace, x0, config }));
        Ok(())
    })
}

/// Number of records in the trace.
///
/// # Safety
/// `trace` must come from [`fbls_solve`].
#[no_mangle]
pub unsafe extern "C" fn fbls_trace_len(trace: *const FblsTrace, out: *mut usize) -> FblsStatus {
    guard(|| {
        let t = reference(trace, "trace")?;
        *out.as_mut().ok_or_else(|| null("out"))? = t.trace.records.len();
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`fbls_solve`] and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbls_trace_record(trace: *const FblsTrace, index: usize, out: *mut FblsRecord) -> FblsStatus {
    guard(|| {
        let t = reference(trace, "trace")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r =
            t.trace.records.get(index).ok_or_else(|| {
                Failure(FblsStatus::OutOfRange, format!("record {index} of {}", t.trace.records.len()))
            })?;
        *out = FblsRecord {
            k: r.k,
            objective: r.objective,
            stepsize: r.stepsize,
            residual: r.residual,
            step_norm: r.step_norm,
            ls_trials: r.ls_trials,
            cum_prox: r.cum_prox,
            cum_grad: r.cum_grad,
            cum_f: r.cum_f,
            t_k: r.t_k.unwrap_or(f64::NAN),
            dist_to_solution: r.dist_to_solution.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`fbls_solve`] and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbls_trace_termination(trace: *const FblsTrace, out: *mut FblsTermination) -> FblsStatus {
    guard(|| {
        let t = reference(trace, "trace")?;
        *out.as_mut().ok_or_else(|| null("out"))? = match t.trace.termination {
            Termination::ResidualTolerance => FblsTermination::ResidualTolerance,
            Termination::MaxIterations => FblsTermination::MaxIterations,
            Termination::LinesearchFailure => FblsTermination::LinesearchFailure,
            Termination::Diverged => FblsTermination::Diverged,
        };
        Ok(())
    })
}

/// Copies the final point into `buf`. `*written` receives the dimension; if
/// `capacity` is smaller nothing is copied and `OutOfRange` is returned, so a
/// call with a null buffer queries the size.
///
/// # Safety
/// `buf` must hold `capacity` doubles when not null.
#[no_mangle]
pub unsafe extern "C" fn fbls_trace_final_point(
    trace: *const FblsTrace,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> FblsStatus {
    guard(|| {
        let t = reference(trace, "trace")?;
        let point = t.trace.final_point();
        *written.as_mut().ok_or_else(|| null("written"))? = point.len();
        if buf.is_null() || capacity < point.len() {
            return Err(Failure(FblsStatus::OutOfRange, format!("need {} doubles, have {capacity}", point.len())));
        }
        std::slice::from_raw_parts_mut(buf, point.len()).copy_from_slice(point.as_slice());
        Ok(())
    })
}

/// Writes the trace as CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fbls_trace_write_csv(trace: *const FblsTrace, path: *const c_char) -> FblsStatus {
    guard(|| {
        let t = reference(trace, "trace")?;
        let file = std::fs::File::create(Path::new(text(path, "path")?)).map_err(fbls::Error::from)?;
        cli::write_trace_csv(&t.trace, std::io::BufWriter::new(file))?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or come from [`fbls_solve`], and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbls_trace_free(trace: *mut FblsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Evaluates a certificate, given as a TOML table such as `name = "descent"`,
/// on a trace of `problem`.
///
/// # Safety
/// All pointers must be valid; `trace` must have been solved on `problem`.
#[no_mangle]
pub unsafe extern "C" fn fbls_certify(
    problem: *const FblsProblem,
    trace: *const FblsTrace,
    request_toml: *const c_char,
    out: *mut FblsCertificate,
) -> FblsStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let t = reference(trace, "trace")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let request: CertificateRequest = toml::from_str(text(request_toml, "request_toml")?).map_err(toml_error)?;
        let cert = cli::certify_request(&request, &p.problem, &t.config.params, &t.x0, &t.trace)?;
        *out = FblsCertificate {
            passed: cert.passed,
            status: match cert.status {
                CertificateStatus::Passed => FblsCertificateStatus::Passed,
                CertificateStatus::Violated => FblsCertificateStatus::Violated,
                CertificateStatus::NotObserved => FblsCertificateStatus::NotObserved,
            },
            worst_margin: cert.worst_margin,
            worst_index: cert.worst_index,
            tolerance: cert.tolerance,
        };
        Ok(())
    })
}

/// Runs a configuration file like `fbls run`. `*exit_code` receives the
/// command-line exit code (0 success, 1 solver or certificate failure,
/// 2 invalid configuration) whenever the call itself succeeds.
///
/// # Safety
/// `path` must be a NUL-terminated string and `exit_code` valid.
#[no_mangle]
pub unsafe extern "C" fn fbls_run_config(path: *const c_char, exit_code: *mut i32) -> FblsStatus {
    guard(|| {
        let exit_code = exit_code.as_mut().ok_or_else(|| null("exit_code"))?;
        let config = match RunConfig::load(Path::new(text(path, "path")?)) {
            Ok(c) => c,
            Err(e) => {
                *exit_code = 2;
                return Err(e.into());
            }
        };
        match cli::run(&config) {
            Ok(outcome) => {
                *exit_code = outcome.exit_code();
                Ok(())
            }
            Err(e) => {
                *exit_code = e.exit_code();
                Err(Failure(FblsStatus::Failed, e.to_string()))
            }
        }
    })
}
