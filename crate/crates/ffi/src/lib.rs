//! C ABI over the solver: opaque problem and solver handles, integer status
//! codes, and a per-thread last-error message.
//!
//! Every function that can fail returns a [`KdvStatus`]; on failure the
//! message is available through [`kdv_last_error_message`]. Handles are
//! created by `*_new` functions and released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kdv_tbc::reference::airy;
use kdv_tbc::solver::{Mode, Solver};
use kdv_tbc::{Error, InitialCondition, ProblemSpec, Scheme};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateRoot = 3,
    NonSeparated = 4,
    TrackingAmbiguity = 5,
    SeparationViolation = 6,
    NonRealResult = 7,
    PadeSingular = 8,
    PoleInsideDisk = 9,
    RepeatedPole = 10,
    BandwidthViolation = 11,
    SingularSystem = 12,
    OutOfRange = 13,
    QuadratureNoConvergence = 14,
    ZeroReferenceNorm = 15,
    Config = 16,
    Io = 17,
    Cache = 18,
    Finished = 19,
    Panic = 20,
}

impl From<&Error> for KdvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DegenerateRoot(_) => KdvStatus::DegenerateRoot,
            Error::NonSeparated(_) => KdvStatus::NonSeparated,
            Error::TrackingAmbiguity { .. } => KdvStatus::TrackingAmbiguity,
            Error::SeparationViolation { .. } => KdvStatus::SeparationViolation,
            Error::NonRealResult { .. } => KdvStatus::NonRealResult,
            Error::PadeSingular { .. } => KdvStatus::PadeSingular,
            Error::PoleInsideDisk { .. } => KdvStatus::PoleInsideDisk,
            Error::RepeatedPole { .. } => KdvStatus::RepeatedPole,
            Error::BandwidthViolation { .. } => KdvStatus::BandwidthViolation,
            Error::SingularSystem { .. } => KdvStatus::SingularSystem,
            Error::OutOfRange(_) => KdvStatus::OutOfRange,
            Error::QuadratureNoConvergence(_) => KdvStatus::QuadratureNoConvergence,
            Error::ZeroReferenceNorm(_) => KdvStatus::ZeroReferenceNorm,
            Error::InvalidInput(_) => KdvStatus::InvalidInput,
            Error::Config(_) => KdvStatus::Config,
            Error::Io(_) => KdvStatus::Io,
            Error::Cache(_) => KdvStatus::Cache,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvScheme {
    /// One-sided scheme, `U1 = 0` only.
    Rcn = 0,
    /// Centered scheme.
    Ccn = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvInitial {
    /// `exp(-x^2)`.
    Gaussian = 0,
    /// `exp(-8 (x - 5)^2) sin(50 pi x / 4)`.
    WavePacket = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KdvProblemParams {
    pub u1: f64,
    pub u2: f64,
    pub a: f64,
    pub b: f64,
    pub t_final: f64,
    pub j: usize,
    pub n_steps: usize,
    pub radius: f64,
    /// A [`KdvScheme`] value.
    pub scheme: u32,
    /// A [`KdvInitial`] value.
    pub initial: u32,
}

/// Opaque problem definition.
pub struct KdvProblem {
    spec: ProblemSpec,
}

/// Opaque time stepper.
pub struct KdvSolver {
    solver: Solver,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> KdvStatus {
    let status = KdvStatus::from(&e);
    set_error(format!("{}: {e}", e.code()));
    status
}

/// Runs `f`, turning panics into [`KdvStatus::Panic`].
fn guard(f: impl FnOnce() -> KdvStatus) -> KdvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".to_string());
            KdvStatus::Panic
        }
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn kdv_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

fn status_from_i32(v: i32) -> Option<KdvStatus> {
    use KdvStatus::*;
    const ALL: [KdvStatus; 21] = [
        Ok, NullPointer, InvalidInput, DegenerateRoot, NonSeparated, TrackingAmbiguity, SeparationViolation,
        NonRealResult, PadeSingular, PoleInsideDisk, RepeatedPole, BandwidthViolation, SingularSystem, OutOfRange,
        QuadratureNoConvergence, ZeroReferenceNorm, Config, Io, Cache, Finished, Panic,
    ];
    usize::try_from(v).ok().and_then(|i| ALL.get(i).copied())
}

/// Static name of a status code, `"unknown"` for values outside the enum.
#[no_mangle]
pub extern "C" fn kdv_status_name(status: i32) -> *const c_char {
    let s: &'static [u8] = match status_from_i32(status) {
        None => b"unknown\0",
        Some(status) => match status {
        KdvStatus::Ok => b"ok\0",
        KdvStatus::NullPointer => b"null_pointer\0",
        KdvStatus::InvalidInput => b"invalid_input\0",
        KdvStatus::DegenerateRoot => b"degenerate_root\0",
        KdvStatus::NonSeparated => b"non_separated\0",
        KdvStatus::TrackingAmbiguity => b"tracking_ambiguity\0",
        KdvStatus::SeparationViolation => b"separation_violation\0",
        KdvStatus::NonRealResult => b"non_real_result\0",
        KdvStatus::PadeSingular => b"pade_singular\0",
        KdvStatus::PoleInsideDisk => b"pole_inside_disk\0",
        KdvStatus::RepeatedPole => b"repeated_pole\0",
        KdvStatus::BandwidthViolation => b"bandwidth_violation\0",
        KdvStatus::SingularSystem => b"singular_system\0",
        KdvStatus::OutOfRange => b"out_of_range\0",
        KdvStatus::QuadratureNoConvergence => b"quadrature_no_convergence\0",
        KdvStatus::ZeroReferenceNorm => b"zero_reference_norm\0",
        KdvStatus::Config => b"config\0",
        KdvStatus::Io => b"io\0",
        KdvStatus::Cache => b"cache\0",
        KdvStatus::Finished => b"finished\0",
        KdvStatus::Panic => b"panic\0",
        },
    };
    s.as_ptr() as *const c_char
}

/// Parameters of the first benchmark (Gaussian on `[-6, 6]`, `T = 4`);
/// `scheme` is a [`KdvScheme`] value, checked by [`kdv_problem_new`].
#[no_mangle]
pub extern "C" fn kdv_example1_params(scheme: u32, j: usize, n_steps: usize) -> KdvProblemParams {
    let s = ProblemSpec::example1(Scheme::Rcn, j, n_steps);
    KdvProblemParams { u1: s.u1, u2: s.u2, a: s.a, b: s.b, t_final: s.t_final, j, n_steps, radius: s.radius, scheme, initial: KdvInitial::Gaussian as u32 }
}

/// Parameters of the second benchmark (wave packet on `[0, 10]`, centered scheme).
#[no_mangle]
pub extern "C" fn kdv_example2_params(j: usize, n_steps: usize) -> KdvProblemParams {
    let s = ProblemSpec::example2(j, n_steps);
    KdvProblemParams {
        u1: s.u1,
        u2: s.u2,
        a: s.a,
        b: s.b,
        t_final: s.t_final,
        j,
        n_steps,
        radius: s.radius,
        scheme: KdvScheme::Ccn as u32,
        initial: KdvInitial::WavePacket as u32,
    }
}

/// Validates `params` and stores a new problem handle in `*out`.
///
/// # Safety
/// `params` and `out` must be null or valid pointers.
#[no_mangle]
pub unsafe extern "C" fn kdv_problem_new(params: *const KdvProblemParams, out: *mut *mut KdvProblem) -> KdvStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            set_error("null pointer argument".to_string());
            return KdvStatus::NullPointer;
        }
        let p = &*params;
        let scheme = match p.scheme {
            0 => Scheme::Rcn,
            1 => Scheme::Ccn,
            other => return fail(Error::InvalidInput(format!("unknown scheme value {other}"))),
        };
        let initial = match p.initial {
            0 => InitialCondition::Gaussian,
            1 => InitialCondition::WavePacket,
            other => return fail(Error::InvalidInput(format!("unknown initial condition value {other}"))),
        };
        let spec = ProblemSpec {
            u1: p.u1,
            u2: p.u2,
            a: p.a,
            b: p.b,
            t_final: p.t_final,
            j: p.j,
            n_steps: p.n_steps,
            radius: p.radius,
            scheme,
            initial,
        };
        if let Err(e) = spec.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(KdvProblem { spec }));
        KdvStatus::Ok
    })
}

/// # Safety
/// `problem` must be null or a handle from [`kdv_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kdv_problem_free(problem: *mut KdvProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Builds kernels, factors the system and stores a solver in `*out`. With
/// `fast` set, boundary convolutions use `terms` exponentials past the first
/// `head` exact coefficients.
///
/// # Safety
/// `problem` must be a live problem handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_new(problem: *const KdvProblem, fast: bool, terms: usize, head: usize, out: *mut *mut KdvSolver) -> KdvStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            set_error("null pointer argument".to_string());
            return KdvStatus::NullPointer;
        }
        let mode = if fast { Mode::Fast { terms, head } } else { Mode::Direct };
        match Solver::new((*problem).spec.clone(), mode) {
            Ok(solver) => {
                *out = Box::into_raw(Box::new(KdvSolver { solver }));
                KdvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `solver` must be null or a handle from [`kdv_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_free(solver: *mut KdvSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Advances one step; [`KdvStatus::Finished`] once the final step is reached.
///
/// # Safety
/// `solver` must be a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_step(solver: *mut KdvSolver) -> KdvStatus {
    guard(|| {
        let Some(s) = solver.as_mut() else {
            set_error("null solver".to_string());
            return KdvStatus::NullPointer;
        };
        if s.solver.step_index() >= s.solver.spec().n_steps {
            set_error("run already reached the final step".to_string());
            return KdvStatus::Finished;
        }
        match s.solver.step() {
            Ok(()) => KdvStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Current step index, 0 for a null handle.
///
/// # Safety
/// `solver` must be null or a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_step_index(solver: *const KdvSolver) -> usize {
    solver.as_ref().map_or(0, |s| s.solver.step_index())
}

/// Current time, NaN for a null handle.
///
/// # Safety
/// `solver` must be null or a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_time(solver: *const KdvSolver) -> f64 {
    solver.as_ref().map_or(f64::NAN, |s| s.solver.time())
}

/// Number of grid values (`J + 1`), 0 for a null handle.
///
/// # Safety
/// `solver` must be null or a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_len(solver: *const KdvSolver) -> usize {
    solver.as_ref().map_or(0, |s| s.solver.u().len())
}

/// Copies the current grid values into `buf`, which must hold
/// [`kdv_solver_len`] doubles.
///
/// # Safety
/// `solver` must be a live solver handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_copy_u(solver: *const KdvSolver, buf: *mut f64, len: usize) -> KdvStatus {
    let Some(s) = solver.as_ref() else {
        set_error("null solver".to_string());
        return KdvStatus::NullPointer;
    };
    if buf.is_null() {
        set_error("null buffer".to_string());
        return KdvStatus::NullPointer;
    }
    let u = s.solver.u();
    if len < u.len() {
        set_error(format!("buffer holds {len} values, need {}", u.len()));
        return KdvStatus::InvalidInput;
    }
    ptr::copy_nonoverlapping(u.as_ptr(), buf, u.len());
    KdvStatus::Ok
}

/// Airy function `Ai(x)` for `|x| <= 100`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kdv_airy(x: f64, out: *mut f64) -> KdvStatus {
    if out.is_null() {
        set_error("null output".to_string());
        return KdvStatus::NullPointer;
    }
    match airy(x) {
        Ok(v) => {
            *out = v;
            KdvStatus::Ok
        }
        Err(e) => fail(e),
    }
}
