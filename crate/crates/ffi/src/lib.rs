//! C ABI over `pspin`. Objects are opaque handles created by `*_new`/`*_solve`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`PspinStatus`]; the message of the last failure on the calling
//! thread is available through [`pspin_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pspin::hamiltonian::{sample, HamiltonianInstance};
use pspin::parisi::{minimize_q, SolveOptions, ZeroTempSolution};
use pspin::replica_bounds::{three_replica_bound, two_replica_bound};
use pspin::{Error, Mixture};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PspinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidMixture = 2,
    Domain = 3,
    NotConverged = 4,
    Capacity = 5,
    DimensionMismatch = 6,
    Precondition = 7,
    Numerical = 8,
    Panic = 9,
}

/// A validated mixture ξ(x) = Σ γ_p² x^p.
pub struct PspinMixture(Mixture);

/// A converged zero-temperature solution.
pub struct PspinSolution(ZeroTempSolution);

/// One sampled disorder instance.
pub struct PspinHamiltonian(HamiltonianInstance);

/// Scalar summary of a solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PspinPrediction {
    pub gs: f64,
    pub l: f64,
    pub zhat1: f64,
    pub r: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// 1 when the profile is full RSB at q = 1, else 0.
    pub full_rsb_endpoint: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PspinStatus {
    match e {
        Error::InvalidMixture(_) | Error::Config(_) => PspinStatus::InvalidMixture,
        Error::Domain(_) | Error::OutsideCone(_) => PspinStatus::Domain,
        Error::SolverNotConverged { .. } | Error::CsNotConverged { .. } => PspinStatus::NotConverged,
        Error::Capacity { .. } => PspinStatus::Capacity,
        Error::DimensionMismatch { .. } => PspinStatus::DimensionMismatch,
        Error::Precondition(_) => PspinStatus::Precondition,
        _ => PspinStatus::Numerical,
    }
}

/// Runs `f`, records failures and converts panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), PspinStatus>) -> PspinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PspinStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            PspinStatus::Panic
        }
    }
}

fn fail(e: Error) -> PspinStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> PspinStatus {
    set_error(format!("{what} is null"));
    PspinStatus::NullPointer
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pspin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length
/// in bytes, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pspin_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a mixture from `len` pairs (degree, γ_p).
///
/// # Safety
/// `degrees` and `gammas` must point to `len` readable elements and `out`
/// to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pspin_mixture_new(
    degrees: *const u32,
    gammas: *const f64,
    len: usize,
    out: *mut *mut PspinMixture,
) -> PspinStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if len > 0 && (degrees.is_null() || gammas.is_null()) {
            return Err(null("coefficient array"));
        }
        let pairs: Vec<(u32, f64)> = if len == 0 {
            Vec::new()
        } else {
            let d = std::slice::from_raw_parts(degrees, len);
            let g = std::slice::from_raw_parts(gammas, len);
            d.iter().copied().zip(g.iter().copied()).collect()
        };
        let m = Mixture::new(pairs).map_err(fail)?;
        *out = Box::into_raw(Box::new(PspinMixture(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`pspin_mixture_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pspin_mixture_free(m: *mut PspinMixture) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Evaluates the `order`-th derivative of ξ at `q` in [0, 1].
///
/// # Safety
/// `m` must be a live mixture handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pspin_mixture_xi(m: *const PspinMixture, q: f64, order: u32, out: *mut f64) -> PspinStatus {
    guard(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return Err(null("argument"));
        };
        *out = m.0.eval_derivative(q, order).map_err(fail)?;
        Ok(())
    })
}

/// Minimizes the zero-temperature functional on `cells` grid cells
/// (0 selects the default of 1000).
///
/// # Safety
/// `m` must be a live mixture handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pspin_solve(m: *const PspinMixture, cells: usize, out: *mut *mut PspinSolution) -> PspinStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let Some(m) = m.as_ref() else { return Err(null("mixture")) };
        let mut opts = SolveOptions::default();
        if cells > 0 {
            opts.cells = cells;
        }
        let sol = minimize_q(&m.0, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(PspinSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from [`pspin_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pspin_solution_free(s: *mut PspinSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pspin_solution_prediction(s: *const PspinSolution, out: *mut PspinPrediction) -> PspinStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return Err(null("argument"));
        };
        let p = &s.0.prediction;
        *out = PspinPrediction {
            gs: p.gs,
            l: p.l,
            zhat1: p.zhat1,
            r: p.r,
            lambda_plus: p.lambda_plus,
            lambda_minus: p.lambda_minus,
            full_rsb_endpoint: p.full_rsb_endpoint as i32,
        };
        Ok(())
    })
}

/// Number of grid nodes (cells + 1) of the solution profile.
///
/// # Safety
/// `s` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn pspin_solution_len(s: *const PspinSolution) -> usize {
    s.as_ref().map_or(0, |s| s.0.op.zhat().len())
}

/// Copies up to `len` values of ẑ on the uniform grid into `buf`.
/// Returns the number written.
///
/// # Safety
/// `s` must be a live solution handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pspin_solution_zhat(s: *const PspinSolution, buf: *mut f64, len: usize) -> usize {
    let (Some(s), false) = (s.as_ref(), buf.is_null()) else { return 0 };
    let z = s.0.op.zhat();
    let n = z.len().min(len);
    ptr::copy_nonoverlapping(z.as_ptr(), buf, n);
    n
}

/// Two-replica bound at overlap 1 − ε (`replicas` = 2) or the three-replica
/// bound at ε (`replicas` = 3), using the solution's order parameter.
///
/// # Safety
/// `m` and `s` must be live handles for the same mixture and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pspin_replica_bound(
    m: *const PspinMixture,
    s: *const PspinSolution,
    replicas: u32,
    eps: f64,
    out: *mut f64,
) -> PspinStatus {
    guard(|| {
        let (Some(m), Some(s), false) = (m.as_ref(), s.as_ref(), out.is_null()) else {
            return Err(null("argument"));
        };
        let v = match replicas {
            2 => two_replica_bound(&m.0, &s.0.op, eps),
            3 => three_replica_bound(&m.0, &s.0.op, eps),
            k => Err(Error::Domain(format!("replicas must be 2 or 3, got {k}"))),
        }
        .map_err(fail)?;
        *out = v.value;
        Ok(())
    })
}

/// Samples an instance of dimension `n` with the given seed.
///
/// # Safety
/// `m` must be a live mixture handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pspin_hamiltonian_sample(
    m: *const PspinMixture,
    n: usize,
    seed: u64,
    out: *mut *mut PspinHamiltonian,
) -> PspinStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let Some(m) = m.as_ref() else { return Err(null("mixture")) };
        let h = sample(n, &m.0, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(PspinHamiltonian(h)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`pspin_hamiltonian_sample`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pspin_hamiltonian_free(h: *mut PspinHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Evaluates H at `x` (length `len`, which must equal the dimension).
/// Optionally writes the Euclidean gradient into `grad` when it is non-null.
///
/// # Safety
/// `h` must be a live handle, `x` point to `len` doubles, `grad` be null or
/// point to `len` writable doubles, and `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn pspin_hamiltonian_eval(
    h: *const PspinHamiltonian,
    x: *const f64,
    len: usize,
    value: *mut f64,
    grad: *mut f64,
) -> PspinStatus {
    guard(|| {
        let (Some(h), false, false) = (h.as_ref(), x.is_null(), value.is_null()) else {
            return Err(null("argument"));
        };
        if len != h.0.n() {
            return Err(fail(Error::DimensionMismatch {
                expected: h.0.n(),
                got: len,
            }));
        }
        let xs = std::slice::from_raw_parts(x, len);
        if grad.is_null() {
            *value = h.0.value_at(xs);
        } else {
            let (v, g) = h.0.value_gradient_at(xs);
            *value = v;
            ptr::copy_nonoverlapping(g.as_ptr(), grad, len);
        }
        Ok(())
    })
}
