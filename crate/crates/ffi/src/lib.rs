//! C ABI over `fujita-lab`.
//!
//! Conventions:
//! * every fallible call returns [`FlStatus`] and writes results through out-pointers;
//! * handles (`FlSemigroup`, `FlField`) are opaque, created by `*_new`/producer
//!   calls and released with the matching `*_free`;
//! * after a non-OK status, `fl_last_error_message` describes the failure
//!   (per thread);
//! * panics are caught at the boundary and reported as `FL_STATUS_PANIC`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use fujita_lab::blowup::{integrate_nonlinear, BlowupConfig, SolveOutcome};
use fujita_lab::exponents::{ExponentReport, ExtReal, MassSign, ProblemParams, Regime};
use fujita_lab::grid::{Profile, RadialField, RadialGrid};
use fujita_lab::semigroup::{Scheme, SemigroupOp};
use fujita_lab::{Error, ErrorClass};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    /// Null pointer, length mismatch or malformed string.
    InvalidArgument = 1,
    Config = 2,
    /// The parameters violate a hypothesis of the requested computation.
    Hypothesis = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlScheme {
    ImplicitEuler = 0,
    CrankNicolson = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlMassSign {
    Positive = 0,
    Zero = 1,
    Negative = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlRegime {
    NoGlobalRhoPositive = 0,
    NoGlobalSubcritical = 1,
    NoGlobalCriticalRhoZero = 2,
    GlobalCandidateSupercritical = 3,
    Unclassified = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlOutcomeKind {
    BlownUp = 0,
    Global = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlProblemParams {
    pub dim: u32,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub p: f64,
}

/// Missing values (empty window, no weights) are NaN; an infinite `p_star` is `+INFINITY`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlExponentReport {
    pub p_fujita: f64,
    pub mu_star: f64,
    pub p_c: f64,
    pub p_star: f64,
    pub r_c: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub mu: f64,
    pub beta: f64,
    pub delta: f64,
    pub regime: FlRegime,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlBlowupConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_rel: f64,
    pub max_rel_change: f64,
    pub blowup_norm_cap: f64,
    pub t_max: f64,
    pub max_steps: u64,
}

/// For `INCONCLUSIVE`, `fl_last_error_message` holds the reason.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlOutcome {
    pub kind: FlOutcomeKind,
    /// Blow-up time, or the time integration stopped.
    pub t_end: f64,
    pub final_norm: f64,
    pub peak_norm: f64,
    pub accepted_steps: u64,
}

/// Opaque semigroup operator on a radial grid.
pub struct FlSemigroup(SemigroupOp);

/// Opaque radial field living on a semigroup's grid.
pub struct FlField(RadialField);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> FlStatus {
    match e.class() {
        ErrorClass::Config => FlStatus::Config,
        ErrorClass::Hypothesis => FlStatus::Hypothesis,
        ErrorClass::Numerical => FlStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), FlStatus>) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FlStatus::Panic
        }
    }
}

fn lift<T>(r: fujita_lab::Result<T>) -> Result<T, FlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn invalid(msg: &str) -> FlStatus {
    set_error(msg);
    FlStatus::InvalidArgument
}

unsafe fn deref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, FlStatus> {
    ptr.as_ref().ok_or_else(|| invalid(&format!("{name} is null")))
}

unsafe fn put<T>(ptr: *mut T, value: T, name: &str) -> Result<(), FlStatus> {
    if ptr.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    ptr.write(value);
    Ok(())
}

fn params_of(p: &FlProblemParams) -> ProblemParams {
    ProblemParams::new(p.dim, p.sigma1, p.sigma2, p.rho, p.p)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Closed-form exponents for `params`.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fl_exponent_report(
    params: *const FlProblemParams,
    mass: FlMassSign,
    out: *mut FlExponentReport,
) -> FlStatus {
    guard(|| {
        let p = params_of(deref(params, "params")?);
        let mass = match mass {
            FlMassSign::Positive => MassSign::Positive,
            FlMassSign::Zero => MassSign::Zero,
            FlMassSign::Negative => MassSign::Negative,
        };
        let r = lift(ExponentReport::compute(&p, mass, None))?;
        let (r_lo, r_hi) = if r.r_window.is_empty() { (f64::NAN, f64::NAN) } else { r.r_window.r_bounds() };
        let w = |f: fn(&fujita_lab::exponents::Weights) -> f64| r.weights.as_ref().map(f).unwrap_or(f64::NAN);
        let report = FlExponentReport {
            p_fujita: r.p_fujita,
            mu_star: r.mu_star,
            p_c: r.p_c,
            p_star: match r.p_star {
                ExtReal::Finite(v) => v,
                ExtReal::PosInfinity => f64::INFINITY,
            },
            r_c: r.r_c,
            r_lo,
            r_hi,
            mu: w(|x| x.mu),
            beta: w(|x| x.beta),
            delta: w(|x| x.delta),
            regime: match r.regime {
                Regime::NoGlobalRhoPositive => FlRegime::NoGlobalRhoPositive,
                Regime::NoGlobalSubcritical => FlRegime::NoGlobalSubcritical,
                Regime::NoGlobalCriticalRhoZero => FlRegime::NoGlobalCriticalRhoZero,
                Regime::GlobalCandidateSupercritical => FlRegime::GlobalCandidateSupercritical,
                Regime::Unclassified => FlRegime::Unclassified,
            },
        };
        put(out, report, "out")
    })
}

/// Creates the semigroup for `|x|^σ1 u_t = Δu` in dimension `dim` on a
/// log-uniform grid of `nodes` points on `[1e-4·r_max, r_max]`.
///
/// # Safety
/// `out` must be a valid pointer. The handle must be released with `fl_semigroup_free`.
#[no_mangle]
pub unsafe extern "C" fn fl_semigroup_new(
    dim: u32,
    sigma1: f64,
    r_max: f64,
    nodes: usize,
    scheme: FlScheme,
    max_dt: f64,
    out: *mut *mut FlSemigroup,
) -> FlStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let scheme = match scheme {
            FlScheme::ImplicitEuler => Scheme::ImplicitEuler,
            FlScheme::CrankNicolson => Scheme::CrankNicolson,
        };
        let grid = lift(RadialGrid::default_log(r_max, nodes))?;
        let op = lift(SemigroupOp::new(Arc::new(grid), dim, sigma1, scheme, max_dt))?;
        put(out, Box::into_raw(Box::new(FlSemigroup(op))), "out")
    })
}

/// # Safety
/// `sg` must be null or a handle from `fl_semigroup_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_semigroup_free(sg: *mut FlSemigroup) {
    if !sg.is_null() {
        drop(Box::from_raw(sg));
    }
}

/// Number of grid nodes, 0 for a null handle.
///
/// # Safety
/// `sg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fl_semigroup_len(sg: *const FlSemigroup) -> usize {
    sg.as_ref().map_or(0, |s| s.0.grid().len())
}

/// Copies the grid nodes into `out`, which must hold exactly `fl_semigroup_len` values.
///
/// # Safety
/// `sg` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_semigroup_nodes(sg: *const FlSemigroup, out: *mut f64, len: usize) -> FlStatus {
    guard(|| {
        let sg = deref(sg, "sg")?;
        copy_out(sg.0.grid().nodes(), out, len)
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), FlStatus> {
    if out.is_null() {
        return Err(invalid("out is null"));
    }
    if len != src.len() {
        return Err(invalid(&format!("buffer holds {len} values, need {}", src.len())));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    Ok(())
}

/// A field with the given nodal values on `sg`'s grid.
///
/// # Safety
/// `sg` must be a live handle, `values` must point to `len` doubles and `out`
/// must be valid. Release the field with `fl_field_free`.
#[no_mangle]
pub unsafe extern "C" fn fl_field_from_values(
    sg: *const FlSemigroup,
    values: *const f64,
    len: usize,
    out: *mut *mut FlField,
) -> FlStatus {
    guard(|| {
        let sg = deref(sg, "sg")?;
        if values.is_null() {
            return Err(invalid("values is null"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let f = lift(sg.0.field(v))?;
        put(out, Box::into_raw(Box::new(FlField(f))), "out")
    })
}

/// A field sampled from a named profile: `zero`, `gaussian(c, w, a)`,
/// `bump(support, a)` or `power(k, a)`.
///
/// # Safety
/// `sg` must be a live handle, `text` a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fl_field_from_profile(
    sg: *const FlSemigroup,
    text: *const c_char,
    out: *mut *mut FlField,
) -> FlStatus {
    guard(|| {
        let sg = deref(sg, "sg")?;
        if text.is_null() {
            return Err(invalid("text is null"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|_| invalid("text is not UTF-8"))?;
        let profile = lift(Profile::parse(text))?;
        let f = RadialField::from_profile(sg.0.grid().clone(), sg.0.dim() as f64, &profile);
        put(out, Box::into_raw(Box::new(FlField(f))), "out")
    })
}

/// # Safety
/// `f` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn fl_field_free(f: *mut FlField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_field_values(f: *const FlField, out: *mut f64, len: usize) -> FlStatus {
    guard(|| copy_out(&deref(f, "field")?.0.values, out, len))
}

/// `(ω_N ∫ |u|^q r^{N-1} dr)^{1/q}`; `q = INFINITY` gives the maximum norm.
///
/// # Safety
/// `f` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fl_field_lq_norm(f: *const FlField, q: f64, out: *mut f64) -> FlStatus {
    guard(|| {
        let f = &deref(f, "field")?.0;
        if !(q >= 1.0) {
            return Err(invalid("q must be at least 1"));
        }
        let v = if q.is_infinite() { f.max_abs() } else { f.lq_norm(q, 0.0) };
        put(out, v, "out")
    })
}

/// `S(t) u` as a new field.
///
/// # Safety
/// `sg` and `u` must be live handles, `u` created on `sg`'s grid, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fl_semigroup_apply(
    sg: *const FlSemigroup,
    u: *const FlField,
    t: f64,
    out: *mut *mut FlField,
) -> FlStatus {
    guard(|| {
        let sg = deref(sg, "sg")?;
        let u = deref(u, "u")?;
        if u.0.len() != sg.0.grid().len() {
            return Err(invalid("field does not live on this grid"));
        }
        let v = lift(sg.0.apply(&u.0, t))?;
        put(out, Box::into_raw(Box::new(FlField(v))), "out")
    })
}

/// Defaults used by `fl_integrate_nonlinear` when `cfg` is null.
#[no_mangle]
pub extern "C" fn fl_blowup_config_default() -> FlBlowupConfig {
    let d = BlowupConfig::default();
    FlBlowupConfig {
        dt_init: d.dt_init,
        dt_min: d.dt_min,
        dt_max: d.dt_max,
        dt_rel: d.dt_rel,
        max_rel_change: d.max_rel_change,
        blowup_norm_cap: d.blowup_norm_cap,
        t_max: d.t_max,
        max_steps: d.max_steps as u64,
    }
}

/// Integrates the full nonlinear problem from `u0` with forcing `w`.
///
/// # Safety
/// `sg`, `u0`, `w` must be live handles on the same grid; `params` and `out`
/// valid; `cfg` null or valid.
#[no_mangle]
pub unsafe extern "C" fn fl_integrate_nonlinear(
    sg: *const FlSemigroup,
    u0: *const FlField,
    w: *const FlField,
    params: *const FlProblemParams,
    cfg: *const FlBlowupConfig,
    out: *mut FlOutcome,
) -> FlStatus {
    guard(|| {
        let sg = deref(sg, "sg")?;
        let (u0, w) = (deref(u0, "u0")?, deref(w, "w")?);
        let params = params_of(deref(params, "params")?);
        let c = cfg.as_ref().copied().unwrap_or_else(|| fl_blowup_config_default());
        let cfg = BlowupConfig {
            dt_init: c.dt_init,
            dt_min: c.dt_min,
            dt_max: c.dt_max,
            dt_rel: c.dt_rel,
            max_rel_change: c.max_rel_change,
            blowup_norm_cap: c.blowup_norm_cap,
            t_max: c.t_max,
            max_steps: usize::try_from(c.max_steps).unwrap_or(usize::MAX),
        };
        let run = lift(integrate_nonlinear(&sg.0, &u0.0, &w.0, &params, &cfg, &[]))?;
        let kind = match run.outcome {
            SolveOutcome::BlownUp { .. } => FlOutcomeKind::BlownUp,
            SolveOutcome::Global => FlOutcomeKind::Global,
            SolveOutcome::Inconclusive { reason } => {
                set_error(reason);
                FlOutcomeKind::Inconclusive
            }
        };
        let outcome = FlOutcome {
            kind,
            t_end: run.t_end,
            final_norm: run.final_norm,
            peak_norm: run.peak_norm,
            accepted_steps: run.accepted as u64,
        };
        put(out, outcome, "out")
    })
}
