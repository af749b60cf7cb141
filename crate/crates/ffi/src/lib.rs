//! C ABI over the numerical core: opaque handles, status codes, and a
//! thread-local last-error message. The generated header lives in
//! `include/blowup_lab.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use blowup_lab::constructions::{sequence_theta, FamilyId};
use blowup_lab::dynamics::{classify, gf_integrate, FlowConfig, Verdict};
use blowup_lab::{
    gradient, realize, risk, ActivationKind, Domain, Error, ParamVector, TargetFunction,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlabStatus {
    Ok = 0,
    InvalidArgument = 1,
    Unsupported = 2,
    NoConvergence = 3,
    Numerical = 4,
}

/// Trajectory classification codes for `blab_gf_classify`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlabVerdict {
    Diverging = 0,
    Converged = 1,
    Undecided = 2,
}

/// Summary statistics of a gradient-flow run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BlabGfSummary {
    pub verdict: BlabVerdict,
    pub initial_risk: f64,
    pub final_risk: f64,
    pub final_grad_norm: f64,
    pub final_param_norm: f64,
    pub norm_trend_slope: f64,
    pub samples: usize,
}

pub struct BlabKind {
    inner: ActivationKind,
}

pub struct BlabParams {
    inner: ParamVector,
}

pub struct BlabTarget {
    inner: TargetFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error").expect("static"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BlabStatus {
    match e {
        Error::UnsupportedKind(_) => BlabStatus::Unsupported,
        Error::QuadratureNoConvergence { .. } | Error::SolverFailure(_) => {
            BlabStatus::NoConvergence
        }
        Error::NonFinite(_) | Error::GradientFailure(_) => BlabStatus::Numerical,
        _ => BlabStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> BlabStatus {
    let code = status_of(&e);
    set_error(e.to_string());
    code
}

/// Message describing the most recent error on this thread, or NULL when no
/// error has occurred. The pointer stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn blab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

unsafe fn parse_utf8<'a>(s: *const c_char) -> Result<&'a str, Error> {
    if s.is_null() {
        return Err(Error::InvalidParameter("null string".into()));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Error::InvalidParameter("string is not valid UTF-8".into()))
}

/// Parse an activation-kind string (`"relu"`, `"leaky_relu:0.1"`,
/// `"isru:1.5"`, ...). Returns NULL on failure.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn blab_kind_parse(spec: *const c_char) -> *mut BlabKind {
    let run = || -> Result<ActivationKind, Error> { ActivationKind::parse(parse_utf8(spec)?) };
    match run() {
        Ok(inner) => Box::into_raw(Box::new(BlabKind { inner })),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `kind` must come from `blab_kind_parse` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn blab_kind_free(kind: *mut BlabKind) {
    if !kind.is_null() {
        drop(Box::from_raw(kind));
    }
}

/// Evaluate the activation at `x`.
///
/// # Safety
/// `kind` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blab_kind_eval(
    kind: *const BlabKind,
    x: f64,
    out: *mut f64,
) -> BlabStatus {
    if kind.is_null() || out.is_null() {
        return fail(Error::InvalidParameter("null pointer".into()));
    }
    match (*kind).inner.eval(x) {
        Ok(v) => {
            *out = v;
            BlabStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Derivative of the activation at `x` (left one-sided at kinks).
///
/// # Safety
/// `kind` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blab_kind_derivative(
    kind: *const BlabKind,
    x: f64,
    out: *mut f64,
) -> BlabStatus {
    if kind.is_null() || out.is_null() {
        return fail(Error::InvalidParameter("null pointer".into()));
    }
    match (*kind).inner.derivative(x) {
        Ok(v) => {
            *out = v;
            BlabStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Build a parameter vector from its `3h + 1` flat entries.
///
/// # Safety
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn blab_params_new(
    h: usize,
    values: *const f64,
    len: usize,
) -> *mut BlabParams {
    if values.is_null() {
        fail(Error::InvalidParameter("null values pointer".into()));
        return ptr::null_mut();
    }
    let slice = std::slice::from_raw_parts(values, len);
    match ParamVector::new(h, slice.to_vec()) {
        Ok(inner) => Box::into_raw(Box::new(BlabParams { inner })),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// Instantiate an explicit family member (`"relu_indicator"`, ...) at index
/// `n`, width `h`, on `[lo, hi]`.
///
/// # Safety
/// `family` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn blab_params_from_family(
    family: *const c_char,
    n: u32,
    lo: f64,
    hi: f64,
    h: usize,
) -> *mut BlabParams {
    let run = || -> Result<ParamVector, Error> {
        let id = FamilyId::parse(parse_utf8(family)?)?;
        sequence_theta(id, n, Domain::new(lo, hi)?, h)
    };
    match run() {
        Ok(inner) => Box::into_raw(Box::new(BlabParams { inner })),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `params` must come from a `blab_params_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn blab_params_free(params: *mut BlabParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Number of flat entries (`3h + 1`).
///
/// # Safety
/// `params` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn blab_params_dim(params: *const BlabParams) -> usize {
    if params.is_null() {
        0
    } else {
        (*params).inner.dim()
    }
}

/// Parse a target string (`"indicator"`, `"square"`, `"poly:1,-2"`, ...).
///
/// # Safety
/// `spec` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn blab_target_parse(spec: *const c_char) -> *mut BlabTarget {
    let run = || -> Result<TargetFunction, Error> { TargetFunction::parse(parse_utf8(spec)?) };
    match run() {
        Ok(inner) => Box::into_raw(Box::new(BlabTarget { inner })),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `target` must come from `blab_target_parse`.
#[no_mangle]
pub unsafe extern "C" fn blab_target_free(target: *mut BlabTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// Realization value at `x`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn blab_realize(
    params: *const BlabParams,
    kind: *const BlabKind,
    x: f64,
    out: *mut f64,
) -> BlabStatus {
    if params.is_null() || kind.is_null() || out.is_null() {
        return fail(Error::InvalidParameter("null pointer".into()));
    }
    match realize(&(*params).inner, (*kind).inner, x) {
        Ok(v) => {
            *out = v;
            BlabStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Risk over `[lo, hi]`: exact for rectified power members, adaptive
/// quadrature at tolerance `tol` otherwise. `est_error` may be NULL.
///
/// # Safety
/// All non-NULL pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn blab_risk(
    params: *const BlabParams,
    kind: *const BlabKind,
    target: *const BlabTarget,
    lo: f64,
    hi: f64,
    tol: f64,
    out: *mut f64,
    est_error: *mut f64,
) -> BlabStatus {
    if params.is_null() || kind.is_null() || target.is_null() || out.is_null() {
        return fail(Error::InvalidParameter("null pointer".into()));
    }
    let run = || -> Result<blowup_lab::RiskReport, Error> {
        risk(&(*params).inner, (*kind).inner, &(*target).inner, Domain::new(lo, hi)?, tol)
    };
    match run() {
        Ok(report) => {
            *out = report.value;
            if !est_error.is_null() {
                *est_error = report.est_abs_error;
            }
            BlabStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Generalized risk gradient; `out` must hold `3h + 1` doubles.
///
/// # Safety
/// All pointers must be valid and `out_len` must equal the parameter
/// dimension.
#[no_mangle]
pub unsafe extern "C" fn blab_gradient(
    params: *const BlabParams,
    kind: *const BlabKind,
    target: *const BlabTarget,
    lo: f64,
    hi: f64,
    out: *mut f64,
    out_len: usize,
) -> BlabStatus {
    if params.is_null() || kind.is_null() || target.is_null() || out.is_null() {
        return fail(Error::InvalidParameter("null pointer".into()));
    }
    if out_len != (*params).inner.dim() {
        return fail(Error::InvalidParameter(format!(
            "output length {out_len} does not match dimension {}",
            (*params).inner.dim()
        )));
    }
    let run = || -> Result<Vec<f64>, Error> {
        gradient(&(*params).inner, (*kind).inner, &(*target).inner, Domain::new(lo, hi)?)
    };
    match run() {
        Ok(g) => {
            std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&g);
            BlabStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Integrate the gradient flow from `params` for time `t_end` and classify
/// the run against `eps_floor`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn blab_gf_classify(
    params: *const BlabParams,
    kind: *const BlabKind,
    target: *const BlabTarget,
    lo: f64,
    hi: f64,
    t_end: f64,
    eps_floor: f64,
    out: *mut BlabGfSummary,
) -> BlabStatus {
    if params.is_null() || kind.is_null() || target.is_null() || out.is_null() {
        return fail(Error::InvalidParameter("null pointer".into()));
    }
    let run = || -> Result<BlabGfSummary, Error> {
        let cfg = FlowConfig { t_end, record_stride: 4, ..Default::default() };
        let tr = gf_integrate(
            &(*params).inner,
            (*kind).inner,
            &(*target).inner,
            Domain::new(lo, hi)?,
            &cfg,
        )?;
        let verdict = classify(
            &tr,
            eps_floor,
            blowup_lab::dynamics::DEFAULT_GRAD_TOL,
            blowup_lab::dynamics::DEFAULT_DISP_TOL,
        );
        let last = tr.final_sample();
        Ok(BlabGfSummary {
            verdict: match verdict {
                Verdict::Diverging { .. } => BlabVerdict::Diverging,
                Verdict::Converged { .. } => BlabVerdict::Converged,
                Verdict::Undecided { .. } => BlabVerdict::Undecided,
            },
            initial_risk: tr.initial_risk(),
            final_risk: last.risk,
            final_grad_norm: last.grad_norm,
            final_param_norm: last.param_norm,
            norm_trend_slope: tr.norm_trend_slope(),
            samples: tr.samples.len(),
        })
    };
    match run() {
        Ok(summary) => {
            *out = summary;
            BlabStatus::Ok
        }
        Err(e) => fail(e),
    }
}
