//! C ABI over `arsg-core`: an opaque optimizer handle plus the gain-analysis
//! helpers. Every function returns an [`ArsgStatus`]; on failure the message is
//! available from [`arsg_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use arsg_core::dynsys::{argmin_gain, build_dynsys, eigenvalues, gain_at, stationary_variance, theorem1_rate};
use arsg_core::dynsys::{NoiseModel, RateAssumption};
use arsg_core::optim::{FeasibleBox, HyperParams, Optimizer, OptimizerKind, Schedule};
use arsg_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArsgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    Precondition = 5,
    Divergent = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArsgKind {
    Sgd0 = 0,
    Hb = 1,
    Nag = 2,
    Rsg = 3,
    RsgPractical = 4,
    Amsgrad = 5,
    Arsg = 6,
}

/// Shape of an iteration-dependent coefficient.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArsgSchedule {
    Constant = 0,
    /// `base / sqrt(t)`
    InvSqrt = 1,
    /// `base / t`
    Inv = 2,
    /// `base / t^2`
    InvSquare = 3,
}

/// Schedule fields hold `ArsgSchedule` values.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ArsgHyper {
    pub alpha: f64,
    pub alpha_schedule: u32,
    pub beta1: f64,
    pub beta1_schedule: u32,
    pub beta2: f64,
    pub mu: f64,
    pub epsilon: f64,
}

/// Opaque optimizer handle.
pub struct ArsgOptimizer {
    inner: Optimizer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ArsgStatus {
    match e {
        Error::DimensionMismatch { .. } => ArsgStatus::DimensionMismatch,
        Error::NonFiniteGradient { .. } => ArsgStatus::NonFinite,
        Error::PreconditionViolated { .. } => ArsgStatus::Precondition,
        Error::DivergentVariance { .. } | Error::NoConvergentTau { .. } => ArsgStatus::Divergent,
        _ => ArsgStatus::InvalidArgument,
    }
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (ArsgStatus, String)>) -> ArsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ArsgStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ArsgStatus::Panic
        }
    }
}

fn core<T>(r: arsg_core::Result<T>) -> Result<T, (ArsgStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (ArsgStatus, String) {
    (ArsgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (ArsgStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (ArsgStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a>(p: *const ArsgOptimizer) -> Result<&'a ArsgOptimizer, (ArsgStatus, String)> {
    p.as_ref().ok_or_else(|| null("optimizer"))
}

unsafe fn handle_mut<'a>(p: *mut ArsgOptimizer) -> Result<&'a mut ArsgOptimizer, (ArsgStatus, String)> {
    p.as_mut().ok_or_else(|| null("optimizer"))
}

fn invalid(msg: String) -> (ArsgStatus, String) {
    (ArsgStatus::InvalidArgument, msg)
}

fn kind(k: u32) -> Result<OptimizerKind, (ArsgStatus, String)> {
    let kinds = [
        (ArsgKind::Sgd0, OptimizerKind::Sgd0),
        (ArsgKind::Hb, OptimizerKind::Hb),
        (ArsgKind::Nag, OptimizerKind::Nag),
        (ArsgKind::Rsg, OptimizerKind::Rsg),
        (ArsgKind::RsgPractical, OptimizerKind::RsgPractical),
        (ArsgKind::Amsgrad, OptimizerKind::Amsgrad),
        (ArsgKind::Arsg, OptimizerKind::Arsg),
    ];
    kinds
        .into_iter()
        .find(|(c, _)| *c as u32 == k)
        .map(|(_, r)| r)
        .ok_or_else(|| invalid(format!("unknown optimizer kind {k}")))
}

fn schedule(s: u32, base: f64) -> Result<Schedule, (ArsgStatus, String)> {
    Ok(match s {
        x if x == ArsgSchedule::Constant as u32 => Schedule::Constant { base },
        x if x == ArsgSchedule::InvSqrt as u32 => Schedule::InvSqrt { base },
        x if x == ArsgSchedule::Inv as u32 => Schedule::Inv { base },
        x if x == ArsgSchedule::InvSquare as u32 => Schedule::InvSquare { base },
        other => return Err(invalid(format!("unknown schedule {other}"))),
    })
}

fn hyper_params(h: &ArsgHyper) -> Result<HyperParams, (ArsgStatus, String)> {
    Ok(HyperParams {
        alpha: schedule(h.alpha_schedule, h.alpha)?,
        beta1: schedule(h.beta1_schedule, h.beta1)?,
        beta2: h.beta2,
        mu: Schedule::constant(h.mu),
        epsilon: h.epsilon,
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn arsg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn arsg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Hyper-parameters with constant schedules and the given values.
#[no_mangle]
pub extern "C" fn arsg_hyper_constant(alpha: f64, beta1: f64, beta2: f64, mu: f64, epsilon: f64) -> ArsgHyper {
    ArsgHyper {
        alpha,
        alpha_schedule: ArsgSchedule::Constant as u32,
        beta1,
        beta1_schedule: ArsgSchedule::Constant as u32,
        beta2,
        mu,
        epsilon,
    }
}

/// Creates an optimizer of kind `kind_id` (an `ArsgKind` value) at `x0`
/// (length `dim`) and stores the handle in `*out_handle`.
///
/// # Safety
/// `hyper` must point to a valid `ArsgHyper`, `x0` to `dim` readable doubles
/// and `out_handle` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_new(
    kind_id: u32,
    hyper: *const ArsgHyper,
    x0: *const f64,
    dim: usize,
    out_handle: *mut *mut ArsgOptimizer,
) -> ArsgStatus {
    guard(|| {
        let out_handle = out(out_handle, "out_handle")?;
        *out_handle = ptr::null_mut();
        let hyper = hyper.as_ref().ok_or_else(|| null("hyper"))?;
        if dim == 0 {
            return Err(invalid("dimension must be positive".into()));
        }
        let x0 = slice(x0, dim, "x0")?.to_vec();
        let inner = core(Optimizer::new(kind(kind_id)?, hyper_params(hyper)?, x0))?;
        *out_handle = Box::into_raw(Box::new(ArsgOptimizer { inner }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `opt` must be NULL or a handle from [`arsg_optimizer_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_free(opt: *mut ArsgOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

/// Restricts the iterates of an adaptive optimizer to `[lower, upper]`; the
/// current point is clamped into the box.
///
/// # Safety
/// `opt` must be a live handle, `lower` and `upper` must each point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_set_box(
    opt: *mut ArsgOptimizer,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
) -> ArsgStatus {
    guard(|| {
        let opt = handle_mut(opt)?;
        let lower = slice(lower, dim, "lower")?.to_vec();
        let upper = slice(upper, dim, "upper")?.to_vec();
        let b = core(FeasibleBox::new(lower, upper))?;
        opt.inner = core(opt.inner.clone().with_box(b))?;
        Ok(())
    })
}

/// Applies one step with gradient `grad` (length `dim`).
///
/// # Safety
/// `opt` must be a live handle and `grad` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_step(opt: *mut ArsgOptimizer, grad: *const f64, dim: usize) -> ArsgStatus {
    guard(|| {
        let opt = handle_mut(opt)?;
        let g = slice(grad, dim, "grad")?;
        core(opt.inner.step(g))
    })
}

/// Copies the current iterate into `out_params` (length `dim`).
///
/// # Safety
/// `opt` must be a live handle and `out_params` must point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_params(opt: *const ArsgOptimizer, out_params: *mut f64, dim: usize) -> ArsgStatus {
    guard(|| {
        let opt = handle(opt)?;
        let x = opt.inner.params();
        if dim != x.len() {
            return core(Err(Error::DimensionMismatch { expected: x.len(), found: dim }));
        }
        if out_params.is_null() {
            return Err(null("out_params"));
        }
        std::slice::from_raw_parts_mut(out_params, dim).copy_from_slice(x);
        Ok(())
    })
}

/// Writes the dimension of the iterate to `*out_dim`.
///
/// # Safety
/// `opt` must be a live handle and `out_dim` writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_dim(opt: *const ArsgOptimizer, out_dim: *mut usize) -> ArsgStatus {
    guard(|| {
        let opt = handle(opt)?;
        *out(out_dim, "out_dim")? = opt.inner.params().len();
        Ok(())
    })
}

/// Writes the 1-based index of the next step to `*out_t`.
///
/// # Safety
/// `opt` must be a live handle and `out_t` writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_optimizer_iteration(opt: *const ArsgOptimizer, out_t: *mut u64) -> ArsgStatus {
    guard(|| {
        let opt = handle(opt)?;
        *out(out_t, "out_t")? = opt.inner.state.t;
        Ok(())
    })
}

/// Eigenvalues of the gain matrix as `[re1, im1, re2, im2]`.
///
/// # Safety
/// `out_roots` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn arsg_eigenvalues(beta: f64, mu: f64, tau: f64, out_roots: *mut f64) -> ArsgStatus {
    guard(|| {
        if out_roots.is_null() {
            return Err(null("out_roots"));
        }
        let (r1, r2) = eigenvalues(beta, mu, tau);
        std::slice::from_raw_parts_mut(out_roots, 4).copy_from_slice(&[r1.re, r1.im, r2.re, r2.im]);
        Ok(())
    })
}

/// Gain factor `max(|r1|, |r2|)` at `(beta, mu, tau)`.
///
/// # Safety
/// `out_gain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_gain_factor(beta: f64, mu: f64, tau: f64, out_gain: *mut f64) -> ArsgStatus {
    guard(|| {
        let o = out(out_gain, "out_gain")?;
        core(build_dynsys(beta, mu, tau, [0.0, 0.0]))?;
        *o = gain_at(beta, mu, tau);
        Ok(())
    })
}

/// Stationary variance of the error along one direction with `tau = alpha * lambda`.
///
/// # Safety
/// `out_var` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_stationary_variance(
    beta: f64,
    mu: f64,
    tau: f64,
    alpha: f64,
    sigma: f64,
    out_var: *mut f64,
) -> ArsgStatus {
    guard(|| {
        let o = out(out_var, "out_var")?;
        let point = core(build_dynsys(beta, mu, tau, [0.0, 0.0]))?;
        *o = core(stationary_variance(&point, alpha, core(NoiseModel::new(sigma))?))?;
        Ok(())
    })
}

/// Predicted worst-case rate of RSG with exact gradients.
///
/// # Safety
/// `out_rate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_theorem1_rate(
    kappa: f64,
    c_alpha: f64,
    c_beta: f64,
    c_mu: f64,
    out_rate: *mut f64,
) -> ArsgStatus {
    guard(|| {
        let o = out(out_rate, "out_rate")?;
        *o = core(theorem1_rate(&RateAssumption { kappa, c_alpha, c_beta, c_mu }))?;
        Ok(())
    })
}

/// Minimizer of the gain factor over `tau` in `[tau_lo, tau_hi]`.
///
/// # Safety
/// `out_tau` and `out_gain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_argmin_gain(
    beta: f64,
    mu: f64,
    tau_lo: f64,
    tau_hi: f64,
    out_tau: *mut f64,
    out_gain: *mut f64,
) -> ArsgStatus {
    guard(|| {
        let ot = out(out_tau, "out_tau")?;
        let og = out(out_gain, "out_gain")?;
        let (tau, gain) = core(argmin_gain(beta, mu, (tau_lo, tau_hi)))?;
        *ot = tau;
        *og = gain;
        Ok(())
    })
}

/// Step-size factor applied when the observation factor doubles from `mu`.
///
/// # Safety
/// `out_factor` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arsg_obsb_alpha_factor(
    beta1: f64,
    mu: f64,
    tau_lo: f64,
    tau_hi: f64,
    out_factor: *mut f64,
) -> ArsgStatus {
    guard(|| {
        let o = out(out_factor, "out_factor")?;
        *o = core(arsg_core::obsb::alpha_factor(beta1, mu, (tau_lo, tau_hi)))?;
        Ok(())
    })
}
