//! C interface to `harmap`.
//!
//! Every fallible function returns a [`HarmapStatus`]; on failure the message
//! is kept per thread and read with [`harmap_last_error_message`]. Results
//! come back as opaque handles owned by the caller and released with the
//! matching `_free` function. Array getters copy `min(len, cap)` values and
//! return `len`; a null destination is skipped.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use harmap::noncompact::{
    builtin, compute_deformation, extend_monotone, ivp_solve_with, DeformConfig, DeformationResult, ExtensionReport,
    ExtensionScheme, IvpConfig, SignConvention, SplitPolicy, WarpedMetric,
};
use harmap::ode::ActionParams;
use harmap::shooting::{
    find_critical_velocities_with, shoot_with, solve_symmetric_bvp_with, Behavior, ShootConfig, ShootOutcome,
    SolutionRecord, VelocitySearch,
};
use harmap::Error;

/// Status codes. Values 1 to 19 mirror the library's error kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmapStatus {
    Ok = 0,
    InvalidParams = 1,
    Domain = 2,
    StepUnderflow = 3,
    Diverged = 4,
    InsufficientRange = 5,
    Inconclusive = 6,
    NoSignChange = 7,
    SeedNotNegative = 8,
    NotASolution = 9,
    AsymmetricDomain = 10,
    ProfileSingular = 11,
    MonotonicityLost = 12,
    JoinMismatch = 13,
    DerivativeVanishes = 14,
    SplitWeightsInvalid = 15,
    Config = 16,
    Io = 17,
    Csv = 18,
    Json = 19,
    NullPointer = 100,
    InvalidUtf8 = 101,
    Panic = 102,
}

impl From<&Error> for HarmapStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParams(_) => HarmapStatus::InvalidParams,
            Error::Domain(_) => HarmapStatus::Domain,
            Error::StepUnderflow { .. } => HarmapStatus::StepUnderflow,
            Error::Diverged { .. } => HarmapStatus::Diverged,
            Error::InsufficientRange { .. } => HarmapStatus::InsufficientRange,
            Error::Inconclusive(_) => HarmapStatus::Inconclusive,
            Error::NoSignChange { .. } => HarmapStatus::NoSignChange,
            Error::SeedNotNegative { .. } => HarmapStatus::SeedNotNegative,
            Error::NotASolution(_) => HarmapStatus::NotASolution,
            Error::AsymmetricDomain { .. } => HarmapStatus::AsymmetricDomain,
            Error::ProfileSingular { .. } => HarmapStatus::ProfileSingular,
            Error::MonotonicityLost { .. } => HarmapStatus::MonotonicityLost,
            Error::JoinMismatch { .. } => HarmapStatus::JoinMismatch,
            Error::DerivativeVanishes { .. } => HarmapStatus::DerivativeVanishes,
            Error::SplitWeightsInvalid { .. } => HarmapStatus::SplitWeightsInvalid,
            Error::Config(_) => HarmapStatus::Config,
            Error::Io(_) => HarmapStatus::Io,
            Error::Csv(_) => HarmapStatus::Csv,
            Error::Json(_) => HarmapStatus::Json,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmapBehavior {
    BvpSolution = 0,
    BoundedOscillatory = 1,
    Divergent = 2,
    Inconclusive = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmapScheme {
    Continue = 0,
    Blend = 1,
    Ramp = 2,
}

/// A two-sided shot.
pub struct HarmapShot(ShootOutcome);

/// A certified symmetric solution.
pub struct HarmapSolution(SolutionRecord);

/// A warped-product metric.
pub struct HarmapMetric(WarpedMetric);

/// A deformation together with the extension it was computed on.
pub struct HarmapDeformation {
    result: DeformationResult,
    report: ExtensionReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HarmapStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(HarmapStatus::from(&e), e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HarmapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HarmapStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            HarmapStatus::Panic
        }
    }
}

fn null_pointer(what: &str) -> Failure {
    Failure(HarmapStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_slot<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, Failure> {
    let slot = unsafe { p.as_mut() }.ok_or_else(|| null_pointer("output pointer"))?;
    *slot = ptr::null_mut();
    Ok(slot)
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null_pointer("string argument"));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|e| Failure(HarmapStatus::InvalidUtf8, e.to_string()))
}

unsafe fn copy_out(values: impl ExactSizeIterator<Item = f64>, dst: *mut f64, cap: usize) -> usize {
    let len = values.len();
    if !dst.is_null() {
        for (i, v) in values.take(cap).enumerate() {
            unsafe { dst.add(i).write(v) };
        }
    }
    len
}

fn optional(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn harmap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn harmap_status_name(status: HarmapStatus) -> *const c_char {
    let s: &'static CStr = match status {
        HarmapStatus::Ok => c"Ok",
        HarmapStatus::InvalidParams => c"InvalidParams",
        HarmapStatus::Domain => c"Domain",
        HarmapStatus::StepUnderflow => c"StepUnderflow",
        HarmapStatus::Diverged => c"Diverged",
        HarmapStatus::InsufficientRange => c"InsufficientRange",
        HarmapStatus::Inconclusive => c"Inconclusive",
        HarmapStatus::NoSignChange => c"NoSignChange",
        HarmapStatus::SeedNotNegative => c"SeedNotNegative",
        HarmapStatus::NotASolution => c"NotASolution",
        HarmapStatus::AsymmetricDomain => c"AsymmetricDomain",
        HarmapStatus::ProfileSingular => c"ProfileSingular",
        HarmapStatus::MonotonicityLost => c"MonotonicityLost",
        HarmapStatus::JoinMismatch => c"JoinMismatch",
        HarmapStatus::DerivativeVanishes => c"DerivativeVanishes",
        HarmapStatus::SplitWeightsInvalid => c"SplitWeightsInvalid",
        HarmapStatus::Config => c"Config",
        HarmapStatus::Io => c"Io",
        HarmapStatus::Csv => c"Csv",
        HarmapStatus::Json => c"Json",
        HarmapStatus::NullPointer => c"NullPointer",
        HarmapStatus::InvalidUtf8 => c"InvalidUtf8",
        HarmapStatus::Panic => c"Panic",
    };
    s.as_ptr()
}

/// Shoots from `P_j` with velocity `v`. `x_max <= 0` or NaN picks the range
/// from `precision`.
#[no_mangle]
pub unsafe extern "C" fn harmap_shoot(
    g: u32,
    m0: u32,
    m1: u32,
    j: i32,
    v: f64,
    precision: f64,
    x_max: f64,
    out: *mut *mut HarmapShot,
) -> HarmapStatus {
    guard(|| {
        let slot = unsafe { out_slot(out) }?;
        let p = ActionParams::new(g, m0, m1)?;
        let cfg = ShootConfig {
            precision,
            x_max: optional(x_max).filter(|&x| x > 0.0),
            ..ShootConfig::default()
        };
        let o = shoot_with(&p, j, v, &cfg)?;
        *slot = Box::into_raw(Box::new(HarmapShot(o)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn harmap_shot_free(shot: *mut HarmapShot) {
    if !shot.is_null() {
        drop(unsafe { Box::from_raw(shot) });
    }
}

/// Behaviour of the shot; for `BvpSolution` also the lattice indices.
#[no_mangle]
pub unsafe extern "C" fn harmap_shot_behavior(
    shot: *const HarmapShot,
    behavior: *mut HarmapBehavior,
    k_minus: *mut i64,
    k_plus: *mut i64,
) -> HarmapStatus {
    guard(|| {
        let s = unsafe { shot.as_ref() }.ok_or_else(|| null_pointer("shot"))?;
        let (b, km, kp) = match s.0.behavior {
            Behavior::BvpSolution { k_plus, k_minus } => (HarmapBehavior::BvpSolution, k_minus, k_plus),
            Behavior::BoundedOscillatory => (HarmapBehavior::BoundedOscillatory, 0, 0),
            Behavior::Divergent => (HarmapBehavior::Divergent, 0, 0),
            Behavior::Inconclusive => (HarmapBehavior::Inconclusive, 0, 0),
        };
        unsafe {
            if let Some(p) = behavior.as_mut() {
                *p = b;
            }
            if let Some(p) = k_minus.as_mut() {
                *p = km;
            }
            if let Some(p) = k_plus.as_mut() {
                *p = kp;
            }
        }
        Ok(())
    })
}

/// Extrapolated `W(-∞)` and `W(+∞)` with their error bounds.
#[no_mangle]
pub unsafe extern "C" fn harmap_shot_limits(
    shot: *const HarmapShot,
    w_minus: *mut f64,
    w_minus_err: *mut f64,
    w_plus: *mut f64,
    w_plus_err: *mut f64,
) -> HarmapStatus {
    guard(|| {
        let s = &unsafe { shot.as_ref() }.ok_or_else(|| null_pointer("shot"))?.0;
        for (dst, v) in [
            (w_minus, s.l_minus.value),
            (w_minus_err, s.l_minus.error_estimate),
            (w_plus, s.w_plus.value),
            (w_plus_err, s.w_plus.error_estimate),
        ] {
            if let Some(p) = unsafe { dst.as_mut() } {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the samples `(x, r, r')`; returns their count, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn harmap_shot_samples(
    shot: *const HarmapShot,
    x: *mut f64,
    r: *mut f64,
    rp: *mut f64,
    cap: usize,
) -> usize {
    let Some(s) = (unsafe { shot.as_ref() }) else { return 0 };
    let samples = s.0.traj.samples();
    unsafe {
        copy_out(samples.iter().map(|s| s.x), x, cap);
        copy_out(samples.iter().map(|s| s.r), r, cap);
        copy_out(samples.iter().map(|s| s.rp), rp, cap)
    }
}

/// Critical velocities `l < u` of `P_j`. `v_seed` NaN uses the default seed.
#[no_mangle]
pub unsafe extern "C" fn harmap_find_critical_velocities(
    g: u32,
    m0: u32,
    m1: u32,
    j: i32,
    v_seed: f64,
    tol: f64,
    l: *mut f64,
    u: *mut f64,
) -> HarmapStatus {
    guard(|| {
        let (l, u) = unsafe { (l.as_mut(), u.as_mut()) };
        let (Some(l), Some(u)) = (l, u) else {
            return Err(null_pointer("output pointer"));
        };
        let p = ActionParams::new(g, m0, m1)?;
        let search = VelocitySearch {
            v_seed: optional(v_seed),
            ..VelocitySearch::default()
        };
        let c = find_critical_velocities_with(&p, j, &search, tol, &ShootConfig::default())?;
        *l = c.l;
        *u = c.u;
        Ok(())
    })
}

/// Certifies the symmetric solution through `P_j` near `v_critical`.
#[no_mangle]
pub unsafe extern "C" fn harmap_solve(
    g: u32,
    m0: u32,
    m1: u32,
    j: i32,
    v_critical: f64,
    out: *mut *mut HarmapSolution,
) -> HarmapStatus {
    guard(|| {
        let slot = unsafe { out_slot(out) }?;
        let p = ActionParams::new(g, m0, m1)?;
        let s = solve_symmetric_bvp_with(&p, j, v_critical, &ShootConfig::default())?;
        *slot = Box::into_raw(Box::new(HarmapSolution(s)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn harmap_solution_free(sol: *mut HarmapSolution) {
    if !sol.is_null() {
        drop(unsafe { Box::from_raw(sol) });
    }
}

/// Scalar data of a solution: polished velocity, target index `k`,
/// `r(±∞)`, jump `W(+∞) - W(-∞)` and symmetry defect.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmapSolutionInfo {
    pub v: f64,
    pub k: i64,
    pub j_pp: i64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub w_jump: f64,
    pub defect: f64,
}

#[no_mangle]
pub unsafe extern "C" fn harmap_solution_info(sol: *const HarmapSolution, info: *mut HarmapSolutionInfo) -> HarmapStatus {
    guard(|| {
        let s = &unsafe { sol.as_ref() }.ok_or_else(|| null_pointer("solution"))?.0;
        let info = unsafe { info.as_mut() }.ok_or_else(|| null_pointer("info"))?;
        *info = HarmapSolutionInfo {
            v: s.v,
            k: s.k,
            j_pp: s.j_pp,
            r_minus: s.r_minus,
            r_plus: s.r_plus,
            w_jump: s.w_jump(),
            defect: s.defect,
        };
        Ok(())
    })
}

/// Copies the samples `(x, r, r')` of the shifted solution.
#[no_mangle]
pub unsafe extern "C" fn harmap_solution_samples(
    sol: *const HarmapSolution,
    x: *mut f64,
    r: *mut f64,
    rp: *mut f64,
    cap: usize,
) -> usize {
    let Some(s) = (unsafe { sol.as_ref() }) else { return 0 };
    let samples = s.0.traj.samples();
    unsafe {
        copy_out(samples.iter().map(|s| s.x), x, cap);
        copy_out(samples.iter().map(|s| s.r), r, cap);
        copy_out(samples.iter().map(|s| s.rp), rp, cap)
    }
}

/// Built-in metric by name: `flat_cone`, `smoothed` or `two_factor`.
#[no_mangle]
pub unsafe extern "C" fn harmap_metric_builtin(name: *const c_char, out: *mut *mut HarmapMetric) -> HarmapStatus {
    guard(|| {
        let slot = unsafe { out_slot(out) }?;
        let name = unsafe { c_str(name) }?;
        let m = builtin(name).ok_or_else(|| Error::Config(format!("unknown metric '{name}'")))?;
        *slot = Box::into_raw(Box::new(HarmapMetric(m)));
        Ok(())
    })
}

/// Metric from configuration text, as read by `harmap deform --config`.
/// Relative table paths resolve against the current directory.
#[no_mangle]
pub unsafe extern "C" fn harmap_metric_parse(text: *const c_char, out: *mut *mut HarmapMetric) -> HarmapStatus {
    guard(|| {
        let slot = unsafe { out_slot(out) }?;
        let text = unsafe { c_str(text) }?;
        let m = WarpedMetric::parse(text, None)?;
        *slot = Box::into_raw(Box::new(HarmapMetric(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn harmap_metric_free(metric: *mut HarmapMetric) {
    if !metric.is_null() {
        drop(unsafe { Box::from_raw(metric) });
    }
}

/// Number of warping factors including `f₀`; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn harmap_metric_factor_count(metric: *const HarmapMetric) -> usize {
    unsafe { metric.as_ref() }.map_or(0, |m| m.0.multiplicities().len())
}

/// Options of [`harmap_deform`]. NaN `slope` and `window` take the scheme
/// defaults; null `weights` means the uniform split.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HarmapDeformOptions {
    pub v: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub scheme: HarmapScheme,
    pub slope: f64,
    pub window: f64,
    pub weights: *const f64,
    pub n_weights: usize,
    pub ivp_tol: f64,
    pub literal_sign: bool,
}

/// Defaults: `v = 0.5`, `epsilon = 0.5`, `horizon = 10`, blend, uniform
/// split, `ivp_tol = 1e-10`.
#[no_mangle]
pub extern "C" fn harmap_deform_options_default() -> HarmapDeformOptions {
    HarmapDeformOptions {
        v: 0.5,
        epsilon: 0.5,
        horizon: 10.0,
        scheme: HarmapScheme::Blend,
        slope: f64::NAN,
        window: f64::NAN,
        weights: ptr::null(),
        n_weights: 0,
        ivp_tol: 1e-10,
        literal_sign: false,
    }
}

#[no_mangle]
pub unsafe extern "C" fn harmap_deform(
    metric: *const HarmapMetric,
    opts: *const HarmapDeformOptions,
    out: *mut *mut HarmapDeformation,
) -> HarmapStatus {
    guard(|| {
        let slot = unsafe { out_slot(out) }?;
        let m = &unsafe { metric.as_ref() }.ok_or_else(|| null_pointer("metric"))?.0;
        let o = unsafe { opts.as_ref() }.ok_or_else(|| null_pointer("options"))?;
        let (slope, window) = (optional(o.slope), optional(o.window));
        let scheme = match o.scheme {
            HarmapScheme::Continue => ExtensionScheme::ContinueOde,
            HarmapScheme::Blend => ExtensionScheme::CubicBlend { slope, window },
            HarmapScheme::Ramp => ExtensionScheme::Ramp { slope, window },
        };
        let split = if o.weights.is_null() {
            SplitPolicy::Uniform
        } else {
            SplitPolicy::Weights(unsafe { std::slice::from_raw_parts(o.weights, o.n_weights) }.to_vec())
        };
        let base = ivp_solve_with(m, o.v, o.epsilon, &IvpConfig::with_tol(o.ivp_tol))?;
        let ext = extend_monotone(&base, scheme, o.horizon)?;
        let cfg = DeformConfig {
            sign: if o.literal_sign {
                SignConvention::Literal
            } else {
                SignConvention::Corrected
            },
            ..DeformConfig::default()
        };
        let result = compute_deformation(m, &ext, ext.epsilon(), o.horizon, &split, &cfg)?;
        *slot = Box::into_raw(Box::new(HarmapDeformation {
            result,
            report: *ext.report(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn harmap_deformation_free(d: *mut HarmapDeformation) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Scalar data of a deformation. `epsilon` is the join point actually used.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmapDeformationInfo {
    pub epsilon: f64,
    pub horizon: f64,
    pub residual_max: f64,
    pub quad_error: f64,
    pub a_end: f64,
    pub a_max_abs: f64,
    pub t_of_max: f64,
    pub min_rate: f64,
}

#[no_mangle]
pub unsafe extern "C" fn harmap_deformation_info(
    d: *const HarmapDeformation,
    info: *mut HarmapDeformationInfo,
) -> HarmapStatus {
    guard(|| {
        let d = unsafe { d.as_ref() }.ok_or_else(|| null_pointer("deformation"))?;
        let info = unsafe { info.as_mut() }.ok_or_else(|| null_pointer("info"))?;
        let g = d.result.growth();
        *info = HarmapDeformationInfo {
            epsilon: d.result.epsilon,
            horizon: d.result.horizon,
            residual_max: d.result.residual_max,
            quad_error: d.result.quad_error,
            a_end: g.a_end,
            a_max_abs: g.a_max_abs,
            t_of_max: g.t_of_max,
            min_rate: d.report.min_rate,
        };
        Ok(())
    })
}

/// Copies the grid `t`, `r`, `A` and the harmonicity residual.
#[no_mangle]
pub unsafe extern "C" fn harmap_deformation_grid(
    d: *const HarmapDeformation,
    t: *mut f64,
    r: *mut f64,
    a: *mut f64,
    residual: *mut f64,
    cap: usize,
) -> usize {
    let Some(d) = (unsafe { d.as_ref() }) else { return 0 };
    let res = &d.result;
    unsafe {
        copy_out(res.t().iter().copied(), t, cap);
        copy_out(res.r.iter().copied(), r, cap);
        copy_out(res.a.iter().copied(), a, cap);
        copy_out(res.residual.iter().copied(), residual, cap)
    }
}

/// Copies `α_i` on the grid, `i = 0` for the cone factor.
#[no_mangle]
pub unsafe extern "C" fn harmap_deformation_alpha(d: *const HarmapDeformation, i: usize, out: *mut f64, cap: usize) -> usize {
    let Some(d) = (unsafe { d.as_ref() }) else { return 0 };
    match d.result.alphas.alpha.get(i) {
        Some(col) => unsafe { copy_out(col.iter().copied(), out, cap) },
        None => 0,
    }
}
