//! Shooting from the symmetry point `P_j = (0, y_j)` and classification of
//! the shots by the sign of `L(v) = W_v(-∞)`.
//!
//! `L(v) < 0` gives solutions that stay bounded and oscillate, `L(v) > 0`
//! solutions with `|r| → ∞`, and `L(v) = 0` the boundary value problem
//! solutions. The critical velocities `l_j < u_j` bounding the negative
//! region are found by bisection on the sign of `L`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{
    estimate_w_limit, integrate_allow_escape, integrate_two_sided, limit_of_r, uncertified_range, x_cut_for_precision,
    Direction, IntegratorConfig, LimitEstimate, RLimit, Trajectory,
};
use crate::ode::{ActionParams, State, SymmetryPoint};

/// Lattice distance below which a finite limit counts as a boundary value.
pub const LATTICE_TOL: f64 = 1e-4;

/// Numerical settings shared by all shooting operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootConfig {
    /// Local error tolerance of the integrator.
    pub tol: f64,
    /// Target accuracy of `W(±∞)`; fixes the integration range for `m = 1`.
    pub precision: f64,
    pub escape_bound: f64,
    /// Overrides the half-width chosen by [`ShootConfig::range`].
    pub x_max: Option<f64>,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            tol: 1e-12,
            precision: 1e-10,
            escape_bound: 1e3,
            x_max: None,
        }
    }
}

impl ShootConfig {
    pub fn with_precision(precision: f64) -> Self {
        ShootConfig {
            precision,
            ..Self::default()
        }
    }

    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            tol: self.tol,
            escape_bound: self.escape_bound,
            ..IntegratorConfig::default()
        }
    }

    /// Half-width of the symmetric integration interval.
    pub fn range(&self, p: &ActionParams) -> Result<f64> {
        let m = p.require_symmetric()?;
        if let Some(x) = self.x_max {
            if !(x > 0.0 && x <= 50.0) {
                return Err(Error::Domain(format!("x_max = {x} outside (0, 50]")));
            }
            return Ok(x);
        }
        Ok(if m == 1 {
            x_cut_for_precision(p.g(), self.precision)
        } else {
            uncertified_range(m, self.tol)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Behavior {
    /// Both ends settle on the lattice: `r(-∞) = k_minus·π/2` and
    /// `r(+∞) = π/g + k_plus·π/2`.
    BvpSolution { k_plus: i64, k_minus: i64 },
    BoundedOscillatory,
    Divergent,
    Inconclusive,
}

impl Behavior {
    pub fn name(&self) -> &'static str {
        match self {
            Behavior::BvpSolution { .. } => "BvpSolution",
            Behavior::BoundedOscillatory => "BoundedOscillatory",
            Behavior::Divergent => "Divergent",
            Behavior::Inconclusive => "Inconclusive",
        }
    }
}

/// A two-sided shot from `P_j` with velocity `v`.
#[derive(Debug, Clone, Serialize)]
pub struct ShootOutcome {
    #[serde(skip)]
    pub traj: Trajectory,
    pub params: ActionParams,
    pub j: i32,
    pub v: f64,
    pub l_minus: LimitEstimate,
    pub w_plus: LimitEstimate,
    pub r_minus: Option<RLimit>,
    pub r_plus: Option<RLimit>,
    pub behavior: Behavior,
    /// `j` outside `{-2, -1, 0, 1}`, where no solutions are known.
    pub nonstandard_j: bool,
    /// Target index of the symmetric solution, for `BvpSolution` shots.
    pub k: Option<i64>,
}

/// `(j'', k)` for a symmetric solution through `P_j` with
/// `r(-∞) = k_minus·π/2`; `None` unless `k_minus` is even.
pub fn induced_k(g: u32, j: i32, k_minus: i64) -> Option<(i64, i64)> {
    if k_minus.rem_euclid(2) != 0 {
        return None;
    }
    let j_pp = i64::from(j) - k_minus / 2;
    Some((j_pp, (2 * j_pp - i64::from(j)) * i64::from(g) + 1))
}

fn check_velocity(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("velocity {v} is not finite")))
    }
}

pub fn shoot(p: &ActionParams, j: i32, v: f64, precision: f64) -> Result<ShootOutcome> {
    shoot_with(p, j, v, &ShootConfig::with_precision(precision))
}

/// Integrate from `(0, y_j, v)` to `±X` and classify the result.
pub fn shoot_with(p: &ActionParams, j: i32, v: f64, cfg: &ShootConfig) -> Result<ShootOutcome> {
    check_velocity(v)?;
    let x = cfg.range(p)?;
    let y = p.symmetry_point(j).y;
    let traj = integrate_two_sided(p, State::new(0.0, y, v), -x, x, &cfg.integrator())?;
    let l_minus = estimate_w_limit(&traj, Direction::Minus, cfg.precision)?;
    let w_plus = estimate_w_limit(&traj, Direction::Plus, cfg.precision)?;
    let r_minus = limit_of_r(&traj, Direction::Minus).ok();
    let r_plus = limit_of_r(&traj, Direction::Plus).ok();
    let mut out = ShootOutcome {
        traj,
        params: *p,
        j,
        v,
        l_minus,
        w_plus,
        r_minus,
        r_plus,
        behavior: Behavior::Inconclusive,
        nonstandard_j: !(-2..=1).contains(&j),
        k: None,
    };
    out.behavior = classify(&out).unwrap_or(Behavior::Inconclusive);
    if let Behavior::BvpSolution { k_minus, .. } = out.behavior {
        out.k = induced_k(p.g(), j, k_minus).map(|(_, k)| k);
    }
    Ok(out)
}

fn lattice_index(limit: &Option<RLimit>) -> Option<i64> {
    match limit {
        Some(RLimit::Finite {
            lattice_index, distance, ..
        }) if *distance < LATTICE_TOL => Some(*lattice_index),
        _ => None,
    }
}

/// Behaviour implied by the limit estimates of `o`.
///
/// `L` below minus its uncertainty is oscillatory, above it divergent;
/// otherwise both limits of `r` must land on the lattice.
pub fn classify(o: &ShootOutcome) -> Result<Behavior> {
    let l = o.l_minus.value;
    let u = o.l_minus.uncertainty();
    if !l.is_finite() {
        return Err(Error::Inconclusive(format!("L = {l}")));
    }
    if l < -u {
        return Ok(Behavior::BoundedOscillatory);
    }
    if l > u {
        return Ok(Behavior::Divergent);
    }
    match (lattice_index(&o.r_plus), lattice_index(&o.r_minus)) {
        (Some(k_plus), Some(k_minus)) => Ok(Behavior::BvpSolution { k_plus, k_minus }),
        _ => Err(Error::Inconclusive(format!(
            "|L| = {:e} within {u:e} but r does not settle on the lattice at both ends",
            l.abs()
        ))),
    }
}

/// `L(v)` alone, integrating only towards `-∞`.
pub fn lyapunov_limit(p: &ActionParams, j: i32, v: f64, cfg: &ShootConfig) -> Result<LimitEstimate> {
    check_velocity(v)?;
    let x = cfg.range(p)?;
    let y = p.symmetry_point(j).y;
    let traj = integrate_allow_escape(p, State::new(0.0, y, v), -x, &cfg.integrator())?;
    estimate_w_limit(&traj, Direction::Minus, cfg.precision)
}

/// Bracket for [`find_critical_velocities`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySearch {
    pub v_lo: f64,
    pub v_hi: f64,
    /// Velocity with `L < 0`; `None` picks `0` for odd `j` and sweeps
    /// `-0.02·2^i` for even `j`.
    pub v_seed: Option<f64>,
}

impl Default for VelocitySearch {
    fn default() -> Self {
        VelocitySearch {
            v_lo: -3.0,
            v_hi: 3.0,
            v_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalVelocities {
    pub g: u32,
    pub m: u32,
    pub j: i32,
    pub l: f64,
    pub u: f64,
    /// Larger of the two final bisection brackets.
    pub bracket_width: f64,
    pub seed: f64,
    /// `L` at the midpoint of `(l, u)`.
    pub l_mid: f64,
    pub evaluations: usize,
}

fn sweep_seed(f: &mut impl FnMut(f64) -> Result<f64>, j: i32, v_lo: f64, v_hi: f64) -> Result<(f64, f64)> {
    if j.rem_euclid(2) == 1 {
        let l = f(0.0)?;
        return Ok((0.0, l));
    }
    // Shrinking first: the negative region is only known to contain small
    // negative velocities.
    let mut last = (0.0, f64::NAN);
    for i in (0..=10).map(|i: i32| -i).chain(1..=4) {
        let v = -0.02 * 2f64.powi(i);
        if v <= v_lo || v >= v_hi {
            continue;
        }
        let l = f(v)?;
        if l < 0.0 {
            return Ok((v, l));
        }
        last = (v, l);
    }
    Ok(last)
}

fn bisect_sign(f: &mut impl FnMut(f64) -> Result<f64>, mut neg: f64, mut pos: f64, tol: f64) -> Result<(f64, f64)> {
    while (pos - neg).abs() > tol {
        let mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            break;
        }
        if f(mid)? < 0.0 {
            neg = mid;
        } else {
            pos = mid;
        }
    }
    Ok((0.5 * (neg + pos), (pos - neg).abs()))
}

pub fn find_critical_velocities(p: &ActionParams, j: i32, search: &VelocitySearch, tol: f64) -> Result<CriticalVelocities> {
    find_critical_velocities_with(p, j, search, tol, &ShootConfig::default())
}

/// Bisect the sign of `L` on both sides of a seed with `L < 0`.
pub fn find_critical_velocities_with(
    p: &ActionParams,
    j: i32,
    search: &VelocitySearch,
    tol: f64,
    cfg: &ShootConfig,
) -> Result<CriticalVelocities> {
    let m = p.require_symmetric()?;
    if !(tol > 0.0) || !(search.v_lo < search.v_hi) {
        return Err(Error::Domain(format!(
            "need tol > 0 and v_lo < v_hi, got tol = {tol}, [{}, {}]",
            search.v_lo, search.v_hi
        )));
    }
    let mut evaluations = 0;
    let mut f = |v: f64| -> Result<f64> {
        evaluations += 1;
        Ok(lyapunov_limit(p, j, v, cfg)?.value)
    };
    let (seed, l_seed) = match search.v_seed {
        Some(v) => (v, f(v)?),
        None => sweep_seed(&mut f, j, search.v_lo, search.v_hi)?,
    };
    if !(l_seed < 0.0) {
        return Err(Error::SeedNotNegative { v: seed, l: l_seed });
    }
    if !(search.v_lo < seed && seed < search.v_hi) {
        return Err(Error::Domain(format!("seed {seed} outside ({}, {})", search.v_lo, search.v_hi)));
    }
    let l_hi = f(search.v_hi)?;
    if !(l_hi >= 0.0) {
        return Err(Error::NoSignChange {
            lo: seed,
            hi: search.v_hi,
            l_lo: l_seed,
            l_hi,
        });
    }
    let l_lo = f(search.v_lo)?;
    if !(l_lo >= 0.0) {
        return Err(Error::NoSignChange {
            lo: search.v_lo,
            hi: seed,
            l_lo,
            l_hi: l_seed,
        });
    }
    let (u, wu) = bisect_sign(&mut f, seed, search.v_hi, tol)?;
    let (l, wl) = bisect_sign(&mut f, seed, search.v_lo, tol)?;
    let l_mid = f(0.5 * (l + u))?;
    if !(l < u && l_mid < 0.0) {
        return Err(Error::Inconclusive(format!(
            "L({}) = {l_mid:e} is not negative between l = {l} and u = {u}",
            0.5 * (l + u)
        )));
    }
    Ok(CriticalVelocities {
        g: p.g(),
        m,
        j,
        l,
        u,
        bracket_width: wu.max(wl),
        seed,
        l_mid,
        evaluations,
    })
}

/// Refine `v` to a floating-point neighbour pair straddling the sign change
/// of `L` and return the member with the smaller `|L|`.
///
/// Solutions tending to a saddle are unstable in `v`: an error `δv` makes
/// the shot leave the saddle once `δv·e^{|x|}` is of order one.
pub fn polish_velocity(p: &ActionParams, j: i32, v: f64, cfg: &ShootConfig) -> Result<f64> {
    check_velocity(v)?;
    let f = |v: f64| -> Result<f64> { Ok(lyapunov_limit(p, j, v, cfg)?.value) };
    let l0 = f(v)?;
    if l0 == 0.0 {
        return Ok(v);
    }
    let mut h = 1e-12_f64.max(v.abs() * 1e-12);
    let (mut a, mut b) = (v, v);
    let (mut la, mut lb) = (l0, l0);
    while la.signum() == lb.signum() {
        if h > 1e-3 {
            // No sign change nearby: the velocity is as good as it gets.
            return Ok(v);
        }
        a = v - h;
        b = v + h;
        la = f(a)?;
        lb = f(b)?;
        if la.signum() != l0.signum() {
            b = v;
            lb = l0;
        } else if lb.signum() != l0.signum() {
            a = v;
            la = l0;
        }
        h *= 4.0;
    }
    loop {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let lm = f(mid)?;
        if lm == 0.0 {
            return Ok(mid);
        }
        if lm.signum() == la.signum() {
            a = mid;
            la = lm;
        } else {
            b = mid;
            lb = lm;
        }
    }
    Ok(if la.abs() <= lb.abs() { a } else { b })
}

/// A certified symmetric solution.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    #[serde(skip)]
    pub traj: Trajectory,
    pub params: ActionParams,
    pub j: i32,
    /// Index `j''` implied by `r(-∞) = (j - j'')π`.
    pub j_pp: i64,
    pub v: f64,
    /// `r(-∞)` and `r(+∞)` of `traj`.
    pub r_minus: f64,
    pub r_plus: f64,
    /// Target index: `r(π/g) = kπ/g` after shifting by `(j'' - j)π`.
    pub k: i64,
    /// Shift already applied to `traj` and the limits.
    pub shift: f64,
    pub l_minus: LimitEstimate,
    pub w_plus: LimitEstimate,
    /// `sup |r(x) + r(-x) - 2y_j|` over `|x| <= certified_range`.
    pub defect: f64,
    pub certified_range: f64,
}

/// JSON sidecar of a solution.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSidecar {
    pub g: u32,
    pub m: u32,
    pub j: i32,
    pub v: f64,
    pub k: i64,
    #[serde(rename = "L")]
    pub l: f64,
    pub tail_bound: f64,
    pub defect: f64,
}

impl SolutionRecord {
    /// `W(+∞) - W(-∞)`.
    pub fn w_jump(&self) -> f64 {
        self.w_plus.value - self.l_minus.value
    }

    pub fn sidecar(&self) -> SolutionSidecar {
        SolutionSidecar {
            g: self.params.g(),
            m: self.params.m().unwrap_or(0),
            j: self.j,
            v: self.v,
            k: self.k,
            l: self.l_minus.value,
            tail_bound: self.l_minus.tail_bound,
            defect: self.defect,
        }
    }
}

fn finite_limit(limit: &Option<RLimit>, side: &str) -> Result<(f64, i64, f64)> {
    match limit {
        Some(RLimit::Finite {
            value,
            lattice_index,
            distance,
            settled_at,
            ..
        }) if *distance < LATTICE_TOL => Ok((*value, *lattice_index, *settled_at)),
        other => Err(Error::NotASolution(format!("limit at {side} is {other:?}"))),
    }
}

pub fn solve_symmetric_bvp(p: &ActionParams, j: i32, v_critical: f64) -> Result<SolutionRecord> {
    solve_symmetric_bvp_with(p, j, v_critical, &ShootConfig::default())
}

/// Polish `v_critical`, shoot, and certify the result as a symmetric
/// solution through `P_j`.
pub fn solve_symmetric_bvp_with(p: &ActionParams, j: i32, v_critical: f64, cfg: &ShootConfig) -> Result<SolutionRecord> {
    let v = polish_velocity(p, j, v_critical, cfg)?;
    let o = shoot_with(p, j, v, cfg)?;
    if o.l_minus.value.abs() > o.l_minus.uncertainty() + 1e2 * cfg.tol {
        return Err(Error::NotASolution(format!(
            "|L| = {:e} exceeds {:e}",
            o.l_minus.value.abs(),
            o.l_minus.uncertainty()
        )));
    }
    let (r_minus, k_minus, x_minus) = finite_limit(&o.r_minus, "-inf")?;
    let (r_plus, _, x_plus) = finite_limit(&o.r_plus, "+inf")?;
    let Some((j_pp, k)) = induced_k(p.g(), j, k_minus) else {
        return Err(Error::NotASolution(format!("r(-inf) = {r_minus} is not a multiple of π")));
    };
    let n = k_minus / 2;
    let expected_plus = k as f64 * PI / f64::from(p.g()) + n as f64 * PI;
    if (r_plus - expected_plus).abs() > LATTICE_TOL {
        return Err(Error::NotASolution(format!(
            "r(+inf) = {r_plus} does not match the reflected limit {expected_plus}"
        )));
    }
    let certified_range = 0.75 * x_minus.abs().min(x_plus.abs());
    let window = o.traj.clipped(-certified_range, certified_range);
    let defect = verify_point_symmetry(&window, j, 1e-12)?;
    Ok(SolutionRecord {
        traj: o.traj.clipped(x_minus, x_plus),
        params: *p,
        j,
        j_pp,
        v,
        r_minus,
        r_plus,
        k,
        shift: 0.0,
        l_minus: o.l_minus,
        w_plus: o.w_plus,
        defect,
        certified_range,
    })
}

/// `x ↦ 2y_j - r(-x)`, again a solution.
pub fn reflect(traj: &Trajectory, j: i32) -> Trajectory {
    let y = SymmetryPoint::new(traj.params().g(), j).y;
    let samples: Vec<State> = traj
        .samples()
        .iter()
        .rev()
        .map(|s| State::new(-s.x, 2.0 * y - s.r, s.rp))
        .collect();
    let accel: Vec<f64> = traj.accelerations().iter().rev().map(|a| -a).collect();
    Trajectory::from_parts(*traj.params(), samples, accel, *traj.step_stats(), traj.tol())
}

/// `sup |r(x) + r(-x) - 2y_j|` over the samples with `x >= 0`.
///
/// `tol` is the allowed asymmetry `|x_min + x_max|` of the domain.
pub fn verify_point_symmetry(traj: &Trajectory, j: i32, tol: f64) -> Result<f64> {
    let (lo, hi) = (traj.x_min(), traj.x_max());
    if (lo + hi).abs() > tol || !(lo <= 0.0 && hi >= 0.0) {
        return Err(Error::AsymmetricDomain { x_min: lo, x_max: hi });
    }
    let y = SymmetryPoint::new(traj.params().g(), j).y;
    let mut defect = 0.0_f64;
    for s in traj.samples().iter().filter(|s| s.x >= 0.0) {
        let x = (-s.x).max(lo);
        if let Some(m) = traj.eval(x) {
            defect = defect.max((s.r + m.r - 2.0 * y).abs());
        }
    }
    Ok(defect)
}

/// Shift a symmetric solution by `(j'' - j')π`; it then solves the
/// boundary value problem with target index `k = (2j'' - j')g + 1`.
pub fn to_k_solution(sol: &SolutionRecord, j_pp: i64) -> SolutionRecord {
    let dn = j_pp - i64::from(sol.j);
    let delta = dn as f64 * PI;
    let mut out = sol.clone();
    out.traj = sol.traj.shifted(delta);
    out.r_minus += delta;
    out.r_plus += delta;
    out.shift += delta;
    out.j_pp = j_pp;
    out.k = (2 * j_pp - i64::from(sol.j)) * i64::from(sol.params.g()) + 1;
    out
}

/// Same multiplicities with `g` doubled; the problems of the doubled action
/// describe self-maps of `SO(ℓ)`.
pub fn so_group_relabel(p: &ActionParams) -> ActionParams {
    ActionParams::unchecked(2 * p.g(), p.m0(), p.m1())
}
