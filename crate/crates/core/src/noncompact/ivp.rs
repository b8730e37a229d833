//! The singular initial value problem `r(0) = 0`, `ṙ(0) = v` for the radial
//! equation, launched from a cubic series at `t = δ`.

use std::cell::RefCell;

use serde::Serialize;

use super::metric::WarpedMetric;
use crate::error::{Error, Result};
use crate::integrator::dopri::{self, hermite, StepControl, StepStats, Stop};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpConfig {
    pub tol: f64,
    /// Series launch point.
    pub delta: f64,
    pub escape_bound: f64,
    pub max_steps: usize,
    /// Re-solve from `δ/2` and require `r(t_end)` to move by less than `10·tol`.
    pub check_launch: bool,
}

impl Default for IvpConfig {
    fn default() -> Self {
        IvpConfig {
            tol: 1e-10,
            delta: 1e-4,
            escape_bound: 1e3,
            max_steps: 1_000_000,
            check_launch: true,
        }
    }
}

impl IvpConfig {
    pub fn with_tol(tol: f64) -> Self {
        IvpConfig { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(1e-14..=1e-3).contains(&self.tol) {
            return Err(Error::Domain(format!("tol = {:e} outside [1e-14, 1e-3]", self.tol)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.1) {
            return Err(Error::Domain(format!("delta = {} outside (0, 0.1]", self.delta)));
        }
        if !(self.escape_bound > 0.0) || self.max_steps == 0 {
            return Err(Error::Domain("escape bound and step budget must be positive".into()));
        }
        Ok(())
    }
}

/// `(r, ṙ, r̈)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialJet {
    pub r: f64,
    pub rdot: f64,
    pub rddot: f64,
}

/// Solution of the radial equation on `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct RadialTrajectory {
    metric: WarpedMetric,
    v: f64,
    r3: f64,
    delta: f64,
    t: Vec<f64>,
    r: Vec<f64>,
    rdot: Vec<f64>,
    rddot: Vec<f64>,
    stats: StepStats,
    launch_change: Option<f64>,
    cfg: IvpConfig,
}

impl RadialTrajectory {
    pub fn metric(&self) -> &WarpedMetric {
        &self.metric
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Cubic series coefficient used at the launch.
    pub fn r3(&self) -> f64 {
        self.r3
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Nodes, starting with `t = 0`.
    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn rates(&self) -> &[f64] {
        &self.rdot
    }

    pub fn step_stats(&self) -> &StepStats {
        &self.stats
    }

    /// `|r(t_end)|` change under halving `δ`, when checked.
    pub fn launch_change(&self) -> Option<f64> {
        self.launch_change
    }

    pub fn end(&self) -> RadialJet {
        let n = self.t.len() - 1;
        RadialJet {
            r: self.r[n],
            rdot: self.rdot[n],
            rddot: self.rddot[n],
        }
    }

    /// Dense output. On `[0, δ]` the series is used; beyond, Hermite
    /// interpolation of `(r, ṙ)` with `r̈` taken from the equation.
    pub fn eval(&self, t: f64) -> Result<RadialJet> {
        if !(0.0..=self.t_end()).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.t_end())));
        }
        if t <= self.delta {
            return Ok(RadialJet {
                r: self.v * t + self.r3 * t * t * t,
                rdot: self.v + 3.0 * self.r3 * t * t,
                rddot: 6.0 * self.r3 * t,
            });
        }
        let k = self.t.partition_point(|&x| x <= t).clamp(2, self.t.len() - 1) - 1;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let (r, _) = hermite(t0, t1, self.r[k], self.r[k + 1], self.rdot[k], self.rdot[k + 1], t);
        let (rdot, _) = hermite(t0, t1, self.rdot[k], self.rdot[k + 1], self.rddot[k], self.rddot[k + 1], t);
        let rddot = self.metric.accel(t, r, rdot)?;
        Ok(RadialJet { r, rdot, rddot })
    }
}

/// Cubic coefficient `r₃` of `r = v t + r₃ t³ + …` at the singular orbit.
///
/// With `f₀ = t + c₀ t³ + …` the `O(t)` balance gives
/// `r₃ = 2 k₀ c₀ (v³ − v) / (3 + k₀)`; the compact factors cancel at this
/// order. `c₀` is extracted from `f̈₀` near 0 by one Richardson step.
pub fn series_cubic(metric: &WarpedMetric, v: f64) -> Result<f64> {
    let h = 1e-3;
    let q = |t: f64| -> Result<f64> { Ok(metric.f0().jet(t)?.ddf / (6.0 * t)) };
    let c0 = 2.0 * q(h)? - q(2.0 * h)?;
    let k0 = f64::from(metric.k0());
    Ok(2.0 * k0 * c0 * (v * v * v - v) / (3.0 + k0))
}

pub fn ivp_solve(metric: &WarpedMetric, v: f64, t_end: f64, tol: f64) -> Result<RadialTrajectory> {
    ivp_solve_with(metric, v, t_end, &IvpConfig::with_tol(tol))
}

pub fn ivp_solve_with(metric: &WarpedMetric, v: f64, t_end: f64, cfg: &IvpConfig) -> Result<RadialTrajectory> {
    cfg.validate()?;
    if !v.is_finite() {
        return Err(Error::Domain(format!("v = {v}")));
    }
    if !(t_end.is_finite() && t_end > cfg.delta) {
        return Err(Error::Domain(format!("t_end = {t_end} must exceed delta = {}", cfg.delta)));
    }
    let mut traj = solve_from_delta(metric, v, t_end, cfg)?;
    if cfg.check_launch {
        let half = IvpConfig {
            delta: 0.5 * cfg.delta,
            check_launch: false,
            ..*cfg
        };
        let other = solve_from_delta(metric, v, t_end, &half)?;
        let change = (other.end().r - traj.end().r).abs();
        traj.launch_change = Some(change);
        if !(change < 10.0 * cfg.tol) {
            return Err(Error::Inconclusive(format!(
                "series launch not converged: halving delta moves r({t_end}) by {change:e}"
            )));
        }
    }
    Ok(traj)
}

fn solve_from_delta(metric: &WarpedMetric, v: f64, t_end: f64, cfg: &IvpConfig) -> Result<RadialTrajectory> {
    let r3 = series_cubic(metric, v)?;
    let d = cfg.delta;
    let seg = segment(metric, d, [v * d + r3 * d * d * d, v + 3.0 * r3 * d * d], t_end, cfg)?;
    let mut traj = RadialTrajectory {
        metric: metric.clone(),
        v,
        r3,
        delta: d,
        t: vec![0.0],
        r: vec![0.0],
        rdot: vec![v],
        rddot: vec![0.0],
        stats: StepStats::default(),
        launch_change: None,
        cfg: *cfg,
    };
    traj.append(seg, false);
    Ok(traj)
}

impl RadialTrajectory {
    /// Continues the solution from its last node to `t_end`.
    pub fn extend_to(&self, t_end: f64) -> Result<RadialTrajectory> {
        let mut out = self.clone();
        let e = self.end();
        if t_end > self.t_end() {
            let seg = segment(&self.metric, self.t_end(), [e.r, e.rdot], t_end, &self.cfg)?;
            out.append(seg, true);
        }
        Ok(out)
    }

    fn append(&mut self, run: dopri::RawRun, skip_first: bool) {
        let skip = usize::from(skip_first);
        for ((t, y), dy) in run.t.iter().zip(&run.y).zip(&run.dy).skip(skip) {
            self.t.push(*t);
            self.r.push(y[0]);
            self.rdot.push(y[1]);
            self.rddot.push(dy[1]);
        }
        self.stats = self.stats.merge(&run.stats);
    }
}

fn segment(metric: &WarpedMetric, t0: f64, y0: [f64; 2], t_end: f64, cfg: &IvpConfig) -> Result<dopri::RawRun> {
    let ctl = StepControl {
        atol: cfg.tol,
        rtol: cfg.tol,
        min_step: 1e-14,
        max_steps: cfg.max_steps,
        rate_scaled: false,
    };
    // Profile failures at trial stages only matter if the run cannot recover.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let bound = cfg.escape_bound;
    let run = dopri::integrate_adaptive(
        |t, y| match metric.accel(t, y[0], y[1]) {
            Ok(a) => [y[1], a],
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                [f64::NAN, f64::NAN]
            }
        },
        t0,
        y0,
        t_end,
        &ctl,
        |_, y| !(y[0].abs() <= bound && y[1].is_finite()),
    );
    let t_last = *run.t.last().unwrap_or(&t0);
    match run.stop {
        Stop::Reached => Ok(run),
        Stop::Aborted => Err(Error::Diverged {
            x: t_last,
            bound,
            partial: None,
        }),
        Stop::Underflow | Stop::TooManySteps => Err(match failure.into_inner() {
            Some(e) => e,
            None if run.stop == Stop::Underflow => Error::StepUnderflow {
                x: t_last,
                min_step: ctl.min_step,
            },
            None => Error::Inconclusive(format!("step budget exhausted at t = {t_last}")),
        }),
    }
}
