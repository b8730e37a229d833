//! Adaptive integration of the `x`-variable ODE and estimation of the
//! limits of `W` and `r` at `±∞`.

pub(crate) mod dopri;
mod limits;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{lyapunov_w_unchecked, rhs_x_unchecked, ActionParams, State};

pub use dopri::{StepStats, ORDER};
pub use limits::{estimate_w_limit, limit_of_r, limit_of_r_with, tail_bound_at, uncertified_range, x_cut_for_precision, LimitConfig, LimitEstimate, RLimit};

use dopri::{RawRun, StepControl, Stop};

/// Smallest accepted step before the run is reported as underflowing.
pub const MIN_STEP: f64 = 1e-14;

/// Which end of the real line a limit refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Minus,
    Plus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Minus => -1.0,
            Direction::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub tol: f64,
    /// Abort once `|r|` exceeds this.
    pub escape_bound: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            tol: 1e-10,
            escape_bound: 1e3,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorConfig {
            tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1e-13..=1e-3).contains(&self.tol) {
            return Err(Error::Domain(format!("tol = {:e} outside [1e-13, 1e-3]", self.tol)));
        }
        if !(self.escape_bound > 0.0) {
            return Err(Error::Domain("escape bound must be positive".into()));
        }
        Ok(())
    }
}

/// Numerical solution of the `(g, m)`-ODE with cubic Hermite dense output.
///
/// Samples are stored in increasing `x` regardless of the direction of
/// integration.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    params: ActionParams,
    samples: Vec<State>,
    #[serde(skip)]
    accel: Vec<f64>,
    step_stats: StepStats,
    tol: f64,
    escaped_minus: bool,
    escaped_plus: bool,
}

impl Trajectory {
    pub(crate) fn from_parts(params: ActionParams, samples: Vec<State>, accel: Vec<f64>, step_stats: StepStats, tol: f64) -> Self {
        debug_assert_eq!(samples.len(), accel.len());
        debug_assert!(samples.windows(2).all(|w| w[0].x < w[1].x));
        Trajectory {
            params,
            samples,
            accel,
            step_stats,
            tol,
            escaped_minus: false,
            escaped_plus: false,
        }
    }

    fn from_run(params: ActionParams, run: &RawRun, tol: f64) -> Self {
        let mut samples: Vec<State> = run.t.iter().zip(&run.y).map(|(&x, y)| State::new(x, y[0], y[1])).collect();
        let mut accel: Vec<f64> = run.dy.iter().map(|d| d[1]).collect();
        if samples.len() > 1 && samples[0].x > samples[1].x {
            samples.reverse();
            accel.reverse();
        }
        Self::from_parts(params, samples, accel, run.stats, tol)
    }

    /// Glue a run ending at `x0` (lower half) to one starting at `x0`.
    pub fn join(lower: Trajectory, upper: Trajectory) -> Result<Trajectory> {
        let (Some(l), Some(u)) = (lower.samples.last(), upper.samples.first()) else {
            return Err(Error::Domain("cannot join empty trajectories".into()));
        };
        if l.x != u.x || l.r != u.r || l.rp != u.rp || lower.params != upper.params {
            return Err(Error::Domain("trajectories do not share their junction state".into()));
        }
        let mut samples = lower.samples;
        let mut accel = lower.accel;
        samples.extend_from_slice(&upper.samples[1..]);
        accel.extend_from_slice(&upper.accel[1..]);
        Ok(Trajectory {
            params: lower.params,
            samples,
            accel,
            step_stats: lower.step_stats.merge(&upper.step_stats),
            tol: lower.tol.max(upper.tol),
            escaped_minus: lower.escaped_minus,
            escaped_plus: upper.escaped_plus,
        })
    }

    pub fn params(&self) -> &ActionParams {
        &self.params
    }

    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    /// `r''` at each sample.
    pub fn accelerations(&self) -> &[f64] {
        &self.accel
    }

    pub fn x_min(&self) -> f64 {
        self.samples[0].x
    }

    pub fn x_max(&self) -> f64 {
        self.samples[self.samples.len() - 1].x
    }

    pub fn step_stats(&self) -> &StepStats {
        &self.step_stats
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Whether the run towards `dir` stopped at the escape bound.
    pub fn escaped(&self, dir: Direction) -> bool {
        match dir {
            Direction::Minus => self.escaped_minus,
            Direction::Plus => self.escaped_plus,
        }
    }

    pub fn first(&self) -> &State {
        &self.samples[0]
    }

    pub fn last(&self) -> &State {
        &self.samples[self.samples.len() - 1]
    }

    /// Sample at the `dir` end.
    pub fn end(&self, dir: Direction) -> &State {
        match dir {
            Direction::Minus => self.first(),
            Direction::Plus => self.last(),
        }
    }

    fn m(&self) -> f64 {
        f64::from(self.params.m().unwrap_or(1))
    }

    pub fn w(&self, s: &State) -> f64 {
        lyapunov_w_unchecked(self.params.g(), self.m(), s)
    }

    pub fn w_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| self.w(s)).collect()
    }

    /// Dense output at `x`, `None` outside `[x_min, x_max]`.
    pub fn eval(&self, x: f64) -> Option<State> {
        if !(x >= self.x_min() && x <= self.x_max()) {
            return None;
        }
        let i = self.samples.partition_point(|s| s.x <= x);
        if i == 0 {
            return Some(self.samples[0]);
        }
        if i == self.samples.len() {
            return Some(*self.last());
        }
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let (r, _) = dopri::hermite(a.x, b.x, a.r, b.r, a.rp, b.rp, x);
        let (rp, _) = dopri::hermite(a.x, b.x, a.rp, b.rp, self.accel[i - 1], self.accel[i], x);
        Some(State::new(x, r, rp))
    }

    /// Largest `|r'' - rhs|` over the samples, using the stored `r''`.
    pub fn ode_residual_max(&self) -> f64 {
        let (g, m) = (self.params.g(), self.m());
        self.samples
            .iter()
            .zip(&self.accel)
            .map(|(s, a)| (a - rhs_x_unchecked(g, m, s)).abs())
            .fold(0.0, f64::max)
    }

    /// Same trajectory with `r` replaced by `r + dr`.
    pub fn shifted(&self, dr: f64) -> Trajectory {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.r += dr;
        }
        out
    }

    /// Samples with `lo <= x <= hi`, endpoints filled by dense output.
    pub fn clipped(&self, lo: f64, hi: f64) -> Trajectory {
        let lo = lo.max(self.x_min());
        let hi = hi.min(self.x_max());
        let mut samples = Vec::new();
        let mut accel = Vec::new();
        let (g, m) = (self.params.g(), self.m());
        let mut push = |s: State, a: f64| {
            if samples.last().is_none_or(|p: &State| s.x > p.x) {
                samples.push(s);
                accel.push(a);
            }
        };
        if let Some(s) = self.eval(lo) {
            push(s, rhs_x_unchecked(g, m, &s));
        }
        for (s, a) in self.samples.iter().zip(&self.accel) {
            if s.x > lo && s.x < hi {
                push(*s, *a);
            }
        }
        if let Some(s) = self.eval(hi) {
            push(s, rhs_x_unchecked(g, m, &s));
        }
        Trajectory {
            samples,
            accel,
            escaped_minus: self.escaped_minus && lo <= self.x_min(),
            escaped_plus: self.escaped_plus && hi >= self.x_max(),
            ..self.clone()
        }
    }

    /// CSV with header `x,r,rp,W`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "r", "rp", "W"])?;
        for s in &self.samples {
            w.write_record([
                format!("{:.16e}", s.x),
                format!("{:.16e}", s.r),
                format!("{:.16e}", s.rp),
                format!("{:.16e}", self.w(s)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn mark_escaped(&mut self, toward: f64) {
        if toward < 0.0 {
            self.escaped_minus = true;
        } else {
            self.escaped_plus = true;
        }
    }
}

fn check_span(s0: &State, x_target: f64) -> Result<()> {
    if !s0.is_finite() || !x_target.is_finite() {
        return Err(Error::Domain("non-finite initial state or target".into()));
    }
    if (x_target - s0.x).abs() > 100.0 {
        return Err(Error::Domain(format!("integration span {} exceeds 100", (x_target - s0.x).abs())));
    }
    Ok(())
}

/// Integrate from `s0` to `x_target` with default settings and the given tolerance.
pub fn integrate(p: &ActionParams, s0: State, x_target: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(p, s0, x_target, &IntegratorConfig::with_tol(tol))
}

/// Adaptive Dormand–Prince 5(4) integration from `s0` to `x_target`.
///
/// Escaping `|r| > escape_bound` yields [`Error::Diverged`] carrying the
/// partial trajectory.
pub fn integrate_with(p: &ActionParams, s0: State, x_target: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let m = f64::from(p.require_symmetric()?);
    cfg.validate()?;
    check_span(&s0, x_target)?;
    let g = p.g();
    let ctl = StepControl {
        atol: cfg.tol,
        rtol: cfg.tol,
        min_step: MIN_STEP,
        max_steps: cfg.max_steps,
        rate_scaled: true,
    };
    let bound = cfg.escape_bound;
    let run = dopri::integrate_adaptive(
        |x, y| [y[1], rhs_x_unchecked(g, m, &State::new(x, y[0], y[1]))],
        s0.x,
        [s0.r, s0.rp],
        x_target,
        &ctl,
        |_, y| !(y[0].abs() <= bound && y[1].is_finite()),
    );
    let end_x = *run.t.last().unwrap_or(&s0.x);
    let mut traj = Trajectory::from_run(*p, &run, cfg.tol);
    match run.stop {
        Stop::Reached => Ok(traj),
        Stop::Aborted => {
            traj.mark_escaped(x_target - s0.x);
            Err(Error::Diverged {
                x: end_x,
                bound,
                partial: Some(Box::new(traj)),
            })
        }
        Stop::Underflow => Err(Error::StepUnderflow {
            x: end_x,
            min_step: MIN_STEP,
        }),
        Stop::TooManySteps => Err(Error::Inconclusive(format!(
            "step budget of {} exhausted at x = {end_x}",
            cfg.max_steps
        ))),
    }
}

/// Like [`integrate_with`] but an escape is returned as a trajectory marked
/// escaped instead of an error.
pub fn integrate_allow_escape(p: &ActionParams, s0: State, x_target: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    match integrate_with(p, s0, x_target, cfg) {
        Err(Error::Diverged { partial: Some(t), .. }) => Ok(*t),
        other => other,
    }
}

/// Integrate from `s0` to both `x_lo < s0.x` and `x_hi > s0.x`.
pub fn integrate_two_sided(p: &ActionParams, s0: State, x_lo: f64, x_hi: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let lower = integrate_allow_escape(p, s0, x_lo, cfg)?;
    let upper = integrate_allow_escape(p, s0, x_hi, cfg)?;
    Trajectory::join(lower, upper)
}

/// `n` equal steps of the fifth-order Dormand–Prince formula.
pub fn integrate_fixed(p: &ActionParams, s0: State, x_target: f64, n: usize) -> Result<Trajectory> {
    let m = f64::from(p.require_symmetric()?);
    check_span(&s0, x_target)?;
    if n == 0 {
        return Err(Error::Domain("need at least one step".into()));
    }
    let g = p.g();
    let run = dopri::integrate_fixed(
        |x, y| [y[1], rhs_x_unchecked(g, m, &State::new(x, y[0], y[1]))],
        s0.x,
        [s0.r, s0.rp],
        x_target,
        n,
    );
    Ok(Trajectory::from_run(*p, &run, f64::NAN))
}
