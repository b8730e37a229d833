use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{Direction, Trajectory};
use crate::error::{Error, Result};
use crate::ode::{jerk_x_unchecked, rhs_x_unchecked, State};

/// Estimate of `W(±∞)`.
///
/// `tail_bound` is a rigorous bound on `|W(±∞) - value|` for `m = 1` and
/// infinite otherwise; `error_estimate` is the heuristic used when no bound
/// is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub tail_bound: f64,
    pub x_cut: f64,
    pub error_estimate: f64,
}

impl LimitEstimate {
    pub fn is_certified(&self) -> bool {
        self.tail_bound.is_finite()
    }

    /// Half-width used when deciding the sign of the limit.
    pub fn uncertainty(&self) -> f64 {
        if self.is_certified() {
            self.tail_bound
        } else {
            self.error_estimate
        }
    }
}

fn tail_coefficient(g: u32) -> f64 {
    let g = f64::from(g);
    8.0 * (g - 1.0) / (g * g)
}

/// `∫_{|x|}^∞ 4(g-1)/(g² cosh ξ) dξ <= 8(g-1)/g² e^{-|x|}`.
pub fn tail_bound_at(g: u32, x: f64) -> f64 {
    tail_coefficient(g) * (-x.abs()).exp()
}

/// Smallest `|x|` whose tail bound is below `precision`.
pub fn x_cut_for_precision(g: u32, precision: f64) -> f64 {
    let c = tail_coefficient(g);
    if c <= 0.0 {
        return 1.0;
    }
    (c / precision).ln().max(1.0)
}

const RICHARDSON_CUTS: [f64; 3] = [15.0, 20.0, 25.0];

/// Range `ln(1/tol)/(m+1)` over which a solution tending to a saddle can be
/// followed for `m > 1`; beyond it the mode growing like `e^{m|x|}` swamps
/// the decaying one. Capped at the largest Aitken abscissa.
pub fn uncertified_range(m: u32, tol: f64) -> f64 {
    ((1.0 / tol).ln() / (f64::from(m) + 1.0)).min(RICHARDSON_CUTS[2])
}

/// `W(±∞)` from the end of `traj` in direction `dir`.
///
/// For `m = 1` the trajectory must reach the abscissa where the analytic
/// tail bound drops below `precision`. For `m > 1` the value is an Aitken
/// extrapolation over `|x| ∈ {15, 20, 25}`, scaled down to the range
/// actually reached, without a certified bound.
/// Escaped runs report `W` at the escape point.
pub fn estimate_w_limit(traj: &Trajectory, dir: Direction, precision: f64) -> Result<LimitEstimate> {
    if !(precision > 0.0) {
        return Err(Error::Domain(format!("precision {precision} must be positive")));
    }
    let g = traj.params().g();
    let m = traj.params().m().unwrap_or(1);
    let end = *traj.end(dir);
    let reached = (dir.sign() * end.x).max(0.0);
    let escaped = traj.escaped(dir);

    if m == 1 {
        let required = x_cut_for_precision(g, precision);
        if !escaped && reached < required * (1.0 - 1e-12) {
            return Err(Error::InsufficientRange { reached, required });
        }
        let bound = tail_bound_at(g, reached);
        return Ok(LimitEstimate {
            value: traj.w(&end),
            tail_bound: bound,
            x_cut: end.x,
            error_estimate: bound,
        });
    }

    if escaped {
        return Ok(LimitEstimate {
            value: traj.w(&end),
            tail_bound: f64::INFINITY,
            x_cut: end.x,
            error_estimate: 0.0,
        });
    }
    let required = 2.0;
    if reached < required {
        return Err(Error::InsufficientRange { reached, required });
    }
    let far = reached.min(RICHARDSON_CUTS[2]);
    let mut w = [0.0; 3];
    for (wi, cut) in w.iter_mut().zip(RICHARDSON_CUTS) {
        let s = traj
            .eval(dir.sign() * far * cut / RICHARDSON_CUTS[2])
            .ok_or(Error::InsufficientRange { reached, required })?;
        *wi = traj.w(&s);
    }
    let (d1, d2) = (w[1] - w[0], w[2] - w[1]);
    let denom = d2 - d1;
    let value = if denom.abs() > 1e-300 && (d2 / d1).abs() < 1.0 {
        w[2] - d2 * d2 / denom
    } else {
        w[2]
    };
    Ok(LimitEstimate {
        value,
        tail_bound: f64::INFINITY,
        x_cut: dir.sign() * far,
        error_estimate: (value - w[2]).abs() + d2.abs(),
    })
}

/// Behaviour of `r` towards one end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum RLimit {
    /// `r` settles at `value`, which lies `distance` from the lattice point
    /// `lattice_value` (`kπ/2` at `-∞`, `π/g + kπ/2` at `+∞`).
    Finite {
        value: f64,
        lattice_index: i64,
        lattice_value: f64,
        distance: f64,
        settled_at: f64,
    },
    Oscillatory {
        sign_changes: usize,
        r_min: f64,
        r_max: f64,
    },
    Divergent {
        sign: i8,
    },
}

impl RLimit {
    pub fn is_finite(&self) -> bool {
        matches!(self, RLimit::Finite { .. })
    }
}

/// Thresholds of [`limit_of_r_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConfig {
    /// Width the extrapolated limit may wander over the settled window.
    pub window: f64,
    /// Closest approach `|r - lattice| + |r'|` needed to call `r` settled.
    pub approach: f64,
    pub min_sign_changes: usize,
    /// Net change of `r` beyond which monotone growth counts as divergence.
    pub divergence_span: f64,
    /// Spacing of the dense grid used for the tests.
    pub grid_step: f64,
    /// Closest approach is searched beyond this fraction of the range.
    pub search_from: f64,
}

impl LimitConfig {
    /// Defaults, widened for `m > 1` where only short ranges can be
    /// integrated before the growing mode takes over.
    pub fn for_multiplicity(m: u32) -> Self {
        let mut cfg = Self::default();
        if m > 1 {
            cfg.window = 1e-4;
            cfg.approach = 0.1;
        }
        cfg
    }
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            window: 1e-6,
            approach: 1e-3,
            min_sign_changes: 3,
            divergence_span: 4.0 * PI,
            grid_step: 0.05,
            search_from: 0.25,
        }
    }
}

fn lattice(g: u32, dir: Direction, c: f64) -> (i64, f64) {
    let offset = match dir {
        Direction::Minus => 0.0,
        Direction::Plus => PI / f64::from(g),
    };
    let k = ((c - offset) / FRAC_PI_2).round();
    (k as i64, offset + k * FRAC_PI_2)
}

pub fn limit_of_r(traj: &Trajectory, dir: Direction) -> Result<RLimit> {
    let m = traj.params().m().unwrap_or(1);
    limit_of_r_with(traj, dir, &LimitConfig::for_multiplicity(m))
}

/// Classify `r` towards `dir` as finite, oscillatory or divergent.
///
/// The half-line is measured outward from `x = 0` (or the trajectory end
/// nearest to it). Numerical solutions tending to a saddle
/// `(lattice point, 0)` leave it again once the growing mode picked up from
/// truncation error dominates. A finite limit is therefore read off before
/// the closest approach `x*`, at the flattest point of the extrapolated
/// limit, which must stay in a window over a quarter of `[0, x*]` there.
pub fn limit_of_r_with(traj: &Trajectory, dir: Direction, cfg: &LimitConfig) -> Result<RLimit> {
    let sigma = dir.sign();
    let (anchor, end) = match dir {
        Direction::Plus => (traj.x_min().max(0.0), traj.x_max()),
        Direction::Minus => (traj.x_max().min(0.0), traj.x_min()),
    };
    let len = sigma * (end - anchor);
    if !(len > 0.0) {
        return Err(Error::InsufficientRange {
            reached: 0.0,
            required: cfg.grid_step,
        });
    }
    let n = ((len / cfg.grid_step).ceil() as usize).max(8);
    let grid: Vec<State> = (0..=n)
        .map(|i| {
            let x = if i == n { end } else { anchor + sigma * len * i as f64 / n as f64 };
            traj.eval(x).expect("grid inside trajectory")
        })
        .collect();
    let u = |s: &State| sigma * (s.x - anchor);
    let g = traj.params().g();
    let m = f64::from(traj.params().m().unwrap_or(1));
    // Only odd powers of e^{∓x} occur in the approach to a saddle. The
    // combination below annihilates e^{∓x}, e^{∓3x} and e^{∓5x}.
    let extrapolate = |s: &State| {
        let rpp = rhs_x_unchecked(g, m, s);
        let rppp = jerk_x_unchecked(g, m, s, rpp);
        s.r + sigma * (23.0 / 15.0) * s.rp + 0.6 * rpp + sigma * rppp / 15.0
    };
    let escaped = traj.escaped(dir);

    if !escaped {
        let best = grid
            .iter()
            .filter(|s| u(s) >= cfg.search_from * len)
            .map(|s| {
                let (_, l) = lattice(g, dir, s.r);
                (s, (s.r - l).abs() + s.rp.abs())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((star, d)) = best {
            if d < cfg.approach {
                // Beyond the closest approach the growing mode dominates.
                // The extrapolation is read off at its flattest point, where
                // the decaying and growing contaminations balance.
                let u_star = u(star);
                let at = |uu: f64| traj.eval(anchor + sigma * uu).expect("inside");
                const N: usize = 64;
                let us: Vec<f64> = (0..=N).map(|i| u_star * (0.25 + 0.75 * i as f64 / N as f64)).collect();
                let cs: Vec<f64> = us.iter().map(|&uu| extrapolate(&at(uu))).collect();
                let flat = (1..N)
                    .min_by(|&i, &j| {
                        let si = (cs[i + 1] - cs[i - 1]).abs();
                        let sj = (cs[j + 1] - cs[j - 1]).abs();
                        si.total_cmp(&sj)
                    })
                    .unwrap_or(N / 2);
                let (w_lo, w_hi) = (us[flat] - u_star / 8.0, us[flat] + u_star / 8.0);
                let (lo, hi) = (0..=32).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                    let uu = (w_lo + (w_hi - w_lo) * f64::from(i) / 32.0).clamp(0.0, u_star);
                    let c = extrapolate(&at(uu));
                    (lo.min(c), hi.max(c))
                });
                if hi - lo <= cfg.window {
                    let value = cs[flat];
                    let (k, l) = lattice(g, dir, value);
                    return Ok(RLimit::Finite {
                        value,
                        lattice_index: k,
                        lattice_value: l,
                        distance: (value - l).abs(),
                        settled_at: star.x,
                    });
                }
            }
        }
    }

    let r_anchor = grid[0].r;
    let r_end = grid[n].r;
    let sign = if r_end >= r_anchor { 1 } else { -1 };
    if escaped {
        return Ok(RLimit::Divergent { sign });
    }

    let sign_changes = |from: f64| {
        let mut count = 0;
        let mut prev = 0.0_f64;
        for s in grid.iter().filter(|s| u(s) >= from) {
            if s.rp != 0.0 {
                if prev != 0.0 && s.rp.signum() != prev {
                    count += 1;
                }
                prev = s.rp.signum();
            }
        }
        count
    };
    let tail: Vec<&State> = grid.iter().filter(|s| u(s) >= 0.5 * len).collect();
    let r_min = tail.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
    let r_max = tail.iter().map(|s| s.r).fold(f64::NEG_INFINITY, f64::max);
    let changes = sign_changes(0.5 * len);
    if changes >= cfg.min_sign_changes && r_max - r_min < 2.0 * PI {
        return Ok(RLimit::Oscillatory {
            sign_changes: changes,
            r_min,
            r_max,
        });
    }
    if sign_changes(0.75 * len) == 0 && (r_end - r_anchor).abs() > cfg.divergence_span {
        return Ok(RLimit::Divergent { sign });
    }
    Err(Error::Inconclusive(format!(
        "r towards {dir:?} is neither settled, oscillating nor diverging on |x| <= {:.3}",
        end.abs()
    )))
}
