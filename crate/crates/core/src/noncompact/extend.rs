//! Strictly monotone extensions of a radial solution from `[0, ε]` to `[0, T]`.

use serde::Serialize;

use super::ivp::{RadialJet, RadialTrajectory};
use crate::error::{Error, Result};

/// Below this `|ṙ(ε)|` the join point is moved inwards.
const RATE_FLOOR: f64 = 1e-8;
const JOIN_TOL: f64 = 1e-9;
const MONOTONE_GRID: usize = 10_000;

/// A radial profile with two derivatives.
pub trait RadialProfile {
    fn jet(&self, t: f64) -> Result<RadialJet>;
}

impl<F: Fn(f64) -> Result<RadialJet>> RadialProfile for F {
    fn jet(&self, t: f64) -> Result<RadialJet> {
        self(t)
    }
}

impl RadialProfile for RadialTrajectory {
    fn jet(&self, t: f64) -> Result<RadialJet> {
        self.eval(t)
    }
}

/// How `r` continues past `ε`. `slope` defaults to `2ṙ(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum ExtensionScheme {
    /// Keep solving the radial equation.
    ContinueOde,
    /// Slope moves from `ṙ(ε)` to `slope` along a cubic over `window`
    /// (default `ε`), floored at `μ`.
    CubicBlend { slope: Option<f64>, window: Option<f64> },
    /// The ODE solution is faded into a straight line of the given slope by
    /// a `C^∞` step over `window` (default `0.1ε`), so every derivative of
    /// the deviation vanishes at `ε`.
    Ramp { slope: Option<f64>, window: Option<f64> },
}

impl ExtensionScheme {
    pub fn name(&self) -> &'static str {
        match self {
            ExtensionScheme::ContinueOde => "continue",
            ExtensionScheme::CubicBlend { .. } => "blend",
            ExtensionScheme::Ramp { .. } => "ramp",
        }
    }

    /// `continue`, `blend` or `ramp` with default parameters.
    pub fn parse(name: &str, slope: Option<f64>, window: Option<f64>) -> Result<Self> {
        match name {
            "continue" | "ode" | "a" => Ok(ExtensionScheme::ContinueOde),
            "blend" | "cubic" | "b" => Ok(ExtensionScheme::CubicBlend { slope, window }),
            "ramp" | "linear" | "c" => Ok(ExtensionScheme::Ramp { slope, window }),
            other => Err(Error::Config(format!("unknown extension scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    t0: f64,
    t1: f64,
    clamped: bool,
    /// `r(t0)`.
    r0: f64,
}

#[derive(Debug, Clone)]
enum Tail {
    Ode,
    Blend {
        s0: f64,
        d0: f64,
        target: f64,
        w: f64,
        pieces: Vec<Piece>,
        r_end: f64,
    },
    Ramp {
        r_eps: f64,
        target: f64,
        w: f64,
    },
}

/// Summary of an extension, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub scheme: ExtensionScheme,
    pub epsilon: f64,
    pub horizon: f64,
    /// Guaranteed floor for `|ṙ|` on `[ε, T]`.
    pub mu: f64,
    /// Smallest `|ṙ|` measured on `[ε, T]`.
    pub min_rate: f64,
    pub slope_target: Option<f64>,
    pub window: Option<f64>,
}

/// `r` on `[0, T]`: the radial solution up to `ε`, then the chosen tail.
#[derive(Debug, Clone)]
pub struct Extension {
    ode: RadialTrajectory,
    epsilon: f64,
    horizon: f64,
    sign: f64,
    tail: Tail,
    report: ExtensionReport,
}

fn smooth_step(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = 1.0 - u;
    let z = 1.0 / u - 1.0 / v;
    let z1 = -1.0 / (u * u) - 1.0 / (v * v);
    let z2 = 2.0 / (u * u * u) - 2.0 / (v * v * v);
    // s = b(1 - b) from the exponential itself; the difference 1 - b is
    // quantised near the ends and would make b', b'' jump.
    let e = (-z.abs()).exp();
    let s = e / ((1.0 + e) * (1.0 + e));
    let b = if z > 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
    let b1 = -s * z1;
    let b2 = -(1.0 - 2.0 * b) * b1 * z1 - s * z2;
    (b, b1, b2)
}

// Hermite slope from (s0, d0) to (target, 0) and its antiderivative on u ∈ [0, 1].
fn blend_slope(u: f64, s0: f64, d0: f64, target: f64, w: f64) -> (f64, f64) {
    let (u2, u3) = (u * u, u * u * u);
    let s = (2.0 * u3 - 3.0 * u2 + 1.0) * s0 + (u3 - 2.0 * u2 + u) * w * d0 + (3.0 * u2 - 2.0 * u3) * target;
    let ds = ((6.0 * u2 - 6.0 * u) * s0 + (3.0 * u2 - 4.0 * u + 1.0) * w * d0 + (6.0 * u - 6.0 * u2) * target) / w;
    (s, ds)
}

fn blend_integral(u: f64, s0: f64, d0: f64, target: f64, w: f64) -> f64 {
    let (u2, u3, u4) = (u * u, u * u * u, u * u * u * u);
    w * ((0.5 * u4 - u3 + u) * s0 + (0.25 * u4 - 2.0 * u3 / 3.0 + 0.5 * u2) * w * d0 + (u3 - 0.5 * u4) * target)
}

/// Splits `[ε, ε + w]` where the blended slope crosses the floor `μ` and
/// accumulates `r` at each piece start. Returns the pieces and `r(ε + w)`.
#[allow(clippy::too_many_arguments)]
fn blend_pieces(r_eps: f64, s0: f64, d0: f64, target: f64, w: f64, mu: f64, sign: f64, eps: f64) -> (Vec<Piece>, f64) {
    let below = |u: f64| sign * blend_slope(u, s0, d0, target, w).0 < mu;
    let mut cuts = vec![0.0];
    let n = 256;
    for i in 0..n {
        let (mut lo, mut hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        if below(lo) != below(hi) {
            let b_lo = below(lo);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if below(mid) == b_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
    }
    cuts.push(1.0);
    let mut pieces = Vec::with_capacity(cuts.len() - 1);
    let mut r0 = r_eps;
    for c in cuts.windows(2) {
        let clamped = below(0.5 * (c[0] + c[1]));
        let gain = if clamped {
            sign * mu * w * (c[1] - c[0])
        } else {
            blend_integral(c[1], s0, d0, target, w) - blend_integral(c[0], s0, d0, target, w)
        };
        pieces.push(Piece {
            t0: eps + w * c[0],
            t1: eps + w * c[1],
            clamped,
            r0,
        });
        r0 += gain;
    }
    (pieces, r0)
}

/// Extends `base` (solved on `[0, ε]`, `ε = base.t_end()`) to `[0, horizon]`.
///
/// If `ṙ(ε)` vanishes the join moves inwards to the nearest `ε₀ < ε` with
/// `|ṙ(ε₀)| ≥ 1e-8`.
pub fn extend_monotone(base: &RadialTrajectory, scheme: ExtensionScheme, horizon: f64) -> Result<Extension> {
    let mut eps = base.t_end();
    if !(horizon > eps) {
        return Err(Error::Domain(format!("horizon {horizon} must exceed epsilon {eps}")));
    }
    let mut at = base.eval(eps)?;
    let mut shrink = 0;
    while at.rdot.abs() < RATE_FLOOR {
        shrink += 1;
        if shrink > 60 {
            return Err(Error::DerivativeVanishes { t: eps, rdot: at.rdot });
        }
        eps *= 0.9;
        at = base.eval(eps)?;
    }
    let sign = at.rdot.signum();
    let s0 = at.rdot;
    let target = |slope: Option<f64>| -> Result<f64> {
        let s = slope.unwrap_or(2.0 * s0);
        if !(s * sign > 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("slope target {s} must keep the sign of r'(eps) = {s0}")));
        }
        Ok(s)
    };
    let window = |w: Option<f64>, default: f64| -> Result<f64> {
        let w = w.unwrap_or(default);
        if !(w > 0.0 && eps + w < horizon) {
            return Err(Error::Domain(format!("window {w} must be positive and end before the horizon")));
        }
        Ok(w)
    };

    let (ode, tail, mu, slope_target, win) = match scheme {
        ExtensionScheme::ContinueOde => (base.extend_to(horizon)?, Tail::Ode, 0.0, None, None),
        ExtensionScheme::CubicBlend { slope, window: w } => {
            let target = target(slope)?;
            let w = window(w, eps)?;
            let mu = 0.5 * s0.abs().min(target.abs());
            let d0 = at.rddot;
            let (pieces, r_end) = blend_pieces(at.r, s0, d0, target, w, mu, sign, eps);
            let tail = Tail::Blend {
                s0,
                d0,
                target,
                w,
                pieces,
                r_end,
            };
            (base.clone(), tail, mu, Some(target), Some(w))
        }
        ExtensionScheme::Ramp { slope, window: w } => {
            let target = target(slope)?;
            let w = window(w, 0.1 * eps)?;
            let ode = base.extend_to(eps + w)?;
            let tail = Tail::Ramp { r_eps: at.r, target, w };
            (ode, tail, s0.abs().min(target.abs()), Some(target), Some(w))
        }
    };

    let mut ext = Extension {
        ode,
        epsilon: eps,
        horizon,
        sign,
        tail,
        report: ExtensionReport {
            scheme,
            epsilon: eps,
            horizon,
            mu,
            min_rate: 0.0,
            slope_target,
            window: win,
        },
    };

    let right = ext.tail_jet(eps)?;
    let mismatch = [
        (right.r - at.r).abs() / (1.0 + at.r.abs()),
        (right.rdot - at.rdot).abs() / (1.0 + at.rdot.abs()),
        (right.rddot - at.rddot).abs() / (1.0 + at.rddot.abs()),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if !(mismatch <= JOIN_TOL) {
        return Err(Error::JoinMismatch { mismatch });
    }

    let mut min_rate = f64::INFINITY;
    let grid = (0..=MONOTONE_GRID).map(|i| (eps + (horizon - eps) * i as f64 / MONOTONE_GRID as f64).min(horizon));
    let nodes = ext.ode.times().iter().copied().filter(|&t| t >= eps && t <= horizon);
    for t in grid.chain(nodes) {
        let rate = sign * ext.jet(t)?.rdot;
        if !(rate > 1e-12) {
            return Err(Error::MonotonicityLost { t });
        }
        min_rate = min_rate.min(rate);
    }
    ext.report.min_rate = min_rate;
    if matches!(scheme, ExtensionScheme::ContinueOde) {
        ext.report.mu = min_rate;
    }
    Ok(ext)
}

impl Extension {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `+1` for increasing, `-1` for decreasing extensions.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn report(&self) -> &ExtensionReport {
        &self.report
    }

    /// The radial solution the extension starts from.
    pub fn ode(&self) -> &RadialTrajectory {
        &self.ode
    }

    fn tail_jet(&self, t: f64) -> Result<RadialJet> {
        let eps = self.epsilon;
        match &self.tail {
            Tail::Ode => self.ode.eval(t),
            Tail::Blend {
                s0,
                d0,
                target,
                w,
                pieces,
                r_end,
            } => {
                if t >= eps + w {
                    return Ok(RadialJet {
                        r: r_end + target * (t - eps - w),
                        rdot: *target,
                        rddot: 0.0,
                    });
                }
                let k = pieces.partition_point(|p| p.t1 < t).min(pieces.len() - 1);
                let p = &pieces[k];
                let u = (t - eps) / w;
                if p.clamped {
                    let rate = self.sign * self.report.mu;
                    return Ok(RadialJet {
                        r: p.r0 + rate * (t - p.t0),
                        rdot: rate,
                        rddot: 0.0,
                    });
                }
                let u0 = (p.t0 - eps) / w;
                let (s, ds) = blend_slope(u, *s0, *d0, *target, *w);
                Ok(RadialJet {
                    r: p.r0 + blend_integral(u, *s0, *d0, *target, *w) - blend_integral(u0, *s0, *d0, *target, *w),
                    rdot: s,
                    rddot: ds,
                })
            }
            Tail::Ramp { r_eps, target, w } => {
                let line = r_eps + target * (t - eps);
                if t >= eps + w {
                    return Ok(RadialJet {
                        r: line,
                        rdot: *target,
                        rddot: 0.0,
                    });
                }
                let o = self.ode.eval(t)?;
                let (b, b1, b2) = smooth_step((t - eps) / w);
                let gap = line - o.r;
                let gap1 = target - o.rdot;
                Ok(RadialJet {
                    r: o.r + b * gap,
                    rdot: o.rdot + b * gap1 + b1 / w * gap,
                    rddot: o.rddot - b * o.rddot + 2.0 * b1 / w * gap1 + b2 / (w * w) * gap,
                })
            }
        }
    }
}

impl RadialProfile for Extension {
    fn jet(&self, t: f64) -> Result<RadialJet> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        if t <= self.epsilon {
            self.ode.eval(t)
        } else {
            self.tail_jet(t)
        }
    }
}
