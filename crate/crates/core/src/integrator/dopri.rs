//! Dormand–Prince 5(4) stepper with PI step-size control.
//!
//! Works on two-component states, which is all the crate needs: every ODE
//! here is a scalar second-order equation written as `(r, r')`.

use serde::Serialize;

pub(crate) type Vec2 = [f64; 2];

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Fifth-order weights; also the last stage row (FSAL).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the fifth- and embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Nominal order of the propagated solution.
pub const ORDER: u32 = 5;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Accepted/rejected counts and the extreme step sizes of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for StepStats {
    fn default() -> Self {
        StepStats {
            accepted: 0,
            rejected: 0,
            min_step: f64::INFINITY,
            max_step: 0.0,
        }
    }
}

impl StepStats {
    pub(crate) fn merge(&self, other: &StepStats) -> StepStats {
        StepStats {
            accepted: self.accepted + other.accepted,
            rejected: self.rejected + other.rejected,
            min_step: self.min_step.min(other.min_step),
            max_step: self.max_step.max(other.max_step),
        }
    }

    fn record(&mut self, h: f64) {
        self.accepted += 1;
        self.min_step = self.min_step.min(h.abs());
        self.max_step = self.max_step.max(h.abs());
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub atol: f64,
    pub rtol: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Scale the relative part by `|y[1]|` only. Keeps the error norm
    /// invariant under `y[0] -> c - y[0]`.
    pub rate_scaled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Reached,
    Aborted,
    Underflow,
    TooManySteps,
}

/// Accepted nodes of a run, in integration order, including the start.
#[derive(Debug, Clone)]
pub(crate) struct RawRun {
    pub t: Vec<f64>,
    pub y: Vec<Vec2>,
    pub dy: Vec<Vec2>,
    pub stats: StepStats,
    pub stop: Stop,
    /// Step size that triggered `Underflow`.
    pub last_h: f64,
}

fn stages<F: FnMut(f64, &Vec2) -> Vec2>(f: &mut F, t: f64, y: &Vec2, k1: &Vec2, h: f64) -> (Vec2, Vec2, [Vec2; 7]) {
    let mut k = [[0.0; 2]; 7];
    k[0] = *k1;
    let comb = |k: &[Vec2; 7], w: &[f64]| -> Vec2 {
        let mut out = *y;
        for (i, wi) in w.iter().enumerate() {
            out[0] += h * wi * k[i][0];
            out[1] += h * wi * k[i][1];
        }
        out
    };
    k[1] = f(t + C[1] * h, &comb(&k, &[A21]));
    k[2] = f(t + C[2] * h, &comb(&k, &A3));
    k[3] = f(t + C[3] * h, &comb(&k, &A4));
    k[4] = f(t + C[4] * h, &comb(&k, &A5));
    k[5] = f(t + C[5] * h, &comb(&k, &A6));
    let y_new = comb(&k, &B);
    // Last stage at t + h doubles as the first stage of the next step.
    k[6] = f(t + h, &y_new);
    let mut err = [0.0; 2];
    for (i, ei) in E.iter().enumerate() {
        err[0] += h * ei * k[i][0];
        err[1] += h * ei * k[i][1];
    }
    (y_new, err, k)
}

fn weighted_norm(v: &Vec2, y0: &Vec2, y1: &Vec2, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for (i, vi) in v.iter().enumerate() {
        let j = if ctl.rate_scaled { 1 } else { i };
        let sk = ctl.atol + ctl.rtol * y0[j].abs().max(y1[j].abs());
        acc += (vi / sk).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn initial_step<F: FnMut(f64, &Vec2) -> Vec2>(f: &mut F, t0: f64, y0: &Vec2, f0: &Vec2, dir: f64, h_max: f64, ctl: &StepControl) -> f64 {
    let d0 = weighted_norm(y0, y0, y0, ctl);
    let d1 = weighted_norm(f0, y0, y0, ctl);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(h_max);
    let y1 = [y0[0] + dir * h0 * f0[0], y0[1] + dir * h0 * f0[1]];
    let f1 = f(t0 + dir * h0, &y1);
    let df = [f1[0] - f0[0], f1[1] - f0[1]];
    let d2 = weighted_norm(&df, y0, y0, ctl) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(1.0 / f64::from(ORDER))
    };
    (100.0 * h0).min(h1).min(h_max)
}

/// Adaptive integration from `t0` to `t_end` (either direction).
///
/// `abort` is consulted after each accepted step; returning `true` stops the
/// run with [`Stop::Aborted`], keeping the offending node.
pub(crate) fn integrate_adaptive<F, A>(mut f: F, t0: f64, y0: Vec2, t_end: f64, ctl: &StepControl, mut abort: A) -> RawRun
where
    F: FnMut(f64, &Vec2) -> Vec2,
    A: FnMut(f64, &Vec2) -> bool,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut run = RawRun {
        t: vec![t0],
        y: vec![y0],
        dy: Vec::new(),
        stats: StepStats::default(),
        stop: Stop::Reached,
        last_h: 0.0,
    };
    let mut k1 = f(t0, &y0);
    run.dy.push(k1);
    if span == 0.0 {
        return run;
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = initial_step(&mut f, t0, &y0, &k1, dir, span, ctl);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;
    let expo = 1.0 / f64::from(ORDER) - 0.75 * BETA;

    loop {
        if run.stats.accepted + run.stats.rejected >= ctl.max_steps {
            run.stop = Stop::TooManySteps;
            return run;
        }
        if h < ctl.min_step {
            run.stop = Stop::Underflow;
            run.last_h = h;
            return run;
        }
        let remaining = (t_end - t).abs();
        let last = h >= remaining * (1.0 - 1e-13);
        let step = if last { remaining } else { h };
        let (y_new, err_vec, k) = stages(&mut f, t, &y, &k1, dir * step);
        let err = weighted_norm(&err_vec, &y, &y_new, ctl);
        let fac11 = err.powf(expo);
        let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = step / fac;

        if err <= 1.0 && err.is_finite() {
            fac_old = err.max(1e-4);
            run.stats.record(step);
            t = if last { t_end } else { t + dir * step };
            y = y_new;
            k1 = k[6];
            run.t.push(t);
            run.y.push(y);
            run.dy.push(k1);
            if abort(t, &y) {
                run.stop = Stop::Aborted;
                return run;
            }
            if last {
                return run;
            }
            if last_rejected {
                h_new = h_new.min(step);
            }
            last_rejected = false;
            h = h_new;
        } else {
            run.stats.rejected += 1;
            last_rejected = true;
            h = if err.is_finite() {
                step / (fac11 / SAFETY).min(1.0 / FAC_MIN)
            } else {
                step * 0.1
            };
        }
    }
}

/// `n` equal Dormand–Prince steps (fifth-order solution, no control).
pub(crate) fn integrate_fixed<F>(mut f: F, t0: f64, y0: Vec2, t_end: f64, n: usize) -> RawRun
where
    F: FnMut(f64, &Vec2) -> Vec2,
{
    let h = (t_end - t0) / n as f64;
    let mut run = RawRun {
        t: vec![t0],
        y: vec![y0],
        dy: Vec::new(),
        stats: StepStats::default(),
        stop: Stop::Reached,
        last_h: h,
    };
    let mut y = y0;
    let mut k1 = f(t0, &y0);
    run.dy.push(k1);
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let (y_new, _, k) = stages(&mut f, t, &y, &k1, h);
        y = y_new;
        k1 = k[6];
        run.stats.record(h);
        run.t.push(if i + 1 == n { t_end } else { t + h });
        run.y.push(y);
        run.dy.push(k1);
    }
    run
}

/// Cubic Hermite interpolation on one step.
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    if h == 0.0 {
        return (y0, d0);
    }
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let deriv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (value, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(tol: f64) -> StepControl {
        StepControl {
            atol: tol,
            rtol: tol,
            min_step: 1e-14,
            max_steps: 100_000,
            rate_scaled: false,
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let run = integrate_adaptive(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &ctl(1e-10), |_, _| false);
        assert_eq!(run.stop, Stop::Reached);
        let y = run.y.last().unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((y[1] - 10f64.cos()).abs() < 1e-8);
        assert_eq!(*run.t.last().unwrap(), 10.0);
    }

    #[test]
    fn backward_direction() {
        let run = integrate_adaptive(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], -3.0, &ctl(1e-11), |_, _| false);
        let y = run.y.last().unwrap();
        assert!((y[0] - (-3f64).sin()).abs() < 1e-9);
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let err = |n| {
            let run = integrate_fixed(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], 5.0, n);
            (run.y.last().unwrap()[0] - 5f64.sin()).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 25.0 && ratio < 40.0, "ratio {ratio}");
    }

    #[test]
    fn abort_stops_run() {
        let run = integrate_adaptive(|_, _| [1.0, 0.0], 0.0, [0.0, 0.0], 100.0, &ctl(1e-8), |_, y| y[0] > 5.0);
        assert_eq!(run.stop, Stop::Aborted);
        assert!(run.y.last().unwrap()[0] > 5.0);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |t: f64| t * t * t - 2.0 * t + 1.0;
        let dp = |t: f64| 3.0 * t * t - 2.0;
        let (v, d) = hermite(0.5, 1.5, p(0.5), p(1.5), dp(0.5), dp(1.5), 1.1);
        assert!((v - p(1.1)).abs() < 1e-14);
        assert!((d - dp(1.1)).abs() < 1e-13);
    }
}
