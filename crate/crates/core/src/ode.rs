//! The reduced equivariant harmonic-map ODE on round spheres.
//!
//! Along a normal geodesic the profile `r` of a `(k, r)`-map satisfies a
//! second-order ODE on `(0, π/g)` that is singular at both ends. The
//! substitution `x = log tan(g t / 2)` stretches the interval to the whole
//! real line; most of the crate works in `x`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// Data `(g, m0, m1)` of a cohomogeneity-one action on a sphere.
///
/// `g` is the number of distinct principal curvatures of the principal
/// orbits and `m0`, `m1` their alternating multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ActionParams {
    g: u32,
    m0: u32,
    m1: u32,
}

impl ActionParams {
    /// Validated constructor.
    ///
    /// Equal multiplicities only need `g ∈ {1, 2, 3, 4, 6}`; unequal ones
    /// must appear in Münzner's list of isoparametric data.
    pub fn new(g: u32, m0: u32, m1: u32) -> Result<Self> {
        if m0 == 0 || m1 == 0 {
            return Err(Error::InvalidParams(format!(
                "multiplicities must be >= 1, got ({m0}, {m1})"
            )));
        }
        if !matches!(g, 1 | 2 | 3 | 4 | 6) {
            return Err(Error::InvalidParams(format!(
                "g = {g} is not one of 1, 2, 3, 4, 6"
            )));
        }
        if m0 != m1 && !admissible_unequal(g, m0, m1) {
            return Err(Error::InvalidParams(format!(
                "({g}, {m0}, {m1}) is not an admissible isoparametric triple"
            )));
        }
        Ok(ActionParams { g, m0, m1 })
    }

    /// A `(g, m)`-action, i.e. `m0 = m1 = m`.
    pub fn symmetric(g: u32, m: u32) -> Result<Self> {
        Self::new(g, m, m)
    }

    /// Skips validation. Used for the formal `g -> 2g` relabelling.
    pub(crate) fn unchecked(g: u32, m0: u32, m1: u32) -> Self {
        debug_assert!(g >= 1 && m0 >= 1 && m1 >= 1);
        ActionParams { g, m0, m1 }
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn is_symmetric(&self) -> bool {
        self.m0 == self.m1
    }

    /// The common multiplicity when `m0 == m1`.
    pub fn m(&self) -> Option<u32> {
        self.is_symmetric().then_some(self.m0)
    }

    pub(crate) fn require_symmetric(&self) -> Result<u32> {
        self.m().ok_or_else(|| {
            Error::InvalidParams(format!(
                "operation needs m0 == m1, got ({}, {}, {})",
                self.g, self.m0, self.m1
            ))
        })
    }

    /// The point `y_j = (j g + 1) π / (2g)` for this `g`.
    pub fn symmetry_point(&self, j: i32) -> SymmetryPoint {
        SymmetryPoint::new(self.g, j)
    }
}

fn admissible_unequal(g: u32, m0: u32, m1: u32) -> bool {
    let (lo, hi) = (m0.min(m1), m0.max(m1));
    match g {
        2 => true,
        4 => {
            lo == 1
                || (lo == 2 && hi % 2 == 1)
                || (lo == 4 && hi % 4 == 3)
                || (lo, hi) == (4, 5)
                || (lo, hi) == (6, 9)
        }
        _ => false,
    }
}

/// A point `(x, r(x), r'(x))` of a solution in the logarithmic variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub x: f64,
    pub r: f64,
    pub rp: f64,
}

impl State {
    pub fn new(x: f64, r: f64, rp: f64) -> Self {
        State { x, r, rp }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.r.is_finite() && self.rp.is_finite()
    }
}

/// Centre `P_j = (0, y_j)` of the point symmetry of solutions with
/// `r(0) = y_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryPoint {
    pub j: i32,
    pub y: f64,
}

impl SymmetryPoint {
    pub fn new(g: u32, j: i32) -> Self {
        let g = f64::from(g);
        SymmetryPoint {
            j,
            y: (f64::from(j) * g + 1.0) * PI / (2.0 * g),
        }
    }
}

/// `a(x) = (2/g) arctan(e^x)`, the image of `t` under the change of variable.
pub fn profile_a(g: u32, x: f64) -> f64 {
    2.0 / f64::from(g) * x.exp().atan()
}

/// `a'(x) = 1 / (g cosh x)`.
pub fn profile_a_prime(g: u32, x: f64) -> f64 {
    1.0 / (f64::from(g) * x.cosh())
}

/// The coefficient functions `h1`, `h2` and their `x`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub h1: f64,
    pub h2: f64,
    pub h1p: f64,
    pub h2p: f64,
}

/// `h1 = (g-1) cos 2a + cos 2(g-1)a`, `h2 = -(g-1) sin 2a + sin 2(g-1)a`.
///
/// Derivatives come from the chain rule through `a'(x)`.
pub fn coeff_h(g: u32, x: f64) -> Coefficients {
    let gm1 = f64::from(g) - 1.0;
    let a = profile_a(g, x);
    let ap = profile_a_prime(g, x);
    let (s1, c1) = (2.0 * a).sin_cos();
    let (s2, c2) = (2.0 * gm1 * a).sin_cos();
    Coefficients {
        h1: gm1 * c1 + c2,
        h2: -gm1 * s1 + s2,
        h1p: -2.0 * gm1 * ap * (s1 + s2),
        h2p: 2.0 * gm1 * ap * (c2 - c1),
    }
}

/// `r''` of the `(g, m)`-ODE in the `x` variable.
pub fn rhs_x(p: &ActionParams, s: &State) -> Result<f64> {
    let m = f64::from(p.require_symmetric()?);
    Ok(rhs_x_unchecked(p.g, m, s))
}

#[inline]
pub(crate) fn rhs_x_unchecked(g: u32, m: f64, s: &State) -> f64 {
    let gf = f64::from(g);
    let a = profile_a(g, s.x);
    (m - 1.0) * s.x.tanh() * s.rp
        + m / (2.0 * gf)
            * ((gf - 1.0) * (2.0 * s.r - 2.0 * a).sin()
                + (2.0 * s.r + 2.0 * (gf - 1.0) * a).sin())
}

/// Third derivative `r'''` along a solution, given `r''` at the same state.
pub(crate) fn jerk_x_unchecked(g: u32, m: f64, s: &State, rpp: f64) -> f64 {
    let gf = f64::from(g);
    let a = profile_a(g, s.x);
    let ap = profile_a_prime(g, s.x);
    let (u, w) = (2.0 * s.r - 2.0 * a, 2.0 * s.r + 2.0 * (gf - 1.0) * a);
    let f_r = 2.0 * (gf - 1.0) * u.cos() + 2.0 * w.cos();
    let f_x = 2.0 * (gf - 1.0) * ap * (w.cos() - u.cos());
    let sech = 1.0 / s.x.cosh();
    (m - 1.0) * (sech * sech * s.rp + s.x.tanh() * rpp) + m / (2.0 * gf) * (f_x + f_r * s.rp)
}

/// Same right-hand side written as `sin(2r) h1 + cos(2r) h2`.
pub fn rhs_x_h_form(p: &ActionParams, s: &State) -> Result<f64> {
    let m = f64::from(p.require_symmetric()?);
    let gf = f64::from(p.g);
    let h = coeff_h(p.g, s.x);
    let (s2r, c2r) = (2.0 * s.r).sin_cos();
    Ok((m - 1.0) * s.x.tanh() * s.rp + m / (2.0 * gf) * (s2r * h.h1 + c2r * h.h2))
}

/// `r̈(t)` of the general `(g, m0, m1)` equation on the open interval
/// `0 < t < π/g`.
pub fn rhs_t(p: &ActionParams, t: f64, r: f64, rdot: f64) -> Result<f64> {
    let g = f64::from(p.g);
    if !(t > 0.0 && t < PI / g) {
        return Err(Error::Domain(format!("t = {t} outside (0, π/{g})")));
    }
    let (m0, m1) = (f64::from(p.m0), f64::from(p.m1));
    let (sum, diff) = (m0 + m1, m0 - m1);
    let (sgt, cgt) = (g * t).sin_cos();
    let drift = (g * sum * (2.0 * g * t).sin() + 2.0 * g * diff * sgt) * rdot;
    let u = 2.0 * (r - t);
    let force = g * (g - 2.0) * u.sin() * (sum + diff * cgt)
        + 2.0 * g * (u + g * t).sin() * (sum * cgt + diff);
    Ok((force - drift) / (4.0 * sgt * sgt))
}

/// Residual of the general `t`-equation, `0` for exact solutions.
pub fn residual_t(p: &ActionParams, t: f64, r: f64, rdot: f64, rddot: f64) -> Result<f64> {
    Ok(rddot - rhs_t(p, t, r, rdot)?)
}

/// The Lyapunov function
/// `W = r'^2/2 - (m/2g) h1 sin^2 r - (m/2g) h2 sin^2(r - 3π/4)`.
pub fn lyapunov_w(p: &ActionParams, s: &State) -> Result<f64> {
    let m = f64::from(p.require_symmetric()?);
    Ok(lyapunov_w_unchecked(p.g, m, s))
}

#[inline]
pub(crate) fn lyapunov_w_unchecked(g: u32, m: f64, s: &State) -> f64 {
    let h = coeff_h(g, s.x);
    let k = m / (2.0 * f64::from(g));
    let sr = s.r.sin();
    let sq = (s.r - 0.75 * PI).sin();
    0.5 * s.rp * s.rp - k * h.h1 * sr * sr - k * h.h2 * sq * sq
}

/// `dW/dx` along solutions, in the closed form obtained by substituting
/// the ODE.
pub fn lyapunov_w_prime(p: &ActionParams, s: &State) -> Result<f64> {
    let m = f64::from(p.require_symmetric()?);
    let g = f64::from(p.g);
    let a = profile_a(p.g, s.x);
    let c = m * (g - 1.0) / (g * g * s.x.cosh());
    let sr = s.r.sin();
    let sq = (s.r - 0.75 * PI).sin();
    Ok((m - 1.0) * s.x.tanh() * s.rp * s.rp
        + c * ((2.0 * a).sin() + (2.0 * (g - 1.0) * a).sin()) * sr * sr
        - c * (-(2.0 * a).cos() + (2.0 * (g - 1.0) * a).cos()) * sq * sq)
}

/// Pointwise bound `|W'| <= 4(g-1) / (g^2 cosh x)`, valid for `m = 1`.
pub fn w_prime_bound(g: u32, x: f64) -> f64 {
    let g = f64::from(g);
    4.0 * (g - 1.0) / (g * g * x.cosh())
}

/// `t = (2/g) arctan(e^x)`.
pub fn t_from_x(g: u32, x: f64) -> f64 {
    profile_a(g, x)
}

/// `x = log tan(g t / 2)` for `0 < t < π/g`.
pub fn x_from_t(g: u32, t: f64) -> Result<f64> {
    let gf = f64::from(g);
    if !(t > 0.0 && t < PI / gf) {
        return Err(Error::Domain(format!("t = {t} outside (0, π/{g})")));
    }
    Ok((0.5 * gf * t).tan().ln())
}

/// The solution `r = a(x)` corresponding to the identity `r(t) = t`.
pub fn linear_identity(g: u32, x: f64) -> State {
    State::new(x, profile_a(g, x), profile_a_prime(g, x))
}

/// The solution `r = -(g-1) a(x)` corresponding to `r(t) = -(g-1) t`.
pub fn linear_reflected(g: u32, x: f64) -> State {
    let c = -(f64::from(g) - 1.0);
    State::new(x, c * profile_a(g, x), c * profile_a_prime(g, x))
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    debug_assert!(f_lo * f(hi) <= 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The unique zero `z0 > 0` of `h1` for `g = 3`.
pub fn h1_zero_g3() -> f64 {
    static Z0: OnceLock<f64> = OnceLock::new();
    *Z0.get_or_init(|| bisect_root(|x| coeff_h(3, x).h1, 0.0, 20.0, 1e-12))
}

/// The unique critical point `x0 > 0` of `h1` for `g = 6`
/// (`h1' < 0` before it, `> 0` after).
pub fn h1_min_g6() -> f64 {
    static X0: OnceLock<f64> = OnceLock::new();
    *X0.get_or_init(|| bisect_root(|x| coeff_h(6, x).h1p, 0.0, 20.0, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(g: u32, m: u32) -> ActionParams {
        ActionParams::symmetric(g, m).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ActionParams::symmetric(5, 1).is_err());
        assert!(ActionParams::symmetric(3, 0).is_err());
        assert!(ActionParams::new(3, 1, 2).is_err());
        assert!(ActionParams::new(4, 2, 3).is_ok());
        assert!(ActionParams::new(4, 9, 6).is_ok());
        assert!(ActionParams::new(4, 4, 7).is_ok());
        assert!(ActionParams::new(4, 4, 6).is_err());
        assert!(ActionParams::new(2, 3, 7).is_ok());
        assert!(ActionParams::new(6, 1, 2).is_err());
        assert_eq!(p(4, 2).m(), Some(2));
        assert_eq!(ActionParams::new(2, 1, 3).unwrap().m(), None);
    }

    #[test]
    fn profile_values() {
        assert_relative_eq!(profile_a(2, 0.0), PI / 4.0, epsilon = 1e-15);
        assert_relative_eq!(profile_a_prime(4, 0.0), 0.25, epsilon = 1e-15);
        for g in [1, 2, 3, 4, 6] {
            for x in [-7.0, -0.3, 0.0, 2.5, 30.0] {
                assert_relative_eq!(
                    profile_a(g, x) + profile_a(g, -x),
                    PI / f64::from(g),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn h_values() {
        assert!(coeff_h(2, 0.0).h1.abs() < 1e-15);
        assert_relative_eq!(coeff_h(4, 0.0).h1, 2f64.sqrt(), epsilon = 1e-14);
        for x in [-5.0, 0.0, 0.7, 12.0] {
            assert!(coeff_h(2, x).h2.abs() < 1e-15);
        }
        for g in [2, 3, 4, 6] {
            let h = coeff_h(g, -40.0);
            assert_relative_eq!(h.h1, f64::from(g), epsilon = 1e-12);
            assert!(h.h2.abs() < 1e-12);
        }
    }

    #[test]
    fn h_derivatives_match_finite_differences() {
        let d = 1e-5;
        for g in [2, 3, 4, 6] {
            for x in [-3.0, -0.5, 0.0, 0.9, 4.0] {
                let (hp, hm) = (coeff_h(g, x + d), coeff_h(g, x - d));
                let h = coeff_h(g, x);
                assert!((h.h1p - (hp.h1 - hm.h1) / (2.0 * d)).abs() < 1e-8);
                assert!((h.h2p - (hp.h2 - hm.h2) / (2.0 * d)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn jerk_matches_finite_difference() {
        let (g, m) = (4, 3.0);
        let s = State::new(0.7, 1.1, -0.4);
        let rpp = rhs_x_unchecked(g, m, &s);
        let h = 1e-5;
        let step = |h: f64| {
            let t = State::new(s.x + h, s.r + h * s.rp + 0.5 * h * h * rpp, s.rp + h * rpp);
            rhs_x_unchecked(g, m, &t)
        };
        let fd = (step(h) - step(-h)) / (2.0 * h);
        assert!((fd - jerk_x_unchecked(g, m, &s, rpp)).abs() < 1e-8);
    }

    #[test]
    fn rhs_x_special_point() {
        let s = State::new(0.0, PI / 2.0, 0.0);
        assert!(rhs_x(&p(2, 1), &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rhs_x_needs_equal_multiplicities() {
        let q = ActionParams::new(2, 1, 3).unwrap();
        assert!(matches!(
            rhs_x(&q, &State::new(0.0, 0.0, 0.0)),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn w_example() {
        let s = State::new(0.0, PI / 4.0, 0.5);
        assert_relative_eq!(lyapunov_w(&p(2, 1), &s).unwrap(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn w_prime_m1_matches_h_form() {
        for g in [2, 3, 4, 6] {
            let q = p(g, 1);
            for (x, r, rp) in [(-2.0, 0.3, 1.1), (0.0, 2.0, -0.4), (1.5, -4.0, 0.0)] {
                let s = State::new(x, r, rp);
                let h = coeff_h(g, x);
                let k = 1.0 / (2.0 * f64::from(g));
                let alt = -k * (h.h1p * r.sin().powi(2) + h.h2p * (r - 0.75 * PI).sin().powi(2));
                assert!((lyapunov_w_prime(&q, &s).unwrap() - alt).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transforms() {
        assert!(x_from_t(2, PI / 4.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(t_from_x(3, 0.0), PI / 6.0, epsilon = 1e-15);
        for g in [1, 2, 3, 4, 6] {
            for x in [-5.0, 5.0] {
                assert!((x_from_t(g, t_from_x(g, x)).unwrap() - x).abs() < 1e-12);
            }
        }
        assert!(x_from_t(2, 0.0).is_err());
        assert!(x_from_t(2, PI / 2.0).is_err());
        assert!(rhs_t(&p(3, 1), PI / 3.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cached_critical_points() {
        let z0 = h1_zero_g3();
        assert!(z0 > 0.0 && coeff_h(3, z0).h1.abs() < 1e-11);
        let x0 = h1_min_g6();
        assert!(x0 > 0.0 && coeff_h(6, x0).h1p.abs() < 1e-11);
        assert!(coeff_h(6, x0 - 0.1).h1p < 0.0 && coeff_h(6, x0 + 0.1).h1p > 0.0);
    }

    #[test]
    fn symmetry_points() {
        assert_relative_eq!(SymmetryPoint::new(4, 1).y, 5.0 * PI / 8.0, epsilon = 1e-15);
        assert_relative_eq!(SymmetryPoint::new(3, -2).y, -5.0 * PI / 6.0, epsilon = 1e-15);
    }
}
