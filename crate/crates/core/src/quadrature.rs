//! Adaptive Gauss–Kronrod (7, 15) quadrature with global bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-11,
            rel_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod rule with the QUADPACK error heuristic.
pub fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let p = panel(f, a, b)?;
    Ok((p.value, p.error))
}

fn panel<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut fv = [[0.0; 2]; 7];
    for (i, x) in XGK[..7].iter().enumerate() {
        let f1 = f(c - h * x)?;
        let f2 = f(c + h * x)?;
        fv[i] = [f1, f2];
        kron += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (i, [f1, f2]) in fv.iter().enumerate() {
        asc += WGK[i] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let mut abs_k = WGK[7] * fc.abs();
    for (i, [f1, f2]) in fv.iter().enumerate() {
        abs_k += WGK[i] * (f1.abs() + f2.abs());
    }
    let value = kron * h;
    let asc = asc * h.abs();
    let abs_k = abs_k * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_k;
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    Ok(Panel {
        a,
        b,
        value,
        error: err,
        floor,
    })
}

/// Adaptive quadrature of `f` over `[a, b]`.
///
/// Stops early once at least half of the estimated error is the rounding
/// floor of the panels, since bisection cannot reduce that part. Fails with
/// [`Error::Inconclusive`] when the interval budget runs out before either
/// condition is met; errors from `f` propagate unchanged.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Quad>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("quadrature over [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quad {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            intervals: 0,
        });
    }
    let first = panel(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_floor = first.floor;
    let mut heap = BinaryHeap::from([first]);
    let mut evaluations = 15;
    let target = |v: f64| cfg.abs_tol.max(cfg.rel_tol * v.abs());
    while total_err > target(total) && total_err > 2.0 * total_floor {
        if heap.len() >= cfg.max_intervals {
            return Err(Error::Inconclusive(format!(
                "quadrature on [{a}, {b}] stalled at error {total_err:e} after {} panels",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Panel at floating-point resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let left = panel(&mut f, worst.a, mid)?;
        let right = panel(&mut f, mid, worst.b)?;
        evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quad {
        value,
        error,
        evaluations,
        intervals: heap.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn polynomials_up_to_degree_22_are_exact() {
        let (v, _) = gk15(&mut ok(|x: f64| x.powi(22)), 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 23.0).abs() < 1e-15);
        let (v, _) = gk15(&mut ok(|x: f64| 3.0 * x * x - 1.0), -1.0, 2.0).unwrap();
        assert!((v - 6.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_and_peaked_integrands() {
        let cfg = QuadConfig::default();
        let q = integrate(ok(f64::sin), 0.0, std::f64::consts::PI, &cfg).unwrap();
        assert!((q.value - 2.0).abs() < 1e-13);
        // Peak of width 1e-3: arctan antiderivative.
        let w = 1e-3;
        let q = integrate(ok(|x: f64| w / (x * x + w * w)), -1.0, 1.0, &cfg).unwrap();
        let exact = 2.0 * (1.0 / w).atan();
        assert!((q.value - exact).abs() < 1e-10, "{}", q.value - exact);
        assert!(q.intervals > 1);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let q = integrate(ok(f64::sqrt), 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let cfg = QuadConfig::default();
        let f = |x: f64| (x * x).exp();
        let a = integrate(ok(f), 0.0, 1.5, &cfg).unwrap().value;
        let b = integrate(ok(f), 1.5, 0.0, &cfg).unwrap().value;
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x: f64| if x > 0.5 { Err(Error::Domain("x > 0.5".into())) } else { Ok(x) },
            0.0,
            1.0,
            &QuadConfig::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let cfg = QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let r = integrate(ok(|x: f64| (1.0 / x).sin()), 1e-3, 1.0, &cfg);
        assert!(matches!(r, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn tolerance_below_rounding_stops_at_the_floor() {
        let cfg = QuadConfig {
            abs_tol: 1e-20,
            rel_tol: 0.0,
            max_intervals: 50,
        };
        let q = integrate(ok(|x: f64| 1e3 * x.exp()), 0.0, 1.0, &cfg).unwrap();
        assert!((q.value - 1e3 * (1f64.exp() - 1.0)).abs() < 1e-10);
        assert!(q.error < 1e-10);
    }
}
