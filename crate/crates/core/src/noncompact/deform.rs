//! Conformal deformation `Σ kᵢ αᵢ(t)` that makes a monotone radial profile
//! harmonic, and the residual check of the deformed equation.

use std::io::Write;

use serde::Serialize;

use super::extend::RadialProfile;
use super::metric::WarpedMetric;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadConfig};

const RATE_MIN: f64 = 1e-12;

/// How `A = Σ kᵢ αᵢ` is shared among the factors (index 0 is the sphere).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum SplitPolicy {
    /// `αᵢ = A / Σ kⱼ`.
    Uniform,
    /// `αᵢ = A / kᵢ`, all others zero.
    SingleComponent(usize),
    /// `αᵢ = wᵢ A / kᵢ` with `Σ wᵢ = 1`.
    Weights(Vec<f64>),
}

impl SplitPolicy {
    /// Coefficients `cᵢ` with `αᵢ = cᵢ A`; always `Σ kᵢ cᵢ = 1`.
    pub fn coefficients(&self, ks: &[u32]) -> Result<Vec<f64>> {
        let n = ks.len();
        match self {
            SplitPolicy::Uniform => {
                let total: u32 = ks.iter().sum();
                Ok(vec![1.0 / f64::from(total); n])
            }
            SplitPolicy::SingleComponent(i) => {
                if *i >= n {
                    return Err(Error::Domain(format!("component {i} out of range 0..{n}")));
                }
                let mut c = vec![0.0; n];
                c[*i] = 1.0 / f64::from(ks[*i]);
                Ok(c)
            }
            SplitPolicy::Weights(w) => {
                if w.len() != n {
                    return Err(Error::Domain(format!("{} weights for {n} factors", w.len())));
                }
                let sum: f64 = w.iter().sum();
                if !((sum - 1.0).abs() <= 1e-12) {
                    return Err(Error::SplitWeightsInvalid { sum });
                }
                Ok(w.iter().zip(ks).map(|(w, &k)| w / f64::from(k)).collect())
            }
        }
    }

    /// `uniform`, `single:<i>` or `weights:<w0>,<w1>,…`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad split policy '{s}'"));
        match s.split_once(':') {
            None if s == "uniform" => Ok(SplitPolicy::Uniform),
            Some(("single", i)) => Ok(SplitPolicy::SingleComponent(i.trim().parse().map_err(|_| bad())?)),
            Some(("weights", w)) => w
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(SplitPolicy::Weights),
            _ => Err(bad()),
        }
    }
}

/// Sign of the last term of the deformation integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignConvention {
    /// `+Σ kᵢ fᵢ(r) ḟᵢ(r) / (fᵢ² ṙ)`, which zeroes the deformed tension.
    Corrected,
    /// The opposite sign. Kept only to show that it fails the residual check.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformConfig {
    pub sign: SignConvention,
    pub grid_points: usize,
    pub quad_tol: f64,
}

impl Default for DeformConfig {
    fn default() -> Self {
        DeformConfig {
            sign: SignConvention::Corrected,
            grid_points: 1000,
            quad_tol: 1e-11,
        }
    }
}

/// The evaluation grid: `n` equispaced points on `[max(ε/10, 1e-4), T]`.
pub fn harmonicity_grid(epsilon: f64, horizon: f64, n: usize) -> Vec<f64> {
    let lo = (0.1 * epsilon).max(1e-4);
    let n = n.max(2);
    (0..n).map(|i| (lo + (horizon - lo) * i as f64 / (n - 1) as f64).min(horizon)).collect()
}

/// `αᵢ` and `α̇ᵢ` on a grid; `alpha[i][j]` is factor `i` at `t[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrids {
    pub t: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub alpha_dot: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationResult {
    pub epsilon: f64,
    pub horizon: f64,
    pub split: SplitPolicy,
    pub sign: SignConvention,
    pub multiplicities: Vec<u32>,
    pub r: Vec<f64>,
    pub rdot: Vec<f64>,
    /// `A = Σ kᵢ αᵢ` and its derivative (the integrand).
    pub a: Vec<f64>,
    pub a_dot: Vec<f64>,
    pub alphas: AlphaGrids,
    pub residual: Vec<f64>,
    pub residual_max: f64,
    /// Estimated quadrature error accumulated over `[ε, T]`.
    pub quad_error: f64,
}

/// Summary printed after a deformation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AGrowth {
    pub a_end: f64,
    pub a_max_abs: f64,
    pub t_of_max: f64,
}

impl DeformationResult {
    pub fn t(&self) -> &[f64] {
        &self.alphas.t
    }

    pub fn growth(&self) -> AGrowth {
        let (j, a_max_abs) = self
            .a
            .iter()
            .map(|a| a.abs())
            .enumerate()
            .fold((0, 0.0), |best, (j, a)| if a > best.1 { (j, a) } else { best });
        AGrowth {
            a_end: *self.a.last().unwrap_or(&0.0),
            a_max_abs,
            t_of_max: self.alphas.t.get(j).copied().unwrap_or(0.0),
        }
    }

    /// CSV with header `t,r,rdot,A,alpha_0,…,alpha_m,residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "r".into(), "rdot".into(), "A".into()];
        header.extend((0..self.alphas.alpha.len()).map(|i| format!("alpha_{i}")));
        header.push("residual".into());
        w.write_record(&header)?;
        for (j, t) in self.alphas.t.iter().enumerate() {
            let mut row = vec![*t, self.r[j], self.rdot[j], self.a[j]];
            row.extend(self.alphas.alpha.iter().map(|a| a[j]));
            row.push(self.residual[j]);
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Ȧ(t)` for `t > ε`.
pub fn deformation_integrand(metric: &WarpedMetric, r: &dyn RadialProfile, t: f64, sign: SignConvention) -> Result<f64> {
    let j = r.jet(t)?;
    if !(j.rdot.abs() >= RATE_MIN) {
        return Err(Error::DerivativeVanishes { t, rdot: j.rdot });
    }
    let force = metric.force(t, j.r)? / j.rdot;
    let last = match sign {
        SignConvention::Corrected => force,
        SignConvention::Literal => -force,
    };
    Ok(-j.rddot / j.rdot - metric.drift(t)? + last)
}

/// Integrates the deformation on `[ε, T]`, splits it, and fills in the
/// residual of the deformed equation on [`harmonicity_grid`].
pub fn compute_deformation(
    metric: &WarpedMetric,
    r: &dyn RadialProfile,
    epsilon: f64,
    horizon: f64,
    split: &SplitPolicy,
    cfg: &DeformConfig,
) -> Result<DeformationResult> {
    if !(epsilon > 0.0 && horizon > epsilon && horizon.is_finite()) {
        return Err(Error::Domain(format!("need 0 < epsilon < T, got {epsilon}, {horizon}")));
    }
    let ks = metric.multiplicities();
    let coeff = split.coefficients(&ks)?;
    let t = harmonicity_grid(epsilon, horizon, cfg.grid_points);
    let integrand = |s: f64| deformation_integrand(metric, r, s, cfg.sign);

    let mut jets = Vec::with_capacity(t.len());
    for &s in &t {
        let j = r.jet(s)?;
        if s >= epsilon && !(j.rdot.abs() >= RATE_MIN) {
            return Err(Error::DerivativeVanishes { t: s, rdot: j.rdot });
        }
        jets.push(j);
    }

    let span = horizon - epsilon;
    let mut a = Vec::with_capacity(t.len());
    let mut a_dot = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    let mut prev = epsilon;
    let mut quad_error = 0.0;
    for &s in &t {
        if s <= epsilon {
            a.push(0.0);
            a_dot.push(0.0);
            continue;
        }
        let qc = QuadConfig {
            abs_tol: cfg.quad_tol * (s - prev) / span,
            rel_tol: 0.0,
            max_intervals: 2000,
        };
        let q = quadrature::integrate(integrand, prev, s, &qc)?;
        acc += q.value;
        quad_error += q.error;
        prev = s;
        a.push(acc);
        a_dot.push(integrand(s)?);
    }

    let alpha: Vec<Vec<f64>> = coeff.iter().map(|c| a.iter().map(|v| c * v).collect()).collect();
    let alpha_dot: Vec<Vec<f64>> = coeff.iter().map(|c| a_dot.iter().map(|v| c * v).collect()).collect();
    let alphas = AlphaGrids { t, alpha, alpha_dot };
    let residual = residuals(metric, r, &alphas)?;
    let residual_max = residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(DeformationResult {
        epsilon,
        horizon,
        split: split.clone(),
        sign: cfg.sign,
        multiplicities: ks,
        r: jets.iter().map(|j| j.r).collect(),
        rdot: jets.iter().map(|j| j.rdot).collect(),
        a,
        a_dot,
        alphas,
        residual,
        residual_max,
        quad_error,
    })
}

/// Pointwise left side of the deformed radial equation
/// `r̈ + (Σ kᵢ ḟᵢ/fᵢ + Σ kᵢ α̇ᵢ) ṙ − Σ kᵢ fᵢ(r) ḟᵢ(r)/fᵢ²`.
pub fn residuals(metric: &WarpedMetric, r: &dyn RadialProfile, alphas: &AlphaGrids) -> Result<Vec<f64>> {
    let ks = metric.multiplicities();
    alphas
        .t
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let jet = r.jet(s)?;
            let extra: f64 = ks.iter().zip(&alphas.alpha_dot).map(|(&k, ad)| f64::from(k) * ad[j]).sum();
            metric.residual(s, jet.r, jet.rdot, jet.rddot, extra)
        })
        .collect()
}

/// Largest absolute residual over the grid of `alphas`.
pub fn verify_harmonicity(metric: &WarpedMetric, r: &dyn RadialProfile, alphas: &AlphaGrids) -> Result<f64> {
    Ok(residuals(metric, r, alphas)?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}
