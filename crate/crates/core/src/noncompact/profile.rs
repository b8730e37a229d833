//! Warping profiles `f(t)` with their first two derivatives.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};

/// `(f, ḟ, f̈)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `f(t) = t`.
    Cone,
    /// `f(t) = √(a² + t²)`.
    SmoothedCone { a: f64 },
    /// `f(t) = a·cosh(t/a)`.
    CoshCollar { a: f64 },
    Tabulated(Arc<Table>),
}

impl Profile {
    pub fn jet(&self, t: f64) -> Result<Jet> {
        Ok(match self {
            Profile::Cone => Jet { f: t, df: 1.0, ddf: 0.0 },
            Profile::SmoothedCone { a } => {
                let f = a.hypot(t);
                Jet {
                    f,
                    df: t / f,
                    ddf: a * a / (f * f * f),
                }
            }
            Profile::CoshCollar { a } => {
                let u = t / a;
                Jet {
                    f: a * u.cosh(),
                    df: u.sinh(),
                    ddf: u.cosh() / a,
                }
            }
            Profile::Tabulated(tab) => tab.jet(t)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Cone => "cone",
            Profile::SmoothedCone { .. } => "smoothed_cone",
            Profile::CoshCollar { .. } => "cosh_collar",
            Profile::Tabulated(_) => "tabulated",
        }
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    t: f64,
    f: f64,
    fdot: f64,
    fddot: f64,
}

/// Sampled profile. `f` and `ḟ` come from a piecewise cubic Hermite
/// interpolant whose node slopes are the tabulated `ḟ`, limited
/// Fritsch–Carlson style so monotone data stays monotone; `f̈` is
/// interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    f: Vec<f64>,
    slope: Vec<f64>,
    ddf: Vec<f64>,
}

impl Table {
    pub fn new(t: Vec<f64>, f: Vec<f64>, fdot: Vec<f64>, fddot: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || f.len() != n || fdot.len() != n || fddot.len() != n {
            return Err(Error::Config(format!("profile table needs >= 2 rows of equal length, got {n}")));
        }
        if t.iter().chain(&f).chain(&fdot).chain(&fddot).any(|v| !v.is_finite()) {
            return Err(Error::Config("profile table contains non-finite values".into()));
        }
        if let Some(k) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("profile table abscissae not increasing at row {}", k + 2)));
        }
        let mut slope = fdot;
        for k in 0..n - 1 {
            let secant = (f[k + 1] - f[k]) / (t[k + 1] - t[k]);
            if secant == 0.0 {
                slope[k] = 0.0;
                slope[k + 1] = 0.0;
                continue;
            }
            let a = slope[k] / secant;
            let b = slope[k + 1] / secant;
            if a < 0.0 {
                slope[k] = 0.0;
            }
            if b < 0.0 {
                slope[k + 1] = 0.0;
            }
            let norm = a.max(0.0).hypot(b.max(0.0));
            if norm > 3.0 {
                let tau = 3.0 / norm;
                slope[k] = tau * a.max(0.0) * secant;
                slope[k + 1] = tau * b.max(0.0) * secant;
            }
        }
        Ok(Table { t, f, slope, ddf: fddot })
    }

    /// Reads CSV with header `t,f,fdot,fddot`.
    pub fn from_csv<R: Read>(rdr: R) -> Result<Self> {
        let mut cols: [Vec<f64>; 4] = Default::default();
        for row in csv::Reader::from_reader(rdr).deserialize() {
            let row: Row = row?;
            for (c, v) in cols.iter_mut().zip([row.t, row.f, row.fdot, row.fddot]) {
                c.push(v);
            }
        }
        let [t, f, fd, fdd] = cols;
        Table::new(t, f, fd, fdd)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Config(format!("cannot open profile table {}: {e}", path.display())))?;
        Table::from_csv(file)
    }

    /// Samples an analytic profile on `n + 1` equispaced points of `[0, t_max]`.
    pub fn sample(p: &Profile, t_max: f64, n: usize) -> Result<Self> {
        let mut cols: [Vec<f64>; 4] = Default::default();
        for i in 0..=n {
            let t = t_max * i as f64 / n as f64;
            let j = p.jet(t)?;
            for (c, v) in cols.iter_mut().zip([t, j.f, j.df, j.ddf]) {
                c.push(v);
            }
        }
        let [t, f, fd, fdd] = cols;
        Table::new(t, f, fd, fdd)
    }

    pub fn t_max(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn jet(&self, t: f64) -> Result<Jet> {
        let (lo, hi) = (self.t[0], self.t_max());
        if !(lo..=hi).contains(&t) {
            return Err(Error::ProfileSingular {
                t,
                reason: format!("outside tabulated range [{lo}, {hi}]"),
            });
        }
        let k = self.t.partition_point(|&x| x <= t).clamp(1, self.t.len() - 1) - 1;
        let h = self.t[k + 1] - self.t[k];
        let u = (t - self.t[k]) / h;
        let (y0, y1) = (self.f[k], self.f[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let f = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (3.0 * u2 - 2.0 * u3) * y1 + (u3 - u2) * m1;
        let df = ((6.0 * u2 - 6.0 * u) * (y0 - y1) + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (3.0 * u2 - 2.0 * u) * m1) / h;
        let ddf = (1.0 - u) * self.ddf[k] + u * self.ddf[k + 1];
        Ok(Jet { f, df, ddf })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_mismatch(p: &Profile, grid: impl Iterator<Item = f64>) -> f64 {
        let h = 1e-5;
        grid.map(|t| {
            let d = (p.jet(t + h).unwrap().f - p.jet(t - h).unwrap().f) / (2.0 * h);
            (d - p.jet(t).unwrap().df).abs()
        })
        .fold(0.0, f64::max)
    }

    #[test]
    fn analytic_derivatives_are_consistent() {
        for p in [
            Profile::Cone,
            Profile::SmoothedCone { a: 0.7 },
            Profile::CoshCollar { a: 2.0 },
        ] {
            let grid = (1..200).map(|i| i as f64 * 0.05);
            assert!(fd_mismatch(&p, grid) < 1e-6, "{}", p.name());
            let h = 1e-5;
            for t in [0.1, 1.0, 4.0] {
                let d2 = (p.jet(t + h).unwrap().df - p.jet(t - h).unwrap().df) / (2.0 * h);
                assert!((d2 - p.jet(t).unwrap().ddf).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn initial_values() {
        let j = Profile::SmoothedCone { a: 1.5 }.jet(0.0).unwrap();
        assert_eq!((j.f, j.df), (1.5, 0.0));
        let j = Profile::CoshCollar { a: 8.0 }.jet(0.0).unwrap();
        assert_eq!((j.f, j.df), (8.0, 0.0));
    }

    #[test]
    fn table_reproduces_its_source() {
        let src = Profile::SmoothedCone { a: 1.0 };
        let tab = Profile::Tabulated(Arc::new(Table::sample(&src, 10.0, 2000).unwrap()));
        let grid = (1..1000).map(|i| i as f64 * 0.00999);
        assert!(fd_mismatch(&tab, grid) < 1e-6);
        for t in [0.0, 0.123, 3.3, 9.999] {
            let (a, b) = (src.jet(t).unwrap(), tab.jet(t).unwrap());
            assert!((a.f - b.f).abs() < 1e-9, "t = {t}");
            assert!((a.df - b.df).abs() < 1e-6, "t = {t}");
            assert!((a.ddf - b.ddf).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn table_rejects_out_of_range_and_bad_rows() {
        let tab = Table::sample(&Profile::Cone, 1.0, 10).unwrap();
        assert!(matches!(tab.jet(1.5), Err(Error::ProfileSingular { .. })));
        assert!(matches!(tab.jet(-0.1), Err(Error::ProfileSingular { .. })));
        let r = Table::new(vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn monotone_data_stays_monotone() {
        // Slopes far too steep for the data: unlimited Hermite would overshoot.
        let tab = Table::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.1], vec![5.0, 5.0, 5.0], vec![0.0; 3]).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let f = tab.jet(i as f64 * 0.01).unwrap().f;
            assert!(f >= prev - 1e-15);
            assert!(f <= 1.1 + 1e-15);
            prev = f;
        }
    }

    #[test]
    fn csv_round_trip() {
        let data = "t,f,fdot,fddot\n0,1,0,1\n1,1.5,1,1\n2,3,2,1\n";
        let tab = Table::from_csv(data.as_bytes()).unwrap();
        assert_eq!(tab.jet(1.0).unwrap().f, 1.5);
        assert!(Table::from_csv("t,f\n0,1\n".as_bytes()).is_err());
    }
}
