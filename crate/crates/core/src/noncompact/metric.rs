//! Warped-product metrics `dt² + f₀²(t) g_{S^k₀} + Σ fᵢ²(t) gᵢ` and their
//! key-value configuration format.

use std::path::Path;
use std::sync::Arc;

use super::profile::{Jet, Profile, Table};
use crate::error::{Error, Result};

const INIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub k: u32,
    pub a: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMetric {
    k0: u32,
    f0: Profile,
    components: Vec<Component>,
}

fn singular(t: f64, i: usize, f: f64) -> Error {
    Error::ProfileSingular {
        t,
        reason: format!("f_{i} = {f:e} <= 0"),
    }
}

impl WarpedMetric {
    /// Checks `k₀ ≥ 2`, `f₀(0) = 0`, `ḟ₀(0) = 1`, and `fᵢ(0) = aᵢ`,
    /// `ḟᵢ(0) = 0` for every compact factor.
    pub fn new(k0: u32, f0: Profile, components: Vec<Component>) -> Result<Self> {
        if k0 < 2 {
            return Err(Error::Config(format!("k0 must be >= 2, got {k0}")));
        }
        let j0 = f0.jet(0.0)?;
        if j0.f.abs() > INIT_TOL || (j0.df - 1.0).abs() > INIT_TOL {
            return Err(Error::Config(format!(
                "sphere profile needs f(0) = 0, f'(0) = 1; got {}, {}",
                j0.f, j0.df
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.k == 0 || !(c.a > 0.0 && c.a.is_finite()) {
                return Err(Error::Config(format!("component {}: need k >= 1 and a > 0", i + 1)));
            }
            let j = c.profile.jet(0.0)?;
            if (j.f - c.a).abs() > INIT_TOL || j.df.abs() > INIT_TOL {
                return Err(Error::Config(format!(
                    "component {}: {} profile has f(0) = {}, f'(0) = {}; need a = {}, 0",
                    i + 1,
                    c.profile.name(),
                    j.f,
                    j.df,
                    c.a
                )));
            }
        }
        Ok(WarpedMetric { k0, f0, components })
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn f0(&self) -> &Profile {
        &self.f0
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Number of warped factors including the sphere factor.
    pub fn factors(&self) -> usize {
        self.components.len() + 1
    }

    /// Multiplicities `(k₀, k₁, …)`.
    pub fn multiplicities(&self) -> Vec<u32> {
        std::iter::once(self.k0).chain(self.components.iter().map(|c| c.k)).collect()
    }

    pub fn total_dim(&self) -> u32 {
        self.multiplicities().iter().sum()
    }

    fn each(&self) -> impl Iterator<Item = (f64, &Profile)> {
        std::iter::once((f64::from(self.k0), &self.f0))
            .chain(self.components.iter().map(|c| (f64::from(c.k), &c.profile)))
    }

    fn jet_positive(&self, i: usize, p: &Profile, t: f64) -> Result<Jet> {
        let j = p.jet(t)?;
        if !(j.f > 0.0) {
            return Err(singular(t, i, j.f));
        }
        Ok(j)
    }

    /// `Σ kᵢ ḟᵢ(t)/fᵢ(t)`.
    pub fn drift(&self, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (k, p)) in self.each().enumerate() {
            let j = self.jet_positive(i, p, t)?;
            acc += k * j.df / j.f;
        }
        Ok(acc)
    }

    /// `Σ kᵢ fᵢ(r) ḟᵢ(r) / fᵢ²(t)`.
    pub fn force(&self, t: f64, r: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (k, p)) in self.each().enumerate() {
            let jt = self.jet_positive(i, p, t)?;
            let jr = p.jet(r)?;
            acc += k * jr.f * jr.df / (jt.f * jt.f);
        }
        Ok(acc)
    }

    /// `r̈` from the radial harmonic-map equation.
    pub fn accel(&self, t: f64, r: f64, rdot: f64) -> Result<f64> {
        Ok(self.force(t, r)? - self.drift(t)? * rdot)
    }

    /// Left side of the radial equation with extra drift `Σ kᵢ α̇ᵢ`.
    pub fn residual(&self, t: f64, r: f64, rdot: f64, rddot: f64, extra_drift: f64) -> Result<f64> {
        Ok(rddot + (self.drift(t)? + extra_drift) * rdot - self.force(t, r)?)
    }

    /// Parses the key-value format; `tab_path` entries resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        parse_config(text, base)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        parse_config(&text, path.parent())
    }
}

/// `k₀ = 2`, `f₀ = t`, no compact factors.
pub fn flat_cone() -> WarpedMetric {
    WarpedMetric::new(2, Profile::Cone, Vec::new()).expect("valid built-in metric")
}

/// `k₀ = 2` with one factor `k₁ = 3`, `f₁ = √(1 + t²)`.
pub fn cone_with_smoothed_factor() -> WarpedMetric {
    let c = Component {
        k: 3,
        a: 1.0,
        profile: Profile::SmoothedCone { a: 1.0 },
    };
    WarpedMetric::new(2, Profile::Cone, vec![c]).expect("valid built-in metric")
}

/// `k₀ = 3` with a smoothed-cone factor (`k = 2`, `a = 0.5`) and a slowly
/// growing cosh collar (`k = 1`, `a = 8`).
pub fn two_factor() -> WarpedMetric {
    let c1 = Component {
        k: 2,
        a: 0.5,
        profile: Profile::SmoothedCone { a: 0.5 },
    };
    let c2 = Component {
        k: 1,
        a: 8.0,
        profile: Profile::CoshCollar { a: 8.0 },
    };
    WarpedMetric::new(3, Profile::Cone, vec![c1, c2]).expect("valid built-in metric")
}

/// The three metrics shipped with the crate, by name.
pub fn builtin(name: &str) -> Option<WarpedMetric> {
    match name {
        "flat_cone" => Some(flat_cone()),
        "smoothed" => Some(cone_with_smoothed_factor()),
        "two_factor" => Some(two_factor()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["flat_cone", "smoothed", "two_factor"];

#[derive(Default)]
struct Block {
    line: usize,
    k: Option<u32>,
    a: Option<f64>,
    profile: Option<String>,
    tab_path: Option<String>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn make_profile(b: &Block, base: Option<&Path>, sphere: bool) -> Result<Profile> {
    let name = b.profile.as_deref().unwrap_or(if sphere { "cone" } else { "" });
    let need_a = || b.a.ok_or_else(|| bad(b.line, format!("profile {name} needs a")));
    Ok(match name {
        "cone" => Profile::Cone,
        "smoothed_cone" => Profile::SmoothedCone { a: need_a()? },
        "cosh_collar" => Profile::CoshCollar { a: need_a()? },
        "tabulated" => {
            let rel = b
                .tab_path
                .as_deref()
                .ok_or_else(|| bad(b.line, "tabulated profile needs tab_path"))?;
            let path = match base {
                Some(dir) if Path::new(rel).is_relative() => dir.join(rel),
                _ => Path::new(rel).to_path_buf(),
            };
            Profile::Tabulated(Arc::new(Table::from_path(&path)?))
        }
        "" => return Err(bad(b.line, "component without profile")),
        other => return Err(bad(b.line, format!("unknown profile '{other}'"))),
    })
}

fn parse_config(text: &str, base: Option<&Path>) -> Result<WarpedMetric> {
    let mut top = Block::default();
    let mut blocks: Vec<Block> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line != "[component]" {
                return Err(bad(line_no, format!("unknown section {line}")));
            }
            blocks.push(Block {
                line: line_no,
                ..Block::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| bad(line_no, format!("expected key = value, got '{line}'")))?;
        let num = || value.parse::<f64>().map_err(|_| bad(line_no, format!("{key}: not a number: '{value}'")));
        let int = || value.parse::<u32>().map_err(|_| bad(line_no, format!("{key}: not an integer: '{value}'")));
        let in_top = blocks.is_empty();
        let cur = match blocks.last_mut() {
            Some(b) => b,
            None => &mut top,
        };
        match key {
            "k0" if in_top => cur.k = Some(int()?),
            "k" if !in_top => cur.k = Some(int()?),
            "a" => cur.a = Some(num()?),
            "profile" => cur.profile = Some(value.to_string()),
            "tab_path" => cur.tab_path = Some(value.to_string()),
            _ => return Err(bad(line_no, format!("unexpected key '{key}'"))),
        }
    }
    let k0 = top.k.ok_or_else(|| Error::Config("missing k0".into()))?;
    let f0 = make_profile(&top, base, true)?;
    let components = blocks
        .iter()
        .map(|b| {
            Ok(Component {
                k: b.k.ok_or_else(|| bad(b.line, "component without k"))?,
                a: b.a.ok_or_else(|| bad(b.line, "component without a"))?,
                profile: make_profile(b, base, false)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WarpedMetric::new(k0, f0, components)
}
