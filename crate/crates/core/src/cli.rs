//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::noncompact::{
    builtin, compute_deformation, extend_monotone, ivp_solve_with, AGrowth, DeformConfig, ExtensionReport,
    ExtensionScheme, IvpConfig, RadialProfile, SignConvention, SplitPolicy, WarpedMetric, BUILTIN_NAMES,
};
use crate::ode::ActionParams;
use crate::output::{svg_panels, write_atomic, write_json, Panel, Series};
use crate::shooting::{
    find_critical_velocities_with, shoot_with, solve_symmetric_bvp_with, Behavior, CriticalVelocities, ShootConfig,
    VelocitySearch,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Upper critical velocities `u₁` for `g = 2, 3, 4, 6`, three decimals.
pub const REFERENCE_U1: [f64; 4] = [0.881, 0.954, 0.975, 0.989];
/// Lower critical velocities `l₀` for `g = 2, 3, 4, 6`, three decimals.
pub const REFERENCE_L0: [f64; 4] = [-0.881, -0.750, -0.648, -0.507];
pub const TABLE_G: [u32; 4] = [2, 3, 4, 6];
/// Allowance against three-decimal values.
pub const ROUNDED_TOL: f64 = 5e-3;
/// Allowance against the exact rationals `u₀ = 1/g`, `l₁ = -(g-1)/g`.
pub const EXACT_TOL: f64 = 1e-6;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "harmap", version, about = "Equivariant harmonic maps by shooting and conformal deformation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical velocities for g = 2, 3, 4, 6 (m = 1) next to the published values.
    Table(TableArgs),
    /// One shot from a symmetry point, classified.
    Shoot(ShootArgs),
    /// Critical velocities l_j < u_j around a seed with L < 0.
    Find(FindArgs),
    /// Certified symmetric solutions at (or near) critical velocities.
    Solve(SolveArgs),
    /// Conformal deformation making a monotone radial profile harmonic.
    Deform(DeformArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "HARMAP_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ActionArgs {
    #[arg(long)]
    pub g: u32,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub j: i32,
}

impl ActionArgs {
    fn params(&self) -> Result<ActionParams> {
        ActionParams::symmetric(self.g, self.m)
    }
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Bisection bracket width.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ShootArgs {
    #[command(flatten)]
    pub action: ActionArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub v: f64,
    /// Local error tolerance of the integrator.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Target accuracy of W(±∞).
    #[arg(long, default_value_t = 1e-10)]
    pub precision: f64,
    /// Half-width of the integration interval (default from the precision).
    #[arg(long)]
    pub xmax: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FindArgs {
    #[command(flatten)]
    pub action: ActionArgs,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub v_lo: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub v_hi: f64,
    /// Velocity with L < 0 (default: 0 for odd j, a small negative sweep for even j).
    #[arg(long, allow_hyphen_values = true)]
    pub v_seed: Option<f64>,
    /// Bisection bracket width.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub action: ActionArgs,
    /// Approximate critical velocity; without it both l_j and u_j are found first.
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DeformArgs {
    /// Metric configuration file.
    #[arg(long, conflicts_with = "metric")]
    pub config: Option<PathBuf>,
    /// Built-in metric: flat_cone, smoothed or two_factor.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub v: f64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// continue, blend or ramp.
    #[arg(long, default_value = "blend")]
    pub scheme: String,
    /// Target slope of blend/ramp (default 2·r'(ε)).
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// Join window of blend/ramp.
    #[arg(long)]
    pub window: Option<f64>,
    /// Horizon.
    #[arg(long = "T", default_value_t = 10.0)]
    pub horizon: f64,
    /// uniform, single:<i> or weights:<w0>,<w1>,...
    #[arg(long, default_value = "uniform")]
    pub split: String,
    /// Tolerance of the radial initial value problem.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Flip the sign of the last integrand term (fails the residual check).
    #[arg(long)]
    pub literal_sign: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Runs a parsed command and returns the process exit code. Errors are
/// reported on stderr with their stable name.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Table(a) => cmd_table(&a),
        Command::Shoot(a) => cmd_shoot(&a),
        Command::Find(a) => cmd_find(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Deform(a) => cmd_deform(&a),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NUMERIC,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn check_bracket_tol(tol: f64) -> Result<()> {
    if (1e-14..=1e-2).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Domain(format!("--tol {tol:e} outside [1e-14, 1e-2]")))
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn trajectory_panels(traj: &Trajectory, title: &str) -> Vec<Panel> {
    let xs: Vec<f64> = traj.samples().iter().map(|s| s.x).collect();
    let rs = traj.samples().iter().map(|s| s.r);
    let ws = traj.w_values();
    vec![
        Panel {
            title: title.to_string(),
            x_label: "x".into(),
            y_label: "r".into(),
            series: vec![Series {
                label: "r(x)".into(),
                points: xs.iter().copied().zip(rs).collect(),
            }],
        },
        Panel {
            title: "Lyapunov function".into(),
            x_label: "x".into(),
            y_label: "W".into(),
            series: vec![Series {
                label: "W(x)".into(),
                points: xs.iter().copied().zip(ws).collect(),
            }],
        },
    ]
}

fn write_trajectory(dir: &Path, stem: &str, traj: &Trajectory, svg: bool, title: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.csv")), &csv_bytes(|b| traj.write_csv(b))?)?;
    if svg {
        write_atomic(&dir.join(format!("{stem}.svg")), svg_panels(&trajectory_panels(traj, title)).as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub g: u32,
    pub u1: f64,
    pub u1_ref: f64,
    pub u1_dev: f64,
    pub l0: f64,
    pub l0_ref: f64,
    pub l0_dev: f64,
    pub u0: f64,
    pub u0_exact: f64,
    pub u0_dev: f64,
    pub l1: f64,
    pub l1_exact: f64,
    pub l1_dev: f64,
    pub pass: bool,
}

/// Critical velocities for one `g` (m = 1): `(j = 0, j = 1)`.
pub fn table_row(g: u32, tol: f64) -> Result<TableRow> {
    let p = ActionParams::symmetric(g, 1)?;
    let cfg = ShootConfig::default();
    let c0 = find_critical_velocities_with(&p, 0, &VelocitySearch::default(), tol, &cfg)?;
    let c1 = find_critical_velocities_with(&p, 1, &VelocitySearch::default(), tol, &cfg)?;
    let i = TABLE_G.iter().position(|&x| x == g).ok_or_else(|| Error::Domain(format!("g = {g} not tabulated")))?;
    let gf = f64::from(g);
    let (u0_exact, l1_exact) = (1.0 / gf, -(gf - 1.0) / gf);
    let mut row = TableRow {
        g,
        u1: c1.u,
        u1_ref: REFERENCE_U1[i],
        u1_dev: (c1.u - REFERENCE_U1[i]).abs(),
        l0: c0.l,
        l0_ref: REFERENCE_L0[i],
        l0_dev: (c0.l - REFERENCE_L0[i]).abs(),
        u0: c0.u,
        u0_exact,
        u0_dev: (c0.u - u0_exact).abs(),
        l1: c1.l,
        l1_exact,
        l1_dev: (c1.l - l1_exact).abs(),
        pass: false,
    };
    row.pass = row.u1_dev <= ROUNDED_TOL && row.l0_dev <= ROUNDED_TOL && row.u0_dev <= EXACT_TOL && row.l1_dev <= EXACT_TOL;
    Ok(row)
}

fn cmd_table(a: &TableArgs) -> Result<bool> {
    check_bracket_tol(a.tol)?;
    let results: Vec<Result<TableRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = TABLE_G.iter().map(|&g| s.spawn(move || table_row(g, a.tol))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Inconclusive("worker panicked".into()))))
            .collect()
    });

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>2} | {:>22} | {:>22} | {:>20} | {:>20}",
        "g", "u1 (ref, dev)", "l0 (ref, dev)", "u0 (dev vs 1/g)", "l1 (dev vs -(g-1)/g)"
    );
    let mut rows = Vec::new();
    let mut ok = true;
    for (g, r) in TABLE_G.iter().zip(results) {
        match r {
            Ok(row) => {
                let _ = writeln!(
                    out,
                    "{:>2} | {:.6} ({:.3}, {:.1e}) | {:.6} ({:.3}, {:.1e}) | {:.9} ({:.1e}) | {:.9} ({:.1e}){}",
                    row.g,
                    row.u1,
                    row.u1_ref,
                    row.u1_dev,
                    row.l0,
                    row.l0_ref,
                    row.l0_dev,
                    row.u0,
                    row.u0_dev,
                    row.l1,
                    row.l1_dev,
                    if row.pass { "" } else { "  FAIL" }
                );
                ok &= row.pass;
                rows.push(row);
            }
            Err(e) => {
                let _ = writeln!(out, "{g:>2} | failed: {} ({e})", e.name());
                ok = false;
            }
        }
    }
    print!("{out}");
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&a.out.out.join("table.csv"), &bytes)?;
    Ok(ok)
}

fn cmd_shoot(a: &ShootArgs) -> Result<bool> {
    let p = a.action.params()?;
    let cfg = ShootConfig {
        tol: a.tol,
        precision: a.precision,
        x_max: a.xmax,
        ..ShootConfig::default()
    };
    let o = shoot_with(&p, a.action.j, a.v, &cfg)?;
    let stem = format!("shoot_g{}_m{}_j{}_v{}", p.g(), a.action.m, a.action.j, a.v);
    write_trajectory(&a.out.out, &stem, &o.traj, a.out.svg, &format!("g = {}, m = {}, j = {}, v = {}", p.g(), a.action.m, a.action.j, a.v))?;
    write_json(&a.out.out.join(format!("{stem}.json")), &o)?;
    match o.k {
        Some(k) => println!("behavior={} k={k} L={:e}", o.behavior.name(), o.l_minus.value),
        None => println!("behavior={} L={:e}", o.behavior.name(), o.l_minus.value),
    }
    Ok(o.behavior != Behavior::Inconclusive)
}

fn search(a: &FindArgs) -> VelocitySearch {
    VelocitySearch {
        v_lo: a.v_lo,
        v_hi: a.v_hi,
        v_seed: a.v_seed,
    }
}

fn cmd_find(a: &FindArgs) -> Result<bool> {
    check_bracket_tol(a.tol)?;
    let p = a.action.params()?;
    let c: CriticalVelocities = find_critical_velocities_with(&p, a.action.j, &search(a), a.tol, &ShootConfig::default())?;
    write_json(&a.out.out.join(format!("find_g{}_m{}_j{}.json", p.g(), a.action.m, a.action.j)), &c)?;
    println!("l={:.12} u={:.12} bracket={:.1e} evaluations={}", c.l, c.u, c.bracket_width, c.evaluations);
    Ok(true)
}

fn cmd_solve(a: &SolveArgs) -> Result<bool> {
    check_bracket_tol(a.tol)?;
    let p = a.action.params()?;
    let cfg = ShootConfig::default();
    let velocities = match a.v {
        Some(v) => vec![v],
        None => {
            let c = find_critical_velocities_with(&p, a.action.j, &VelocitySearch::default(), a.tol, &cfg)?;
            vec![c.l, c.u]
        }
    };
    for v in velocities {
        let s = solve_symmetric_bvp_with(&p, a.action.j, v, &cfg)?;
        let stem = format!("solve_g{}_m{}_j{}_k{}", p.g(), a.action.m, a.action.j, s.k);
        write_trajectory(&a.out.out, &stem, &s.traj, a.out.svg, &format!("g = {}, m = {}, k = {}", p.g(), a.action.m, s.k))?;
        write_json(&a.out.out.join(format!("{stem}.json")), &s.sidecar())?;
        println!(
            "v={:.12} k={} j''={} L={:e} W-jump={:.9} defect={:.1e}",
            s.v,
            s.k,
            s.j_pp,
            s.l_minus.value,
            s.w_jump(),
            s.defect
        );
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct DeformReport<'a> {
    metric: &'a str,
    v: f64,
    extension: ExtensionReport,
    split: &'a SplitPolicy,
    sign: SignConvention,
    residual_max: f64,
    quad_error: f64,
    a_growth: AGrowth,
    launch_change: Option<f64>,
    harmonic: bool,
}

fn load_metric(a: &DeformArgs) -> Result<(WarpedMetric, String)> {
    match (&a.config, &a.metric) {
        (Some(path), _) => {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
            Ok((WarpedMetric::from_path(path)?, name))
        }
        (None, Some(name)) => builtin(name)
            .map(|m| (m, name.clone()))
            .ok_or_else(|| Error::Config(format!("unknown metric '{name}', expected one of {BUILTIN_NAMES:?}"))),
        (None, None) => Err(Error::Config("need --config PATH or --metric NAME".into())),
    }
}

fn cmd_deform(a: &DeformArgs) -> Result<bool> {
    let (metric, name) = load_metric(a)?;
    let scheme = ExtensionScheme::parse(&a.scheme, a.slope, a.window)?;
    let split = SplitPolicy::parse(&a.split)?;
    split.coefficients(&metric.multiplicities())?;
    if !(a.epsilon > 0.0 && a.horizon > a.epsilon) {
        return Err(Error::Domain(format!("need 0 < epsilon < T, got {}, {}", a.epsilon, a.horizon)));
    }
    let base = ivp_solve_with(&metric, a.v, a.epsilon, &IvpConfig::with_tol(a.tol))?;
    let ext = extend_monotone(&base, scheme, a.horizon)?;
    let cfg = DeformConfig {
        sign: if a.literal_sign {
            SignConvention::Literal
        } else {
            SignConvention::Corrected
        },
        ..DeformConfig::default()
    };
    let d = compute_deformation(&metric, &ext, ext.epsilon(), a.horizon, &split, &cfg)?;
    let harmonic = d.residual_max < RESIDUAL_TOL;
    let growth = d.growth();
    let stem = format!("deform_{name}_v{}_{}", a.v, scheme.name());
    let dir = &a.out.out;
    write_atomic(&dir.join(format!("{stem}.csv")), &csv_bytes(|b| d.write_csv(b))?)?;
    let report = DeformReport {
        metric: &name,
        v: a.v,
        extension: *ext.report(),
        split: &split,
        sign: cfg.sign,
        residual_max: d.residual_max,
        quad_error: d.quad_error,
        a_growth: growth,
        launch_change: base.launch_change(),
        harmonic,
    };
    write_json(&dir.join(format!("{stem}.json")), &report)?;
    if a.out.svg {
        write_atomic(&dir.join(format!("{stem}.svg")), svg_panels(&deform_panels(&d, &ext)?).as_bytes())?;
    }
    println!(
        "metric={name} scheme={} epsilon={} residual_max={:.3e} A(T)={:.6} max|A|={:.6} at t={:.3} min|r'|={:.6}",
        scheme.name(),
        ext.epsilon(),
        d.residual_max,
        growth.a_end,
        growth.a_max_abs,
        growth.t_of_max,
        ext.report().min_rate
    );
    Ok(harmonic)
}

fn deform_panels(d: &crate::noncompact::DeformationResult, ext: &dyn RadialProfile) -> Result<Vec<Panel>> {
    let t = d.t();
    let identity = t.iter().map(|&s| (s, s)).collect();
    let r = t.iter().map(|&s| Ok((s, ext.jet(s)?.r))).collect::<Result<Vec<_>>>()?;
    Ok(vec![
        Panel {
            title: "radial profile".into(),
            x_label: "t".into(),
            y_label: "r".into(),
            series: vec![
                Series {
                    label: "r(t)".into(),
                    points: r,
                },
                Series {
                    label: "identity".into(),
                    points: identity,
                },
            ],
        },
        Panel {
            title: "conformal deformation".into(),
            x_label: "t".into(),
            y_label: "A".into(),
            series: vec![Series {
                label: "A(t)".into(),
                points: t.iter().copied().zip(d.a.iter().copied()).collect(),
            }],
        },
    ])
}
