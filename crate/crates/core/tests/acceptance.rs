//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harmap::cli::{table_row, TABLE_G};
use harmap::integrator::{integrate, integrate_fixed};
use harmap::noncompact::{
    builtin, compute_deformation, extend_monotone, ivp_solve, ivp_solve_with, DeformConfig, ExtensionScheme, IvpConfig,
    SignConvention, SplitPolicy, BUILTIN_NAMES,
};
use harmap::ode::{lyapunov_w_prime, rhs_x, ActionParams, State};
use harmap::shooting::{
    find_critical_velocities, shoot_with, solve_symmetric_bvp, Behavior, ShootConfig, SolutionRecord, VelocitySearch,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gf(g: u32) -> f64 {
    f64::from(g)
}

fn a(g: u32, x: f64) -> f64 {
    2.0 / gf(g) * x.exp().atan()
}

fn a1(g: u32, x: f64) -> f64 {
    1.0 / (gf(g) * x.cosh())
}

fn a2(g: u32, x: f64) -> f64 {
    -x.tanh() / (gf(g) * x.cosh())
}

fn lattice_distance(value: f64, offset: f64) -> f64 {
    let q = (value - offset) / FRAC_PI_2;
    (q - q.round()).abs() * FRAC_PI_2
}

fn table() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for g in TABLE_G {
        match table_row(g, 1e-9) {
            Ok(r) => {
                pass &= r.pass;
                parts.push(format!(
                    "g={g}: u1={:.4} l0={:.4} |u0-1/g|={:.0e} |l1+(g-1)/g|={:.0e}",
                    r.u1, r.l0, r.u0_dev, r.l1_dev
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("g={g}: {e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    outcome(pass, format!("{}; {secs:.1} s", parts.join("; ")))
}

fn linear_oracle() -> Outcome {
    let mut worst_res = 0.0_f64;
    let mut failures = Vec::new();
    for g in TABLE_G {
        for m in 1..=5 {
            let p = ActionParams::symmetric(g, m).unwrap();
            for (c, j) in [(1.0, 0), (-(gf(g) - 1.0), -1)] {
                for i in 0..1000 {
                    let x = -10.0 + 20.0 * f64::from(i) / 999.0;
                    let s = State::new(x, c * a(g, x), c * a1(g, x));
                    let res = (c * a2(g, x) - rhs_x(&p, &s).unwrap()).abs();
                    worst_res = worst_res.max(res);
                }
                let v = c / gf(g);
                match shoot_with(&p, j, v, &ShootConfig::default()) {
                    Ok(o) => {
                        let bound = o.l_minus.uncertainty();
                        let ok = matches!(o.behavior, Behavior::BvpSolution { .. }) && o.l_minus.value.abs() <= bound;
                        if !ok {
                            failures.push(format!("g={g} m={m} j={j}: {} L={:e}", o.behavior.name(), o.l_minus.value));
                        }
                    }
                    Err(e) => failures.push(format!("g={g} m={m} j={j}: {e}")),
                }
            }
        }
    }
    let pass = worst_res < 1e-10 && failures.is_empty();
    outcome(
        pass,
        format!(
            "max residual {worst_res:.1e} over 80 000 points; 40 shots, failures: {}",
            if failures.is_empty() { "none".into() } else { failures.join(", ") }
        ),
    )
}

/// The four solutions `(l₀, u₀, l₁, u₁)` per `g`.
fn certified_solutions() -> Vec<(u32, Result<SolutionRecord, String>)> {
    let mut out = Vec::new();
    for g in TABLE_G {
        let p = ActionParams::symmetric(g, 1).unwrap();
        for j in [0, 1] {
            match find_critical_velocities(&p, j, &VelocitySearch::default(), 1e-9) {
                Ok(c) => {
                    for v in [c.l, c.u] {
                        out.push((g, solve_symmetric_bvp(&p, j, v).map_err(|e| format!("j={j} v={v}: {e}"))));
                    }
                }
                Err(e) => out.push((g, Err(format!("j={j}: {e}")))),
            }
        }
    }
    out
}

fn four_solutions(sols: &[(u32, Result<SolutionRecord, String>)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for g in TABLE_G {
        let mine: Vec<_> = sols.iter().filter(|(h, _)| *h == g).map(|(_, s)| s).collect();
        let mut ks = Vec::new();
        let mut worst = 0.0_f64;
        for s in &mine {
            match s {
                Ok(s) => {
                    ks.push(s.k);
                    worst = worst.max(lattice_distance(s.r_minus, 0.0)).max(lattice_distance(s.r_plus, PI / gf(g)));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("g={g}: {e}"));
                }
            }
        }
        pass &= ks.len() == 4 && worst < 1e-4;
        let mut distinct = ks.clone();
        distinct.sort_unstable();
        distinct.dedup();
        parts.push(format!(
            "g={g}: k={ks:?} ({}), lattice distance {worst:.0e}",
            if distinct.len() == ks.len() { "distinct" } else { "not distinct" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn lyapunov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_drop = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    let mut errors = Vec::new();
    let cfg = ShootConfig {
        precision: 1e-8,
        ..ShootConfig::default()
    };
    for g in [2, 3, 4, 6] {
        let p = ActionParams::symmetric(g, 1).unwrap();
        for _ in 0..50 {
            let j = rng.gen_range(-2..=1);
            let v = rng.gen_range(-3.0..3.0);
            let o = match shoot_with(&p, j, v, &cfg) {
                Ok(o) => o,
                Err(e) => {
                    errors.push(format!("g={g} j={j} v={v:.3}: {e}"));
                    continue;
                }
            };
            let samples = o.traj.samples();
            let w = o.traj.w_values();
            for k in 1..samples.len() {
                if g != 6 || samples[k].x <= 0.0 {
                    worst_drop = worst_drop.max(w[k - 1] - w[k]);
                }
            }
            for s in samples {
                let bound = 4.0 * (gf(g) - 1.0) / (gf(g) * gf(g) * s.x.cosh());
                worst_ratio = worst_ratio.max(lyapunov_w_prime(&p, s).unwrap().abs() / bound);
            }
        }
    }
    let pass = worst_drop <= 1e-10 && worst_ratio <= 1.0 + 1e-12 && errors.is_empty();
    outcome(
        pass,
        format!(
            "200 trajectories; largest decrease of W {worst_drop:.1e}; max |W'|/bound {worst_ratio:.6}; errors: {}",
            if errors.is_empty() { "none".into() } else { errors.join(", ") }
        ),
    )
}

fn jumps(sols: &[(u32, Result<SolutionRecord, String>)]) -> Outcome {
    let s3 = 3f64.sqrt();
    let expected = |g: u32| match g {
        3 => Some((3.0 + s3) / 8.0),
        4 => Some(0.5),
        6 => Some((1.0 + s3) / 8.0),
        _ => None,
    };
    let mut pass = true;
    let mut worst = 0.0_f64;
    let mut reported = Vec::new();
    for (g, s) in sols {
        let Ok(s) = s else {
            pass = false;
            continue;
        };
        match expected(*g) {
            Some(c) => worst = worst.max((s.w_jump() - c).abs()),
            None => reported.push(format!("{:.6}", s.w_jump())),
        }
    }
    pass &= worst < 1e-4;
    outcome(
        pass,
        format!("max deviation {worst:.1e} (g=3,4,6); g=2 jumps reported: {}", reported.join(", ")),
    )
}

fn symmetry(sols: &[(u32, Result<SolutionRecord, String>)]) -> Outcome {
    let defects: Vec<f64> = sols.iter().filter_map(|(_, s)| s.as_ref().ok()).map(|s| s.defect).collect();
    let worst = defects.iter().copied().fold(0.0, f64::max);
    let pass = defects.len() == sols.len() && worst < 1e-8;
    outcome(pass, format!("{} solutions, max defect {worst:.1e}", defects.len()))
}

fn noncompact() -> Outcome {
    let start = Instant::now();
    let mut worst_res = 0.0_f64;
    let mut worst_a = 0.0_f64;
    let mut min_literal = f64::INFINITY;
    let mut errors = Vec::new();
    for name in BUILTIN_NAMES {
        let metric = builtin(name).unwrap();
        for v in [0.5, 1.0, 2.0] {
            let base = match ivp_solve(&metric, v, 0.5, 1e-10) {
                Ok(b) => b,
                Err(e) => {
                    errors.push(format!("{name} v={v}: {e}"));
                    continue;
                }
            };
            let schemes = [
                ExtensionScheme::ContinueOde,
                ExtensionScheme::CubicBlend {
                    slope: None,
                    window: None,
                },
                ExtensionScheme::Ramp {
                    slope: None,
                    window: None,
                },
            ];
            for scheme in schemes {
                let run = |sign| -> harmap::Result<_> {
                    let ext = extend_monotone(&base, scheme, 10.0)?;
                    let cfg = DeformConfig {
                        sign,
                        ..DeformConfig::default()
                    };
                    compute_deformation(&metric, &ext, ext.epsilon(), 10.0, &SplitPolicy::Uniform, &cfg)
                };
                match run(SignConvention::Corrected) {
                    Ok(d) => match scheme {
                        ExtensionScheme::ContinueOde => {
                            worst_a = d.a.iter().fold(worst_a, |m, a| m.max(a.abs()));
                        }
                        _ => worst_res = worst_res.max(d.residual_max),
                    },
                    Err(e) => errors.push(format!("{name} v={v} {}: {e}", scheme.name())),
                }
                if name != "flat_cone" && !matches!(scheme, ExtensionScheme::ContinueOde) {
                    match run(SignConvention::Literal) {
                        Ok(d) => min_literal = min_literal.min(d.residual_max),
                        Err(e) => errors.push(format!("{name} v={v} {} literal: {e}", scheme.name())),
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = errors.is_empty() && worst_res < 1e-8 && worst_a < 1e-10 && min_literal > 1e-3 && secs < 30.0;
    outcome(
        pass,
        format!(
            "max residual {worst_res:.1e}; continue-ODE max|A| {worst_a:.1e}; literal-sign min residual {min_literal:.2}; {secs:.1} s; errors: {}",
            if errors.is_empty() { "none".into() } else { errors.join(", ") }
        ),
    )
}

/// Fixed-step RK4 for the radial equation with the three built-in metrics
/// written out by hand, from `t₀ = 1e-3` where `r = vt` to within `t₀⁵`.
fn rk4_radial(name: &str, v: f64, n: usize) -> f64 {
    let smoothed = |a: f64, t: f64| {
        let f = a.hypot(t);
        (f, t / f)
    };
    let cosh = |a: f64, t: f64| (a * (t / a).cosh(), (t / a).sinh());
    // (k, f, ḟ) per factor including f₀ = t.
    let factors = |t: f64| -> Vec<(f64, f64, f64)> {
        match name {
            "flat_cone" => vec![(2.0, t, 1.0)],
            "smoothed" => {
                let (f, df) = smoothed(1.0, t);
                vec![(2.0, t, 1.0), (3.0, f, df)]
            }
            "two_factor" => {
                let (f1, d1) = smoothed(0.5, t);
                let (f2, d2) = cosh(8.0, t);
                vec![(3.0, t, 1.0), (2.0, f1, d1), (1.0, f2, d2)]
            }
            _ => unreachable!(),
        }
    };
    let accel = |t: f64, r: f64, rd: f64| {
        let at_t = factors(t);
        let at_r = factors(r);
        let mut acc = 0.0;
        for ((k, ft, dft), (_, fr, dfr)) in at_t.into_iter().zip(at_r) {
            acc += -k * dft / ft * rd + k * fr * dfr / (ft * ft);
        }
        acc
    };
    let t0 = 1e-3;
    let h = (1.0 - t0) / n as f64;
    let (mut t, mut r, mut rd) = (t0, v * t0, v);
    for _ in 0..n {
        let k1 = (rd, accel(t, r, rd));
        let k2 = (rd + 0.5 * h * k1.1, accel(t + 0.5 * h, r + 0.5 * h * k1.0, rd + 0.5 * h * k1.1));
        let k3 = (rd + 0.5 * h * k2.1, accel(t + 0.5 * h, r + 0.5 * h * k2.0, rd + 0.5 * h * k2.1));
        let k4 = (rd + h * k3.1, accel(t + h, r + h * k3.0, rd + h * k3.1));
        r += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        rd += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        t += h;
    }
    r
}

fn hygiene() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    // Order: Dormand–Prince 5(4). Step halving on the fixed-step formula,
    // tolerance halving on the adaptive driver reported alongside.
    let p = ActionParams::symmetric(3, 1).unwrap();
    let s0 = State::new(0.0, PI / 6.0, 0.8);
    let reference = *integrate(&p, s0, 4.0, 1e-13).unwrap().last();
    let err = |s: &State| (s.r - reference.r).hypot(s.rp - reference.rp);
    let fixed: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| err(integrate_fixed(&p, s0, 4.0, n).unwrap().last())).collect();
    let step_ratio = fixed.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let adaptive: Vec<f64> = [1e-6, 5e-7, 2.5e-7, 1.25e-7]
        .iter()
        .map(|&tol| err(integrate(&p, s0, 4.0, tol).unwrap().last()))
        .collect();
    let tol_ratio = (adaptive[0] / adaptive[3]).powf(1.0 / 3.0);
    pass &= step_ratio >= 4.0;
    parts.push(format!(
        "DP5(4) step-halving ratio >= {step_ratio:.1} (order {:.1}); tol-halving ratio {tol_ratio:.2}",
        step_ratio.log2()
    ));

    let mut worst_rk4 = 0.0_f64;
    for (name, v) in [("flat_cone", 0.5), ("smoothed", 0.5), ("two_factor", 0.5)] {
        let metric = builtin(name).unwrap();
        let r = ivp_solve(&metric, v, 1.0, 1e-12).unwrap().end().r;
        worst_rk4 = worst_rk4.max((r - rk4_radial(name, v, 100_000)).abs());
    }
    pass &= worst_rk4 < 1e-7;
    parts.push(format!("RK4 oracle (1e5 steps) max deviation {worst_rk4:.1e}"));

    let mut worst_launch = 0.0_f64;
    let tol = 1e-10;
    for name in BUILTIN_NAMES {
        for v in [0.5, 1.0, 2.0] {
            let cfg = IvpConfig::with_tol(tol);
            match ivp_solve_with(&builtin(name).unwrap(), v, 5.0, &cfg) {
                Ok(t) => worst_launch = worst_launch.max(t.launch_change().unwrap_or(f64::INFINITY)),
                Err(e) => {
                    pass = false;
                    parts.push(format!("{name} v={v}: {e}"));
                }
            }
        }
    }
    pass &= worst_launch < 10.0 * tol;
    parts.push(format!("delta-halving max change {worst_launch:.1e} (limit {:.0e})", 10.0 * tol));
    outcome(pass, parts.join("; "))
}

fn main() {
    let start = Instant::now();
    let sols = certified_solutions();
    let results = [
        ("1 critical-velocity table", table()),
        ("2 linear-solution oracle", linear_oracle()),
        ("3 four symmetric solutions per g", four_solutions(&sols)),
        ("4 Lyapunov monotonicity and derivative bound", lyapunov()),
        ("5 jump constants", jumps(&sols)),
        ("6 point symmetry", symmetry(&sols)),
        ("7 non-compact deformation pipeline", noncompact()),
        ("8 numerical hygiene", hygiene()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
