use std::sync::Arc;

use proptest::prelude::*;

use harmap::noncompact::{
    builtin, compute_deformation, deformation_integrand, extend_monotone, ivp_solve, ivp_solve_with, DeformConfig,
    ExtensionScheme, IvpConfig, Profile, RadialProfile, SignConvention, SplitPolicy, Table, WarpedMetric,
    BUILTIN_NAMES,
};

fn scheme(kind: usize, slope: Option<f64>) -> ExtensionScheme {
    match kind {
        0 => ExtensionScheme::CubicBlend { slope, window: None },
        _ => ExtensionScheme::Ramp { slope, window: None },
    }
}

/// Fixed-step RK4 on `[1e-3, 1]` with the built-in warping functions written
/// out by hand.
fn rk4_radial(name: &str, v: f64, n: usize) -> f64 {
    let factors = |t: f64| -> Vec<(f64, f64, f64)> {
        let smoothed = |a: f64| (a.hypot(t), t / a.hypot(t));
        match name {
            "flat_cone" => vec![(2.0, t, 1.0)],
            "smoothed" => {
                let (f, d) = smoothed(1.0);
                vec![(2.0, t, 1.0), (3.0, f, d)]
            }
            _ => {
                let (f, d) = smoothed(0.5);
                vec![(3.0, t, 1.0), (2.0, f, d), (1.0, 8.0 * (t / 8.0).cosh(), (t / 8.0).sinh())]
            }
        }
    };
    let accel = |t: f64, r: f64, rd: f64| -> f64 {
        factors(t)
            .into_iter()
            .zip(factors(r))
            .map(|((k, ft, dft), (_, fr, dfr))| -k * dft / ft * rd + k * fr * dfr / (ft * ft))
            .sum()
    };
    let t0 = 1e-3;
    let h = (1.0 - t0) / n as f64;
    let (mut t, mut r, mut rd) = (t0, v * t0, v);
    for _ in 0..n {
        let (k1r, k1v) = (rd, accel(t, r, rd));
        let (k2r, k2v) = (rd + 0.5 * h * k1v, accel(t + 0.5 * h, r + 0.5 * h * k1r, rd + 0.5 * h * k1v));
        let (k3r, k3v) = (rd + 0.5 * h * k2v, accel(t + 0.5 * h, r + 0.5 * h * k2r, rd + 0.5 * h * k2v));
        let (k4r, k4v) = (rd + h * k3v, accel(t + h, r + h * k3r, rd + h * k3v));
        r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        rd += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += h;
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deformed_metric_makes_r_harmonic(
        mi in 0usize..3,
        kind in 0usize..2,
        v in 0.2..3.0f64,
        epsilon in 0.2..1.0f64,
        slope_factor in prop::option::of(0.3..4.0f64),
    ) {
        let metric = builtin(BUILTIN_NAMES[mi]).unwrap();
        let base = ivp_solve(&metric, v, epsilon, 1e-10).unwrap();
        let slope = slope_factor.map(|f| f * base.end().rdot);
        let ext = extend_monotone(&base, scheme(kind, slope), 8.0).unwrap();
        let d = compute_deformation(&metric, &ext, ext.epsilon(), 8.0, &SplitPolicy::Uniform, &DeformConfig::default()).unwrap();
        prop_assert!(d.residual_max < 1e-8, "residual {:e}", d.residual_max);
    }

    #[test]
    fn integrand_vanishes_at_the_join(
        mi in 0usize..3,
        kind in 0usize..2,
        v in 0.2..3.0f64,
    ) {
        let metric = builtin(BUILTIN_NAMES[mi]).unwrap();
        let base = ivp_solve(&metric, v, 0.5, 1e-10).unwrap();
        let ext = extend_monotone(&base, scheme(kind, None), 10.0).unwrap();
        let eps = ext.epsilon();
        let at_join = deformation_integrand(&metric, &ext, eps * (1.0 + 1e-12), SignConvention::Corrected).unwrap();
        prop_assert!(at_join.abs() < 1e-9, "A' = {at_join:e} at ε");
    }

    #[test]
    fn deviating_extensions_are_nontrivial(
        mi in 0usize..3,
        kind in 0usize..2,
        v in 0.2..3.0f64,
        slope_factor in 1.5..4.0f64,
    ) {
        let metric = builtin(BUILTIN_NAMES[mi]).unwrap();
        let base = ivp_solve(&metric, v, 0.5, 1e-10).unwrap();
        let ext = extend_monotone(&base, scheme(kind, Some(slope_factor * base.end().rdot)), 10.0).unwrap();
        let mut off_identity = 0.0_f64;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let t = 10.0 * f64::from(i) / 2000.0;
            let j = ext.jet(t).unwrap();
            off_identity = off_identity.max((j.r - t).abs());
            prop_assert!(j.r > prev, "r not increasing at t = {t}");
            prev = j.r;
        }
        prop_assert!(off_identity > 1e-3);
    }

    #[test]
    fn split_policy_does_not_change_the_residual(
        mi in 1usize..3,
        v in 0.3..2.0f64,
        raw in prop::collection::vec(0.05..1.0f64, 3),
        single in 0usize..3,
    ) {
        let metric = builtin(BUILTIN_NAMES[mi]).unwrap();
        let n = metric.multiplicities().len();
        let base = ivp_solve(&metric, v, 0.5, 1e-10).unwrap();
        let ext = extend_monotone(&base, scheme(0, None), 6.0).unwrap();
        let sum: f64 = raw[..n].iter().sum();
        let weights = raw[..n].iter().map(|w| w / sum).collect::<Vec<_>>();
        let splits = [SplitPolicy::Uniform, SplitPolicy::SingleComponent(single % n), SplitPolicy::Weights(weights)];
        let cfg = DeformConfig::default();
        let runs: Vec<_> = splits
            .iter()
            .map(|s| compute_deformation(&metric, &ext, ext.epsilon(), 6.0, s, &cfg).unwrap())
            .collect();
        for d in &runs[1..] {
            prop_assert!((d.residual_max - runs[0].residual_max).abs() <= 1e-12);
            for (a, b) in d.a.iter().zip(&runs[0].a) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn halving_the_launch_point_is_harmless(
        mi in 0usize..3,
        v in 0.2..3.0f64,
        tol in prop::sample::select(vec![1e-8, 1e-10, 1e-12]),
    ) {
        let metric = builtin(BUILTIN_NAMES[mi]).unwrap();
        let t = ivp_solve_with(&metric, v, 3.0, &IvpConfig::with_tol(tol)).unwrap();
        let change = t.launch_change().unwrap();
        prop_assert!(change < 10.0 * tol, "r(t_end) moves by {change:e}");
    }

    #[test]
    fn tabulated_profiles_are_differentiable(
        a in 0.3..3.0f64,
        cosh in any::<bool>(),
        t in 0.01..4.9f64,
    ) {
        let exact = if cosh { Profile::CoshCollar { a } } else { Profile::SmoothedCone { a } };
        let tab = Profile::Tabulated(Arc::new(Table::sample(&exact, 5.0, 2000).unwrap()));
        let h = 1e-5;
        let fd = (tab.jet(t + h).unwrap().f - tab.jet(t - h).unwrap().f) / (2.0 * h);
        let j = tab.jet(t).unwrap();
        // cosh collars reach ~1e6; round-off in the difference scales with f.
        let scale = 1.0 + j.f.abs();
        prop_assert!((fd - j.df).abs() < 1e-6 * scale, "fd {fd} vs {}", j.df);
        prop_assert!((j.f - exact.jet(t).unwrap().f).abs() < 1e-8 * scale);
    }
}

#[test]
fn ivp_matches_fixed_step_rk4() {
    for name in BUILTIN_NAMES {
        for v in [0.5, 1.0, 2.0] {
            let metric = builtin(name).unwrap();
            let r = ivp_solve(&metric, v, 1.0, 1e-12).unwrap().end().r;
            let oracle = rk4_radial(name, v, 100_000);
            assert!((r - oracle).abs() < 1e-7, "{name} v={v}: {r} vs {oracle}");
        }
    }
}

#[test]
fn literal_sign_fails_on_curved_metrics() {
    for name in ["smoothed", "two_factor"] {
        let metric = builtin(name).unwrap();
        let base = ivp_solve(&metric, 1.0, 0.5, 1e-10).unwrap();
        let ext = extend_monotone(&base, scheme(1, None), 10.0).unwrap();
        let cfg = DeformConfig {
            sign: SignConvention::Literal,
            ..DeformConfig::default()
        };
        let d = compute_deformation(&metric, &ext, ext.epsilon(), 10.0, &SplitPolicy::Uniform, &cfg).unwrap();
        assert!(d.residual_max > 1e-3, "{name}: {:e}", d.residual_max);
    }
}

#[test]
fn config_file_metric_matches_builtin() {
    let text = "k0 = 3\n[component]\nk = 2\na = 0.5\nprofile = smoothed_cone\n[component]\nk = 1\na = 8\nprofile = cosh_collar\n";
    let parsed = WarpedMetric::parse(text, None).unwrap();
    let reference = builtin("two_factor").unwrap();
    for t in [0.1, 1.0, 4.0] {
        assert_eq!(parsed.drift(t).unwrap(), reference.drift(t).unwrap());
        assert_eq!(parsed.force(t, 0.7 * t).unwrap(), reference.force(t, 0.7 * t).unwrap());
    }
}
