//! Property-based invariants (proptest): algebraic identities that must hold
//! for arbitrary admissible inputs, not just the bundled parameter set.

use proptest::prelude::*;
use wavereg::exosystem::eta_flow;
use wavereg::kernels::{
    backstep_forward, backstep_inverse, companion_exp, cos_like, sin_like,
};
use wavereg::metrics::fit_decay;
use wavereg::pde::{weighted_integral, Grid1D, GridField, HistoryBuffer};
use wavereg::Mat2;

proptest! {
    #[test]
    fn pythagorean_identity_for_all_theta(theta in -25.0..25.0f64, x in 0.0..3.0f64) {
        let c = cos_like(theta, x);
        let s = sin_like(theta, x);
        let scale = 1.0 + c * c + theta.abs() * s * s;
        prop_assert!(((c * c + theta * s * s) - 1.0).abs() < 1e-11 * scale);
    }

    #[test]
    fn companion_exp_has_unit_determinant(theta in -25.0..25.0f64, t in -3.0..3.0f64) {
        let m = companion_exp(theta, t);
        let scale = m.norm_squared().max(1.0);
        prop_assert!((m.determinant() - 1.0).abs() < 1e-11 * scale);
    }

    #[test]
    fn companion_exp_inverse_is_time_reversal(theta in -9.0..9.0f64, t in 0.0..3.0f64) {
        let fwd = companion_exp(theta, t);
        let bwd = companion_exp(theta, -t);
        let prod = fwd * bwd;
        // Rounding in the product scales with the factor norms (hyperbolic
        // branch entries grow like cosh(√|θ|·t)), not with the identity.
        let scale = (fwd.norm() * bwd.norm()).max(1.0);
        prop_assert!((prod - Mat2::identity()).norm() < 1e-13 * scale);
    }

    #[test]
    fn eta_flow_preserves_length(omega in 0.01..20.0f64, t in -50.0..50.0f64) {
        let r = eta_flow(omega, t);
        prop_assert!((r * r.transpose() - Mat2::identity()).norm() < 1e-12);
    }

    #[test]
    fn weighted_integral_is_linear(
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
        k1 in 1.0..9.0f64,
        k2 in 1.0..9.0f64,
    ) {
        let grid = Grid1D::new(48).unwrap();
        let f = GridField::from_fn(grid, |x| (k1 * x).sin());
        let g = GridField::from_fn(grid, |x| (k2 * x).cos());
        let combo = GridField {
            grid,
            values: f.values.iter().zip(&g.values).map(|(p, q)| a * p + b * q).collect(),
        };
        let w = |x: f64| 1.0 + x;
        let lhs = weighted_integral(&combo, w);
        let rhs = a * weighted_integral(&f, w) + b * weighted_integral(&g, w);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn history_reproduces_piecewise_linear_signals_exactly(
        slope in -10.0..10.0f64,
        intercept in -10.0..10.0f64,
        query in 0.0..1.0f64,
    ) {
        // Linear interpolation of samples of a linear function is exact.
        let mut h = HistoryBuffer::new(2.0);
        for k in 0..=20 {
            let t = k as f64 * 0.05;
            h.push(t, slope * t + intercept).unwrap();
        }
        let got = h.sample(query).unwrap();
        let want = slope * query + intercept;
        prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn backstep_roundtrip_for_random_gains(
        c0 in 1.0..300.0f64,
        q in 0.05..4.0f64,
        amp in -3.0..3.0f64,
        mode in 1usize..4,
    ) {
        let grid = Grid1D::new(200).unwrap();
        let f = GridField::from_fn(grid, |x| {
            amp * (mode as f64 * std::f64::consts::PI * x).cos() + 0.5 * x
        });
        let (d, v) = backstep_forward(&f, &f, c0, q);
        let (back, _) = backstep_inverse(&d, &v, c0, q);
        // Quadrature error in the roundtrip scales with the magnitude of the
        // intermediate transformed field, which grows like (c0+q)·e^q.
        let scale = d.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in f.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() < 20.0 * grid.h * grid.h * scale,
                "roundtrip error {} at c0 = {c0}, q = {q}", (a - b).abs());
        }
    }

    #[test]
    fn fit_decay_recovers_exact_exponentials(
        m in 0.1..10.0f64,
        mu in -1.0..1.0f64,
    ) {
        let series: Vec<(f64, f64)> =
            (0..=500).map(|k| (k as f64 * 0.02, m * (-mu * k as f64 * 0.02).exp())).collect();
        let fit = fit_decay(&series, (0.0, 10.0)).unwrap();
        prop_assert!((fit.mu - mu).abs() < 1e-9, "mu {} vs {}", fit.mu, mu);
        prop_assert!((fit.m - m).abs() < 1e-6 * m);
    }

    #[test]
    fn scenario_text_round_trip_for_random_constants(
        q in 0.1..5.0f64,
        c1 in 0.1..5.0f64,
        c2 in 0.01..0.99f64,
        k1 in 0.1..50.0f64,
        seed in 0u64..1000,
    ) {
        let mut s = wavereg::scenario::sec4_tau01();
        s.q = q;
        s.c1 = c1;
        s.c2 = c2;
        s.k1 = k1;
        s.seed = seed;
        let dir = std::env::temp_dir().join(format!("wavereg-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("rt-{seed}-{}.scn", s.hash()));
        wavereg::scenario::save_scenario(&s, &path).unwrap();
        let back = wavereg::scenario::load_scenario(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(s, back);
    }
}
