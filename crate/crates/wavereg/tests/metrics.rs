//! Decay-rate fitting on synthetic signals with known envelopes.

use approx::assert_abs_diff_eq;
use wavereg::metrics::fit_decay;
use wavereg::Error;

fn series(f: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> Vec<(f64, f64)> {
    let n = (t_end / dt).round() as usize;
    (0..=n).map(|k| (k as f64 * dt, f(k as f64 * dt))).collect()
}

#[test]
fn recovers_the_rate_of_a_damped_oscillation() {
    let s = series(|t| (-0.5 * t).exp() * (10.0 * t).cos(), 20.0, 0.001);
    let fit = fit_decay(&s, (0.0, 20.0)).unwrap();
    assert_abs_diff_eq!(fit.mu, 0.5, epsilon = 0.02);
    assert!(fit.n_points >= 5);
}

#[test]
fn constant_signal_fits_zero_rate() {
    let s = series(|_| 2.0, 10.0, 0.01);
    let fit = fit_decay(&s, (0.0, 10.0)).unwrap();
    assert_abs_diff_eq!(fit.mu, 0.0, epsilon = 0.01);
    assert_abs_diff_eq!(fit.m, 2.0, epsilon = 0.01);
}

#[test]
fn growing_signal_reports_a_negative_rate() {
    let s = series(|t| (0.3 * t).exp(), 10.0, 0.01);
    let fit = fit_decay(&s, (0.0, 10.0)).unwrap();
    assert_abs_diff_eq!(fit.mu, -0.3, epsilon = 0.02);
}

#[test]
fn monotone_decay_uses_the_fallback_path() {
    // No oscillation, so fewer than 5 peaks; the fit must fall back to all
    // samples and still nail the rate.
    let s = series(|t| 3.0 * (-0.7 * t).exp(), 8.0, 0.01);
    let fit = fit_decay(&s, (0.0, 8.0)).unwrap();
    assert_abs_diff_eq!(fit.mu, 0.7, epsilon = 0.01);
    assert_abs_diff_eq!(fit.m, 3.0, epsilon = 0.05);
    assert!(fit.residual < 1e-6);
}

#[test]
fn too_few_samples_is_an_error() {
    let s = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)];
    match fit_decay(&s, (0.0, 2.0)) {
        Err(Error::InsufficientPeaks { found, need }) => {
            assert!(found < need);
            assert_eq!(need, 5);
        }
        other => panic!("expected InsufficientPeaks, got {other:?}"),
    }
}

#[test]
fn window_restricts_the_fit() {
    // Rate changes at t = 5; fitting the tail must see only the late rate.
    let s = series(
        |t| if t < 5.0 { (-2.0 * t).exp() } else { (-10.0_f64).exp() * (-0.1 * (t - 5.0)).exp() },
        20.0,
        0.01,
    );
    let fit = fit_decay(&s, (6.0, 20.0)).unwrap();
    assert_abs_diff_eq!(fit.mu, 0.1, epsilon = 0.01);
}

#[test]
fn zeros_are_skipped_not_logged() {
    // Signal touching zero exactly must not poison the log fit.
    let s = series(|t| (-0.4 * t).exp() * (5.0 * t).sin(), 15.0, 0.005);
    let fit = fit_decay(&s, (0.0, 15.0)).unwrap();
    assert_abs_diff_eq!(fit.mu, 0.4, epsilon = 0.03);
}
