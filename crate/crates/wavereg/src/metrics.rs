//! Empirical decay-rate fitting — a measurable stand-in for the theoretical
//! `M e^{-μt}` bounds, whose constants are never tabulated.

use crate::{Error, Result};

/// Result of fitting `|series| ≈ M e^{−mu·t}` on envelope peaks.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub m: f64,
    /// Decay rate, positive for decaying signals (sign reported, not clamped).
    pub mu: f64,
    pub fit_window: (f64, f64),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// Number of points the fit used.
    pub n_points: usize,
}

/// Least squares of `log|peak|` against time over `window`.
///
/// Envelope peaks are non-strict local maxima of `|value|`; for monotone
/// signals (no oscillation) the fit falls back to all samples in the window.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    let in_win: Vec<(f64, f64)> =
        series.iter().copied().filter(|&(t, _)| t >= t0 && t <= t1).collect();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..in_win.len().saturating_sub(1) {
        let a = in_win[i - 1].1.abs();
        let b = in_win[i].1.abs();
        let c = in_win[i + 1].1.abs();
        if b >= a && b >= c && b > 0.0 {
            peaks.push((in_win[i].0, b));
        }
    }
    if peaks.len() < 5 {
        peaks = in_win.iter().map(|&(t, v)| (t, v.abs())).filter(|&(_, v)| v > 0.0).collect();
    }
    if peaks.len() < 5 {
        return Err(Error::InsufficientPeaks { found: peaks.len(), need: 5 });
    }
    let n = peaks.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &peaks {
        let y = v.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-300 {
        return Err(Error::InvalidParameter("degenerate time axis in fit window".into()));
    }
    let slope = (n * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / n;
    let mut ss = 0.0;
    for &(t, v) in &peaks {
        let r = v.ln() - (intercept + slope * t);
        ss += r * r;
    }
    Ok(DecayFit {
        m: intercept.exp(),
        mu: -slope,
        fit_window: window,
        residual: (ss / n).sqrt(),
        n_points: peaks.len(),
    })
}
