//! Time-indexed buffer of a scalar signal with linear-interpolated lookup,
//! covering the delay window `[t - τ, t]` plus an interpolation margin.

use crate::{Error, Result};
use std::collections::VecDeque;

/// Ring of `(t, value)` samples with strictly increasing timestamps.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    samples: VecDeque<(f64, f64)>,
    retention: f64,
}

impl HistoryBuffer {
    /// `retention` is how much past (relative to the newest sample) is kept;
    /// callers use `τ + 4Δt` so the predictor window plus margin survives.
    pub fn new(retention: f64) -> Self {
        assert!(retention >= 0.0 && retention.is_finite());
        Self { samples: VecDeque::new(), retention }
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if !t.is_finite() || !value.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if let Some(&(last, _)) = self.samples.back() {
            if t <= last {
                return Err(Error::InvalidParameter(format!(
                    "history timestamps must be strictly increasing: {t} after {last}"
                )));
            }
        }
        self.samples.push_back((t, value));
        // Keep one sample at or before the retention edge so interpolation
        // still brackets queries right at the window boundary.
        let edge = t - self.retention;
        while self.samples.len() >= 2 && self.samples[1].0 <= edge {
            self.samples.pop_front();
        }
        Ok(())
    }

    pub fn latest_time(&self) -> Option<f64> {
        self.samples.back().map(|&(t, _)| t)
    }

    pub fn earliest_time(&self) -> Option<f64> {
        self.samples.front().map(|&(t, _)| t)
    }

    /// Linear interpolation between the bracketing samples.
    pub fn sample(&self, t_query: f64) -> Result<f64> {
        let (lo, hi) = match (self.samples.front(), self.samples.back()) {
            (Some(&(lo, _)), Some(&(hi, _))) => (lo, hi),
            _ => return Err(Error::HistorySpan { t: t_query, lo: f64::NAN, hi: f64::NAN }),
        };
        let slack = 1e-9 * (1.0 + hi.abs());
        if t_query < lo - slack || t_query > hi + slack {
            return Err(Error::HistorySpan { t: t_query, lo, hi });
        }
        let t = t_query.clamp(lo, hi);
        // Binary search for the first sample with timestamp >= t.
        let idx = self.samples.partition_point(|&(ts, _)| ts < t);
        if idx == 0 {
            return Ok(self.samples[0].1);
        }
        let (t1, v1) = self.samples[idx];
        let (t0, v0) = self.samples[idx - 1];
        if t1 == t {
            return Ok(v1);
        }
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// Like [`Self::sample`], but queries past the newest sample return it
    /// unchanged (zero-order hold); used for the predictor's final sub-step.
    pub fn sample_clamped(&self, t_query: f64) -> Result<f64> {
        match self.latest_time() {
            Some(hi) if t_query > hi => Ok(self.samples.back().unwrap().1),
            _ => self.sample(t_query),
        }
    }
}
