//! Delay compensation and actuation: the disturbance predictor, the predicted
//! boundary disturbance Dᵗ, the wave-state predictor over `[t−τ, t]`, the
//! final feedback law, and the full-information feedforward law (oracle mode).

use crate::exosystem::GAMMA_ETA;
use crate::kernels::{companion_exp, make_theta_kernels};
use crate::pde::{
    ddx_boundary, wave_step, weighted_integral, BoundaryCondition, End, GridField, HistoryBuffer,
    WaveState,
};
use crate::{Error, Result, Vec2};

/// Feedback-law gains with their Lemma 2 / Theorem 3 positivity hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLawParams {
    pub c0: f64,
    pub c1: f64,
    pub q: f64,
}

impl ControlLawParams {
    pub fn new(c0: f64, c1: f64, q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::Hypothesis("q > 0".into()));
        }
        if !(c0 > 0.0) {
            return Err(Error::Hypothesis("c0 > 0".into()));
        }
        if !(c1 > 0.0) {
            return Err(Error::Hypothesis("c1 > 0".into()));
        }
        Ok(Self { c0, c1, q })
    }
}

/// `d̂ᵗ(t−τ+elapsed) = exp(S_c(θ̂(t−τ))·elapsed)·d̂(t−τ)`.
pub fn predict_d(d0: Vec2, theta_frozen: f64, elapsed: f64) -> Vec2 {
    companion_exp(theta_frozen, elapsed) * d0
}

/// Predicted boundary disturbance `Dᵗ(s) = −(f₁(1,θ̂) + f₂(1,θ̂))·d̂ᵗ(s)`.
pub fn predicted_big_d(theta_frozen: f64, c2: f64, d_pred: Vec2) -> f64 {
    let tk = make_theta_kernels(theta_frozen, c2);
    -((tk.f1(1.0) + tk.f2(1.0)) * d_pred)[0]
}

/// The state-dependent part of the feedback law evaluated on a wave state:
/// `−(1/(c₀+q))[ε_x(1) + c₁ε_t(1)] − ∫₀¹ e^{q(1−h)}(qε + c₁ε_t)dh`.
pub fn control_terms(state: &WaveState, params: &ControlLawParams) -> f64 {
    let ControlLawParams { c0, c1, q } = *params;
    let grid = state.disp.grid;
    let combo = GridField {
        grid,
        values: state
            .disp
            .values
            .iter()
            .zip(&state.vel.values)
            .map(|(&d, &v)| q * d + c1 * v)
            .collect(),
    };
    -(ddx_boundary(&state.disp, End::Right) + c1 * state.vel.last()) / (c0 + q)
        - weighted_integral(&combo, |h| (q * (1.0 - h)).exp())
}

/// Result of one predictor window: the reconstructed error state advanced to
/// the current time plus the control value that is consistent with its own
/// boundary trace.
#[derive(Debug, Clone)]
pub struct PredictorRun {
    /// θ̂(t−τ), frozen for the whole window.
    pub frozen_theta: f64,
    /// d̂(t−τ), the window's initial disturbance estimate.
    pub d0: Vec2,
    /// ε̂ᵗ advanced to s = t.
    pub eps_pred: WaveState,
    /// Dᵗ(t).
    pub big_d_now: f64,
    /// The control value found by the implicit final sub-step.
    pub u_new: f64,
    /// Current absolute time t and delay τ.
    pub t: f64,
    pub tau: f64,
}

/// Runs the wave predictor over `[t−τ, t]`.
///
/// `init` is the reconstructed `(ε̂, ε̂ₛ)` at `t−τ` (its `t` field must equal
/// `t−τ`); boundary data along the window is `u(s) − Dᵗ(s)` with `u` sampled
/// from the history (`n_sub − 1` known sub-steps). The final sub-step's
/// boundary value contains the still-unknown `u(t)`; since the feedback law is
/// affine in the imposed boundary value, two trial steps give its intercept
/// and slope and the fixed point `u = F(u)` is solved exactly.
#[allow(clippy::too_many_arguments)]
pub fn run_predictor(
    init: WaveState,
    tau: f64,
    n_sub: usize,
    u_history: &HistoryBuffer,
    d0: Vec2,
    theta_frozen: f64,
    c2: f64,
    params: &ControlLawParams,
    dt: f64,
) -> Result<PredictorRun> {
    let t_start = init.t;
    let t = t_start + tau;
    let left = BoundaryCondition::RobinLeft { a: -params.q, b: 0.0 };
    let zero = GridField::zeros(init.disp.grid);
    let mut state = init;

    if n_sub == 0 {
        // Degenerate τ = 0 window: state passes through unchanged.
        let big_d_now = predicted_big_d(theta_frozen, c2, d0);
        let u_new = control_terms(&state, params) + big_d_now;
        return Ok(PredictorRun {
            frozen_theta: theta_frozen,
            d0,
            eps_pred: state,
            big_d_now,
            u_new,
            t,
            tau,
        });
    }

    for j in 0..n_sub - 1 {
        let elapsed = (j + 1) as f64 * dt;
        let big_d = predicted_big_d(theta_frozen, c2, predict_d(d0, theta_frozen, elapsed));
        let u = u_history.sample_clamped(t_start + elapsed)?;
        state = wave_step(
            &state,
            &left,
            &BoundaryCondition::DirichletRight { value: u - big_d },
            &zero,
            dt,
        )?;
    }

    let big_d_now = predicted_big_d(theta_frozen, c2, predict_d(d0, theta_frozen, tau));
    // F(g) = control terms of the state stepped with boundary value g, plus D.
    let eval = |g: f64| -> Result<(f64, WaveState)> {
        let stepped = wave_step(
            &state,
            &left,
            &BoundaryCondition::DirichletRight { value: g },
            &zero,
            dt,
        )?;
        Ok((control_terms(&stepped, params) + big_d_now, stepped))
    };
    let (f0, _) = eval(0.0)?;
    let (f1, _) = eval(1.0)?;
    let slope = f1 - f0;
    let u_new = (f0 - slope * big_d_now) / (1.0 - slope);
    let (_, final_state) = eval(u_new - big_d_now)?;

    Ok(PredictorRun {
        frozen_theta: theta_frozen,
        d0,
        eps_pred: final_state,
        big_d_now,
        u_new,
        t,
        tau,
    })
}

/// The final feedback controller evaluated on a completed predictor run;
/// returns 0 for `t ≤ τ` (the control is off until the first measurement
/// arrives).
pub fn control_eq69(pred: &PredictorRun, params: &ControlLawParams, d_now: f64) -> f64 {
    if pred.t <= pred.tau {
        return 0.0;
    }
    control_terms(&pred.eps_pred, params) + d_now
}

/// Full-information feedforward law (oracle mode): the same formula evaluated
/// on the true `(ε, ε_t)` with the true boundary disturbance `γ_ηη(t)`.
pub fn control_ff(state: &WaveState, eta_now: Vec2, params: &ControlLawParams) -> f64 {
    control_terms(state, params) + (GAMMA_ETA * eta_now)[0]
}
