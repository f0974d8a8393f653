//! Exact propagation of the harmonic exosystem and its coordinate changes.
//!
//! The disturbance/reference generator is `v̇ = Sv` with eigenvalues `±iω`
//! (harmonic, Assumption 1). Because `S² = −ω²I` (Cayley–Hamilton), the flow
//! has the closed form `exp(St) = cos(ωt)·I + sin(ωt)/ω·S`, so the exosystem
//! is never time-stepped and contributes no discretization error.
//!
//! Two derived coordinate systems are used downstream:
//! - the η-form `η̇ = S_η η` with `S_η = [[0, ω], [−ω, 0]]` and output row
//!   `γ_η = (1, 0)` carrying the boundary disturbance channel, and
//! - the observer-canonical d-form `d = Tη` with companion matrix `S_c(θ)`,
//!   `θ = ω²`, where `T` is the observability matrix of `(S_η, g₁(0))`.

use crate::{Error, Mat2, Result, Row2, Vec2};

/// The fixed output row γ_η = (1, 0) of the η-form.
pub const GAMMA_ETA: Row2 = Row2::new(1.0, 0.0);

/// Validated exosystem data: `v̇ = Sv`, `y_ref = p₄v`, with ω recovered from S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExoParams {
    pub s_mat: Mat2,
    pub v0: Vec2,
    pub p4: Row2,
    /// ω = sqrt(det S) (rad/s), valid because trace S = 0 is enforced.
    pub omega: f64,
    /// θ = ω².
    pub theta: f64,
}

impl ExoParams {
    /// Validates Assumption 1: trace(S) = 0 and det(S) = ω² > 0.
    pub fn new(s_mat: Mat2, v0: Vec2, p4: Row2) -> Result<Self> {
        let norm = s_mat.norm();
        if !s_mat.iter().all(|x| x.is_finite()) || !v0.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("exosystem data must be finite".into()));
        }
        if s_mat.trace().abs() > 1e-12 * norm.max(1.0) {
            return Err(Error::Hypothesis(
                "trace(S) = 0 (eigenvalues of S must be +/- i omega)".into(),
            ));
        }
        let det = s_mat.determinant();
        if det <= 0.0 {
            return Err(Error::Hypothesis(
                "det(S) = omega^2 > 0 (eigenvalues of S must be +/- i omega)".into(),
            ));
        }
        Ok(Self { s_mat, v0, p4, omega: det.sqrt(), theta: det })
    }

    /// exp(S·t) by the closed form; exact up to rounding.
    pub fn flow(&self, t: f64) -> Mat2 {
        let (s, c) = (self.omega * t).sin_cos();
        Mat2::identity() * c + self.s_mat * (s / self.omega)
    }

    /// Exosystem state at absolute time t.
    pub fn v_at(&self, t: f64) -> Vec2 {
        self.flow(t) * self.v0
    }
}

/// One exact step of `v̇ = Sv`.
pub fn step_exo(params: &ExoParams, v: Vec2, dt: f64) -> Vec2 {
    params.flow(dt) * v
}

/// Reference signal `y_ref = p₄v`.
pub fn reference_signal(params: &ExoParams, v: Vec2) -> f64 {
    (params.p4 * v)[0]
}

/// η-form of the boundary-channel disturbance: `γ₁v(t) = γ_η η(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaState {
    pub eta: Vec2,
    pub s_eta: Mat2,
}

/// `S_η = [[0, ω], [−ω, 0]]`.
pub fn s_eta(omega: f64) -> Mat2 {
    Mat2::new(0.0, omega, -omega, 0.0)
}

/// `exp(S_η t)` — a rotation.
pub fn eta_flow(omega: f64, t: f64) -> Mat2 {
    let (s, c) = (omega * t).sin_cos();
    Mat2::new(c, s, -s, c)
}

/// Initial η matching `γ₁v(t) = A cos ωt + B sin ωt`: value and derivative of
/// `γ₁v` at t = 0 give `A = γ₁v₀` and `B = γ₁Sv₀/ω`.
pub fn eta_initial(gamma1: Row2, params: &ExoParams) -> EtaState {
    let a = (gamma1 * params.v0)[0];
    let b = (gamma1 * params.s_mat * params.v0)[0] / params.omega;
    EtaState { eta: Vec2::new(a, b), s_eta: s_eta(params.omega) }
}

/// Exact propagation of η by `exp(S_η dt)`.
pub fn propagate_eta(omega: f64, eta: Vec2, dt: f64) -> Vec2 {
    eta_flow(omega, dt) * eta
}

/// Companion matrix `S_c(θ) = [[0, 1], [−θ, 0]]`.
pub fn s_c(theta: f64) -> Mat2 {
    Mat2::new(0.0, 1.0, -theta, 0.0)
}

/// Observer-canonical form: `S_c(θ) = T S_η T⁻¹`, `γ_η = g₁(0)T⁻¹`, `d = Tη`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalForm {
    pub s_c: Mat2,
    pub t_mat: Mat2,
    pub t_inv: Mat2,
}

/// Builds T as the observability matrix stacked from `g₁(0)` and `g₁(0)S_η`.
///
/// This specific solution satisfies both defining identities because
/// `S_η² = −θI` and the canonical pair's own observability matrix is I.
pub fn canonical_form(s_eta: Mat2, g1_0: Row2) -> Result<CanonicalForm> {
    let r0 = g1_0;
    let r1 = g1_0 * s_eta;
    let t_mat = Mat2::new(r0[0], r0[1], r1[0], r1[1]);
    let det = t_mat.determinant();
    if det.abs() <= 1e-12 * t_mat.norm_squared().max(1e-300) {
        return Err(Error::SingularT);
    }
    let theta = s_eta.determinant();
    let t_inv = t_mat.try_inverse().ok_or(Error::SingularT)?;
    Ok(CanonicalForm { s_c: s_c(theta), t_mat, t_inv })
}

/// Hautus observability of `(S_η, g₁(0))`: rank of the observability matrix,
/// reported with its 2-norm condition number.
pub fn hautus_observable(omega: f64, g1_0: Row2) -> (bool, f64) {
    let r1 = g1_0 * s_eta(omega);
    let t_mat = Mat2::new(g1_0[0], g1_0[1], r1[0], r1[1]);
    let sv = t_mat.singular_values();
    let (smax, smin) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    let observable = smin > 1e-12 * smax.max(1e-300);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    (observable, cond)
}

/// Coordinate change `d = Tη`.
pub fn d_from_eta(t_mat: &Mat2, eta: Vec2) -> Vec2 {
    t_mat * eta
}
