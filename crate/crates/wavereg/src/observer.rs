//! Measurement-side stack running in shifted time `s = t − τ`: transport
//! compensator Y₁, state observer (ẑ, Ŷ₂), adaptive frequency observer
//! (ξ, χ̂₁, φ̂, θ̂), d̂ reconstruction, and ε̂/ε̂ₛ reconstruction.

use crate::exosystem::s_c;
use crate::kernels::make_theta_kernels;
use crate::pde::{transport_step, wave_step, BoundaryCondition, Grid1D, GridField, WaveState};
use crate::{Error, Result, Vec2};

/// Dynamic compensator: transport PDE `Y₁ₛ = −Y₁ₓ` with inflow `−c₂·e(s+τ)`.
#[derive(Debug, Clone)]
pub struct CompensatorState {
    pub y1: GridField,
}

impl CompensatorState {
    pub fn new(y1: GridField) -> Self {
        Self { y1 }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self { y1: GridField::zeros(grid) }
    }
}

/// One compensator step fed with the live tracking-error sample.
pub fn compensator_step(
    c: &CompensatorState,
    e_now: f64,
    c2: f64,
    dt: f64,
) -> Result<CompensatorState> {
    if !(c2 > 0.0 && c2 < 1.0) {
        return Err(Error::Hypothesis("0 < c2 < 1".into()));
    }
    Ok(CompensatorState { y1: transport_step(&c.y1, -c2 * e_now, dt)? })
}

/// State observer for the decoupled pair: wave field ẑ and transport field Ŷ₂.
#[derive(Debug, Clone)]
pub struct StateObserver {
    pub zhat: WaveState,
    pub y2hat: GridField,
}

impl StateObserver {
    pub fn new(zhat: WaveState, y2hat: GridField) -> Self {
        Self { zhat, y2hat }
    }
}

/// One observer step: ẑ advances with flux condition `ẑₓ(0) = −q·e(s+τ)` and
/// Dirichlet `ẑ(1) = u − (Ŷ₂(1) − Y₁(1))`, then Ŷ₂ advances with inflow
/// `−c₂·ẑ(0)` using the freshly stepped ẑ.
pub fn observer_step(
    o: &StateObserver,
    e_now: f64,
    u_now: f64,
    y1_right: f64,
    q: f64,
    c2: f64,
    dt: f64,
) -> Result<StateObserver> {
    let grid = o.zhat.disp.grid;
    let g = u_now - (o.y2hat.last() - y1_right);
    let zhat = wave_step(
        &o.zhat,
        &BoundaryCondition::RobinLeft { a: 0.0, b: -q * e_now },
        &BoundaryCondition::DirichletRight { value: g },
        &GridField::zeros(grid),
        dt,
    )?;
    let y2hat = transport_step(&o.y2hat, -c2 * zhat.disp.first(), dt)?;
    Ok(StateObserver { zhat, y2hat })
}

/// Decoupled measurement `y_d(s) = e(s+τ) − ẑ(0,s)`.
pub fn yd_measure(e_now: f64, zhat0: f64) -> f64 {
    e_now - zhat0
}

/// Adaptive-observer gains with their Lemma-6 constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveGains {
    pub iota: f64,
    pub k0: f64,
    pub k1: f64,
}

impl AdaptiveGains {
    pub fn new(iota: f64, k0: f64, k1: f64) -> Result<Self> {
        if !(iota > 0.0) {
            return Err(Error::Hypothesis("iota > 0".into()));
        }
        if !(k0 > 1.0 / (4.0 * iota)) {
            return Err(Error::Hypothesis("k0 > 1/(4 iota)".into()));
        }
        if !(k1 > 0.0) {
            return Err(Error::Hypothesis("k1 > 0".into()));
        }
        Ok(Self { iota, k0, k1 })
    }
}

/// Adaptive frequency observer state (all scalars).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    pub xi: f64,
    pub chi1_hat: f64,
    pub phi_hat: f64,
    pub theta_hat: f64,
    pub gains: AdaptiveGains,
}

impl AdaptiveState {
    pub fn zero(gains: AdaptiveGains) -> Self {
        Self { xi: 0.0, chi1_hat: 0.0, phi_hat: 0.0, theta_hat: 0.0, gains }
    }
}

fn adaptive_rhs(y: [f64; 4], yd: f64, g: AdaptiveGains) -> [f64; 4] {
    let [xi, chi, phi, th] = y;
    [
        -g.iota * xi - yd,
        phi + g.iota * yd + th * xi + g.k0 * (yd - chi),
        -g.iota * phi - g.iota * g.iota * yd,
        g.k1 * xi * (yd - chi),
    ]
}

/// One classical RK4 step of the 4-ODE adaptive observer; `yd` is held
/// constant over the step (zero-order hold).
pub fn adaptive_step(a: &AdaptiveState, yd: f64, dt: f64) -> Result<AdaptiveState> {
    let g = a.gains;
    let y0 = [a.xi, a.chi1_hat, a.phi_hat, a.theta_hat];
    let add = |y: [f64; 4], k: [f64; 4], s: f64| {
        [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]]
    };
    let k1 = adaptive_rhs(y0, yd, g);
    let k2 = adaptive_rhs(add(y0, k1, dt / 2.0), yd, g);
    let k3 = adaptive_rhs(add(y0, k2, dt / 2.0), yd, g);
    let k4 = adaptive_rhs(add(y0, k3, dt), yd, g);
    let mut y = y0;
    for i in 0..4 {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !y[i].is_finite() {
            return Err(Error::NonFinite { t: f64::NAN });
        }
    }
    Ok(AdaptiveState { xi: y[0], chi1_hat: y[1], phi_hat: y[2], theta_hat: y[3], gains: g })
}

/// Disturbance-state estimate `d̂ = (χ̂₁, φ̂ + ξθ̂ + ιχ̂₁)`.
pub fn dhat(a: &AdaptiveState) -> Vec2 {
    Vec2::new(a.chi1_hat, a.phi_hat + a.xi * a.theta_hat + a.gains.iota * a.chi1_hat)
}

/// Reconstruction of the error-system state at shifted time s:
/// `ε̂ = ẑ + f₁(·,θ̂)d̂`, `ε̂ₛ = ẑₛ + f₁(·,θ̂)S_c(θ̂)d̂`.
pub fn reconstruct_eps(
    o: &StateObserver,
    d_hat: Vec2,
    theta_hat: f64,
    c2: f64,
) -> (GridField, GridField) {
    let tk = make_theta_kernels(theta_hat, c2);
    let grid = o.zhat.disp.grid;
    let sc_d = s_c(theta_hat) * d_hat;
    let mut eps = Vec::with_capacity(grid.n_nodes());
    let mut eps_s = Vec::with_capacity(grid.n_nodes());
    for (i, x) in grid.nodes().enumerate() {
        let f1 = tk.f1(x);
        eps.push(o.zhat.disp.values[i] + (f1 * d_hat)[0]);
        eps_s.push(o.zhat.vel.values[i] + (f1 * sc_d)[0]);
    }
    (GridField { grid, values: eps }, GridField { grid, values: eps_s })
}
