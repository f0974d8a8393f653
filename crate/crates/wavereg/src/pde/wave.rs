//! Explicit second-order stepper for `w_tt = w_xx + f(x,t)` in
//! displacement–velocity form (velocity-Verlet), with Robin conditions by
//! ghost-node elimination and Dirichlet imposed strongly.

use super::grid::GridField;
use crate::{Error, Result};

/// Wave-type state `(w, w_t)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub disp: GridField,
    pub vel: GridField,
    pub t: f64,
}

impl WaveState {
    pub fn new(disp: GridField, vel: GridField, t: f64) -> Self {
        assert_eq!(disp.grid, vel.grid, "disp/vel must share one grid");
        Self { disp, vel, t }
    }

    pub fn zeros(grid: super::Grid1D) -> Self {
        Self { disp: GridField::zeros(grid), vel: GridField::zeros(grid), t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.disp.is_finite() && self.vel.is_finite()
    }
}

/// Boundary conditions supported by [`wave_step`].
///
/// The left end takes a Robin condition `w_x(0) = a·w(0) + b`; the right end
/// either a strong Dirichlet value `w(1) = g` (imposed at `t + dt`) or a
/// damper-type Robin `w_x(1) = a·w_t(1) + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    RobinLeft { a: f64, b: f64 },
    DirichletRight { value: f64 },
    RobinRight { a: f64, b: f64 },
}

impl BoundaryCondition {
    fn finite(&self) -> bool {
        match *self {
            BoundaryCondition::RobinLeft { a, b } | BoundaryCondition::RobinRight { a, b } => {
                a.is_finite() && b.is_finite()
            }
            BoundaryCondition::DirichletRight { value } => value.is_finite(),
        }
    }
}

/// Acceleration `w_xx + f` on all nodes. The left node uses the Robin ghost
/// `w_{-1} = w_1 - 2h(a w_0 + b)`; the right node depends on `right`:
/// Dirichlet leaves it 0 (imposed strongly), Robin uses the ghost
/// `w_{n+1} = w_{n-1} + 2h(a v_n + b)` with `v_n` the *current* velocity.
fn accel(
    w: &[f64],
    v_right: f64,
    left: &BoundaryCondition,
    right: &BoundaryCondition,
    forcing: &[f64],
    h: f64,
) -> Vec<f64> {
    let n = w.len() - 1;
    let h2 = h * h;
    let mut a = vec![0.0; n + 1];
    let (la, lb) = match *left {
        BoundaryCondition::RobinLeft { a, b } => (a, b),
        _ => unreachable!("validated by wave_step"),
    };
    a[0] = (2.0 * w[1] - 2.0 * w[0] - 2.0 * h * (la * w[0] + lb)) / h2 + forcing[0];
    for i in 1..n {
        a[i] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / h2 + forcing[i];
    }
    match *right {
        BoundaryCondition::DirichletRight { .. } => {}
        BoundaryCondition::RobinRight { a: ra, b: rb } => {
            a[n] = (2.0 * w[n - 1] - 2.0 * w[n] + 2.0 * h * (ra * v_right + rb)) / h2 + forcing[n];
        }
        BoundaryCondition::RobinLeft { .. } => unreachable!("validated by wave_step"),
    }
    a
}

/// One velocity-Verlet step of the wave equation.
///
/// Sampling conventions for time-varying data: `forcing` and Robin
/// inhomogeneities are the values at `t + dt/2` (midpoint rule keeps the step
/// second order), the Dirichlet value is the one to impose at `t + dt`. The
/// velocity at a Dirichlet node is the difference quotient of consecutive
/// imposed boundary values.
pub fn wave_step(
    state: &WaveState,
    left: &BoundaryCondition,
    right: &BoundaryCondition,
    forcing: &GridField,
    dt: f64,
) -> Result<WaveState> {
    let grid = state.disp.grid;
    let h = grid.h;
    if !(dt > 0.0) || dt > h * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit: h });
    }
    if !matches!(left, BoundaryCondition::RobinLeft { .. }) {
        return Err(Error::InvalidParameter("left boundary must be RobinLeft".into()));
    }
    if matches!(right, BoundaryCondition::RobinLeft { .. }) {
        return Err(Error::InvalidParameter(
            "right boundary must be DirichletRight or RobinRight".into(),
        ));
    }
    if !left.finite() || !right.finite() {
        return Err(Error::InvalidParameter("boundary coefficients must be finite".into()));
    }
    assert_eq!(forcing.grid, grid, "forcing must live on the state grid");

    let w = &state.disp.values;
    let v = &state.vel.values;
    let f = &forcing.values;
    let n = grid.n_cells;

    let a0 = accel(w, v[n], left, right, f, h);
    let mut wn: Vec<f64> = (0..=n)
        .map(|i| w[i] + dt * v[i] + 0.5 * dt * dt * a0[i])
        .collect();
    if let BoundaryCondition::DirichletRight { value } = *right {
        wn[n] = value;
    }
    let a1 = accel(&wn, v[n], left, right, f, h);
    let mut vn: Vec<f64> = (0..=n).map(|i| v[i] + 0.5 * dt * (a0[i] + a1[i])).collect();
    match *right {
        BoundaryCondition::DirichletRight { .. } => {
            // The displacement is imposed strongly, but the boundary velocity
            // follows the PDE: trapezoid on the one-sided second-order
            // acceleration stencil. (A difference quotient of imposed values
            // is only first order; the trapezoid-consistent 2Δw/dt − v has an
            // undamped parasitic root.)
            let h2 = h * h;
            let one_sided = |u: &[f64]| {
                (2.0 * u[n] - 5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / h2 + f[n]
            };
            vn[n] = v[n] + 0.5 * dt * (one_sided(w) + one_sided(&wn));
        }
        BoundaryCondition::RobinRight { a: ra, .. } => {
            // a1[n] was evaluated with the old boundary velocity; resolve the
            // damper term implicitly: v* = v + dt/2·(a0 + a1(v*)), where a1
            // depends on v* through 2·ra·v*/h.
            let base1 = a1[n] - 2.0 * ra * v[n] / h;
            vn[n] = (v[n] + 0.5 * dt * (a0[n] + base1)) / (1.0 - dt * ra / h);
        }
        BoundaryCondition::RobinLeft { .. } => unreachable!(),
    }

    let out = WaveState {
        disp: GridField { grid, values: wn },
        vel: GridField { grid, values: vn },
        t: state.t + dt,
    };
    if !out.is_finite() {
        return Err(Error::NonFinite { t: state.t });
    }
    Ok(out)
}

/// Diagnostic energy `½∫(w_x² + w_t²)dx + ½q·w(0)²`.
pub fn energy(state: &WaveState, q: f64) -> f64 {
    let gx = state.disp.gradient();
    let integrand = GridField {
        grid: state.disp.grid,
        values: gx
            .values
            .iter()
            .zip(&state.vel.values)
            .map(|(&wx, &wt)| wx * wx + wt * wt)
            .collect(),
    };
    0.5 * integrand.trapezoid() + 0.5 * q * state.disp.first() * state.disp.first()
}
