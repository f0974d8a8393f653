//! Simulation of an output-regulation controller for the 1-D wave equation
//!
//! The plant is an unstable wave equation on `x ∈ (0,1)` with an anti-damped
//! boundary at `x = 0` (`w_x(0) = -q w(0)`, `q > 0`), boundary control at
//! `x = 1`, a harmonic in-domain/boundary disturbance generated by a 2-D
//! exosystem of unknown frequency, and a *delayed* boundary measurement
//! `y_p(t) = w(0, t - τ)`. The controller stack implemented here:
//!
//! 1. regulator equations (Π) converting regulation into stabilization,
//! 2. a backstepping boundary feedback for the error system,
//! 3. a transport-PDE dynamic compensator plus a state observer driven by the
//!    single delayed measurement,
//! 4. an adaptive observer estimating the disturbance frequency `θ = ω²`,
//! 5. observer–predictor delay compensation re-integrating the model over
//!    `[t-τ, t]` each step.
//!
//! The [`runner`] module wires everything into the closed loop and into
//! reduced diagnostic modes; [`verify`] re-checks every constructive formula
//! by residuals and convergence orders.

pub mod error;
pub mod exosystem;
pub mod kernels;
pub mod metrics;
pub mod observer;
pub mod pde;
pub mod predictor;
pub mod runner;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};

/// 2×2 real matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;
/// Real column 2-vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// Real row 2-vector (the regulator kernels Π, g₁, f₁, … are rows).
pub type Row2 = nalgebra::RowVector2<f64>;
