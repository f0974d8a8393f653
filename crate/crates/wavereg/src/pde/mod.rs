//! Discretization substrate: uniform grid, wave/transport steppers,
//! quadrature, boundary stencils, history buffers, energy diagnostics.

mod grid;
mod history;
mod transport;
mod wave;

pub use grid::{ddx_boundary, weighted_integral, End, Grid1D, GridField};
pub use history::HistoryBuffer;
pub use transport::transport_step;
pub use wave::{energy, wave_step, BoundaryCondition, WaveState};
