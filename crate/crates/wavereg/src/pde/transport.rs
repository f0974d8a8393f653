//! First-order upwind stepper for the rightward transport `Y_s = -Y_x` on
//! [0, 1] with inflow at `x = 0`. At `dt = h` the update is an exact shift.

use super::grid::GridField;
use crate::{Error, Result};

/// One upwind step; `inflow` is the boundary value entering at `x = 0`.
pub fn transport_step(field: &GridField, inflow: f64, dt: f64) -> Result<GridField> {
    let h = field.grid.h;
    if !(dt > 0.0) || dt > h * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit: h });
    }
    let nu = dt / h;
    let v = &field.values;
    let mut out = vec![0.0; v.len()];
    out[0] = inflow;
    for i in 1..v.len() {
        out[i] = v[i] - nu * (v[i] - v[i - 1]);
    }
    Ok(GridField { grid: field.grid, values: out })
}
