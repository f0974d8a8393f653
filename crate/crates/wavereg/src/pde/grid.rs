//! Uniform grid on [0, 1] and sampled scalar fields.

use crate::{Error, Result};

/// Uniform node set `x_i = i·h`, `i = 0..=n_cells`, `h = 1/n_cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n_cells: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells, got {n_cells}"
            )));
        }
        let h = 1.0 / n_cells as f64;
        debug_assert!((h * n_cells as f64 - 1.0).abs() < 1e-15);
        Ok(Self { n_cells, h })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.x(i))
    }
}

/// Scalar function sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![0.0; grid.n_nodes()] }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    pub fn constant(grid: Grid1D, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n_nodes()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Plain trapezoid integral over [0, 1].
    pub fn trapezoid(&self) -> f64 {
        let v = &self.values;
        let sum: f64 = v.iter().sum();
        self.grid.h * (sum - 0.5 * (v[0] + v[v.len() - 1]))
    }

    /// Node-wise derivative: centered in the interior, 3-point one-sided at
    /// the ends — second order everywhere.
    pub fn gradient(&self) -> GridField {
        let v = &self.values;
        let n = v.len();
        let h = self.grid.h;
        let mut g = vec![0.0; n];
        g[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        for i in 1..n - 1 {
            g[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        g[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        GridField { grid: self.grid, values: g }
    }
}

/// Which boundary a one-sided stencil addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Second-order one-sided 3-point derivative at a boundary node.
pub fn ddx_boundary(field: &GridField, end: End) -> f64 {
    let v = &field.values;
    let n = v.len();
    let h = field.grid.h;
    assert!(n >= 3, "ddx_boundary needs at least 3 nodes");
    match end {
        End::Left => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
        End::Right => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
    }
}

/// Trapezoid sum of `weight(x_i)·f(x_i)`.
pub fn weighted_integral(field: &GridField, weight: impl Fn(f64) -> f64) -> f64 {
    let g = field.grid;
    let n = field.len();
    let mut acc = 0.0;
    for (i, &v) in field.values.iter().enumerate() {
        let w = weight(g.x(i)) * v;
        acc += if i == 0 || i == n - 1 { 0.5 * w } else { w };
    }
    acc * g.h
}
