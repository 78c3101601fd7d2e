//! Uniform physical-space grids and field storage.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform tensor grid on `[0, pi] x [t0, t1]` with `nx` space nodes and
/// `nt` time levels (both counts include the endpoints).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PhysGrid {
    pub nx: usize,
    pub nt: usize,
    pub t0: f64,
    pub t1: f64,
}

impl PhysGrid {
    pub fn new(nx: usize, nt: usize, t0: f64, t1: f64) -> Self {
        assert!(nx >= 2 && nt >= 1 && t1 >= t0);
        PhysGrid { nx, nt, t0, t1 }
    }

    pub fn dx(&self) -> f64 {
        PI / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        if self.nt > 1 {
            (self.t1 - self.t0) / (self.nt - 1) as f64
        } else {
            0.0
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        PI * i as f64 / (self.nx - 1) as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|n| self.t(n)).collect()
    }
}

/// One scalar field stored row-major: `data[n * nx + i]` is the value at
/// `(x_i, t_n)`.
#[derive(Clone, Debug)]
pub struct Field {
    pub grid: PhysGrid,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: PhysGrid) -> Self {
        Field {
            grid,
            data: vec![0.0; grid.nx * grid.nt],
        }
    }

    pub fn at(&self, i: usize, n: usize) -> f64 {
        self.data[n * self.grid.nx + i]
    }

    pub fn set(&mut self, i: usize, n: usize, v: f64) {
        self.data[n * self.grid.nx + i] = v;
    }

    /// Row of the field at time level `n`.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.grid.nx..(n + 1) * self.grid.nx]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.grid.nx..(n + 1) * self.grid.nx]
    }
}

/// The complete set of sampled solution fields on one grid, plus a mask of
/// nodes where the director gradient is unbounded (one-sided values stored).
#[derive(Clone, Debug)]
pub struct FieldSet {
    pub grid: PhysGrid,
    pub theta: Field,
    pub theta_t: Field,
    pub theta_x: Field,
    pub u: Field,
    pub j: Field,
    pub cusp: Vec<bool>,
}

impl FieldSet {
    pub fn zeros(grid: PhysGrid) -> Self {
        FieldSet {
            grid,
            theta: Field::zeros(grid),
            theta_t: Field::zeros(grid),
            theta_x: Field::zeros(grid),
            u: Field::zeros(grid),
            j: Field::zeros(grid),
            cusp: vec![false; grid.nx * grid.nt],
        }
    }

    pub fn is_cusp(&self, i: usize, n: usize) -> bool {
        self.cusp[n * self.grid.nx + i]
    }
}
