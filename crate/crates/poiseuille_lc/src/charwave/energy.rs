//! Wave energy evaluated directly in characteristic coordinates.
//!
//! On any curve running from `L0` to `Lpi` the line integral
//! `int (1 - cos w)/4 p dX - (1 - cos z)/4 q dY` equals the kinetic plus
//! elastic energy `int (theta_t^2 + c^2 theta_x^2) dx` over its physical
//! image. Following a lattice staircase that hugs the level set `t = const`
//! therefore measures `E(t)` without ever leaving the characteristic plane,
//! so the cusp points (where `theta_x` is not a function) cost nothing. The
//! Robin wall contributes the stored potential `2 B(theta(pi, t))`.

use crate::charwave::curve::Gamma0Curve;
use crate::charwave::march::{CharGrid, CharNode};
use crate::error::SolverError;
use crate::model::MaterialModel;
use crate::util::{interp_linear, trapezoid};
use std::f64::consts::PI;

fn east_density(node: &CharNode) -> f64 {
    (1.0 - node.w.cos()) * node.p / 4.0
}

fn south_density(node: &CharNode) -> f64 {
    (1.0 - node.z.cos()) * node.q / 4.0
}

/// Energy of the initial data, integrated along the curve itself:
/// the integrand collapses to `(tan^2(w/2) + tan^2(z/2)) / 2` per unit `x`.
fn initial_energy(curve: &Gamma0Curve) -> f64 {
    let dx = curve.xs[1] - curve.xs[0];
    let density: Vec<f64> = curve
        .w
        .iter()
        .zip(&curve.z)
        .map(|(&w, &z)| 0.5 * ((0.5 * w).tan().powi(2) + (0.5 * z).tan().powi(2)))
        .collect();
    trapezoid(&density, dx)
}

fn theta_at_right_wall(grid: &CharGrid, curve: &Gamma0Curve, t: f64) -> f64 {
    let mut ts = vec![0.0];
    let mut thetas = vec![interp_linear(&curve.xs, &curve.theta, PI)];
    for (i, col) in grid.columns.iter().enumerate() {
        if i as f64 * grid.h > grid.xhat {
            if let Some(node) = col.node(i as i64 - grid.n as i64) {
                if node.t > *ts.last().unwrap() {
                    ts.push(node.t);
                    thetas.push(node.theta);
                }
            }
        }
    }
    interp_linear(&ts, &thetas, t)
}

/// Total energy `E(t)` of the characteristic solution, including the Robin
/// boundary potential.
pub fn energy_char(
    grid: &CharGrid,
    curve: &Gamma0Curve,
    model: &MaterialModel,
    iota: f64,
    t: f64,
) -> Result<f64, SolverError> {
    if t > grid.t_end {
        return Err(SolverError::HorizonNotReached(t));
    }
    let boundary = 2.0 * model.boundary_energy(iota, theta_at_right_wall(grid, curve, t));
    if t <= 0.0 {
        return Ok(initial_energy(curve) + boundary);
    }

    // Start at the last wall node at or before the level t.
    let mut start = None;
    for (i, col) in grid.columns.iter().enumerate() {
        if let Some(node) = col.node(i as i64) {
            if node.t <= t {
                start = Some(i);
            }
        }
    }
    let Some(mut i) = start else {
        return Err(SolverError::HorizonNotReached(t));
    };
    let mut j = i as i64;

    let mut energy = 0.0;
    let max_steps = 4 * grid.columns.len() + 4 * grid.n;
    for _ in 0..max_steps {
        if j == i as i64 - grid.n as i64 {
            return Ok(energy + boundary);
        }
        let Some(cur) = grid.node(i, j) else {
            return Err(SolverError::HorizonNotReached(t));
        };
        let east = grid.node(i + 1, j);
        let south = grid.node(i, j - 1);
        let go_east = match (east, south) {
            (Some(e), Some(_)) => e.t <= t,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => return Err(SolverError::HorizonNotReached(t)),
        };
        if go_east {
            let e = east.unwrap();
            energy += 0.5 * grid.h * (east_density(cur) + east_density(e));
            i += 1;
        } else {
            let s = south.unwrap();
            energy += 0.5 * grid.h * (south_density(cur) + south_density(s));
            j -= 1;
        }
    }
    Err(SolverError::HorizonNotReached(t))
}
