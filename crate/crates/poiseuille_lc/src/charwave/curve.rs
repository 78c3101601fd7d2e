//! The image of the initial segment `t = 0` in the characteristic plane.
//!
//! With `R0 = theta1 + c(theta0) theta0'` and `S0 = theta1 - c(theta0)
//! theta0'`, the coordinates are `X(x) = int_0^x (1 + R0^2)` and
//! `Y(x) = -int_0^x (1 + S0^2)`, so `X` is strictly increasing and `Y`
//! strictly decreasing. The wall lines map to `L0: Y = X` and
//! `Lpi: Y = X - Xtil` with `Xhat = X(pi)` and `Xtil = Xhat - Y(pi)`.

use crate::error::SolverError;
use crate::model::{compress, InitialData, MaterialModel};
use crate::util::{cumtrapz, interp_linear};
use std::f64::consts::PI;

/// Parametric tables of the initial curve `Gamma0` and its boundary data.
#[derive(Clone, Debug)]
pub struct Gamma0Curve {
    /// Parameter samples `x in [0, pi]` (uniform).
    pub xs: Vec<f64>,
    /// `X(x)`, strictly increasing.
    pub big_x: Vec<f64>,
    /// `Y(x)`, strictly decreasing.
    pub big_y: Vec<f64>,
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub xhat: f64,
    pub xtil: f64,
}

/// Data carried by a point of `Gamma0` (p = q = 1 there).
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub x: f64,
    pub big_x: f64,
    pub big_y: f64,
    pub theta: f64,
    pub w: f64,
    pub z: f64,
}

impl Gamma0Curve {
    /// `phi(X)`: the curve as a graph `Y = phi(X)`.
    pub fn phi(&self, big_x: f64) -> f64 {
        interp_linear(&self.big_x, &self.big_y, big_x)
    }

    fn param_of_big_x(&self, big_x: f64) -> f64 {
        interp_linear(&self.big_x, &self.xs, big_x)
    }

    fn param_of_big_y(&self, big_y: f64) -> f64 {
        // big_y is decreasing; search the reversed table.
        let rev_y: Vec<f64> = self.big_y.iter().rev().copied().collect();
        let rev_x: Vec<f64> = self.xs.iter().rev().copied().collect();
        interp_linear(&rev_y, &rev_x, big_y)
    }

    fn point_at_param(&self, x: f64) -> CurvePoint {
        CurvePoint {
            x,
            big_x: interp_linear(&self.xs, &self.big_x, x),
            big_y: interp_linear(&self.xs, &self.big_y, x),
            theta: interp_linear(&self.xs, &self.theta, x),
            w: interp_linear(&self.xs, &self.w, x),
            z: interp_linear(&self.xs, &self.z, x),
        }
    }

    /// Curve point below a lattice column (given `X`).
    pub fn point_at_big_x(&self, big_x: f64) -> CurvePoint {
        let mut p = self.point_at_param(self.param_of_big_x(big_x));
        p.big_x = big_x;
        p.big_y = self.phi(big_x);
        p
    }

    /// Curve point west of a lattice row (given `Y`).
    pub fn point_at_big_y(&self, big_y: f64) -> CurvePoint {
        let mut p = self.point_at_param(self.param_of_big_y(big_y));
        p.big_y = big_y;
        p.big_x = interp_linear(&self.xs, &self.big_x, p.x);
        p
    }
}

/// Build the curve tables by cumulative quadrature of the initial data.
pub fn build_initial_curve(
    data: &InitialData,
    model: &MaterialModel,
    samples: usize,
) -> Result<Gamma0Curve, SolverError> {
    build_curve_from(
        |x| {
            (
                data.theta0.eval(x),
                data.theta1.eval(x),
                data.theta0.deriv(x),
            )
        },
        model,
        samples,
    )
}

/// Build the curve from gridded fields (window seams): `theta`, `theta_t`
/// and `theta_x` sampled on `xs_nodes`, interpolated linearly in between.
pub fn build_curve_from_samples(
    xs_nodes: &[f64],
    theta: &[f64],
    theta_t: &[f64],
    theta_x: &[f64],
    model: &MaterialModel,
    samples: usize,
) -> Result<Gamma0Curve, SolverError> {
    build_curve_from(
        |x| {
            (
                interp_linear(xs_nodes, theta, x),
                interp_linear(xs_nodes, theta_t, x),
                interp_linear(xs_nodes, theta_x, x),
            )
        },
        model,
        samples,
    )
}

fn build_curve_from(
    sample: impl Fn(f64) -> (f64, f64, f64),
    model: &MaterialModel,
    samples: usize,
) -> Result<Gamma0Curve, SolverError> {
    let n = samples.max(1025);
    let dx = PI / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();

    let mut theta = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut ix = Vec::with_capacity(n); // 1 + R0^2
    let mut iy = Vec::with_capacity(n); // 1 + S0^2
    for &x in &xs {
        let (t0, t1, t0p) = sample(x);
        let (c, _) = model.wave_speed(t0);
        let r0 = t1 + c * t0p;
        let s0 = t1 - c * t0p;
        if !(r0.is_finite() && s0.is_finite()) {
            return Err(SolverError::QuadratureFailure(x));
        }
        theta.push(t0);
        w.push(compress(r0));
        z.push(compress(s0));
        ix.push(1.0 + r0 * r0);
        iy.push(1.0 + s0 * s0);
    }

    let big_x = cumtrapz(&ix, dx);
    let big_y: Vec<f64> = cumtrapz(&iy, dx).into_iter().map(|v| -v).collect();
    let xhat = big_x[n - 1];
    let xtil = xhat - big_y[n - 1];

    Ok(Gamma0Curve {
        xs,
        big_x,
        big_y,
        theta,
        w,
        z,
        xhat,
        xtil,
    })
}
