//! Integral reconstruction of the velocity field `u` from the director
//! history, once the stress fixed point has converged.
//!
//! Nonslip walls: `u` solves a Dirichlet heat problem with source
//! `theta_tx`, expressed through the Green kernel with the source moved onto
//! `partial_xi G` by parts. Stress-free walls: the shifted variable
//! `u + (1/pi) int_0^x y theta_t dy` solves an insulated problem, expressed
//! through the Neumann kernel.

use crate::error::SolverError;
use crate::grid::{Field, FieldSet};
use crate::heatkernel::duhamel::DuhamelParams;
use crate::heatkernel::kernels::{ImageKernel, KernelKind};
use crate::model::{MaterialModel, VelocityBc};
use crate::util::cumtrapz;
use rayon::prelude::*;
use std::f64::consts::PI;

fn interp_row(field: &Field, tau: f64, out: &mut [f64]) {
    let g = field.grid;
    let dt = g.dt();
    if g.nt == 1 || dt == 0.0 {
        out.copy_from_slice(field.row(0));
        return;
    }
    let pos = ((tau - g.t0) / dt).clamp(0.0, (g.nt - 1) as f64);
    let n0 = (pos.floor() as usize).min(g.nt - 2);
    let frac = pos - n0 as f64;
    let (r0, r1) = (field.row(n0), field.row(n0 + 1));
    for i in 0..g.nx {
        out[i] = r0[i] + frac * (r1[i] - r0[i]);
    }
}

fn all_zero(row: &[f64]) -> bool {
    row.iter().all(|&v| v == 0.0)
}

/// Reconstruct `u` on the window grid; row 0 of `fields.u` supplies `u0` and
/// row 0 of `fields.theta_t` supplies `theta1`.
pub fn reconstruct_u(
    fields: &FieldSet,
    model: &MaterialModel,
    u_bc: VelocityBc,
    params: &DuhamelParams,
) -> Result<Field, SolverError> {
    if params.s_points < 8 {
        return Err(SolverError::WindowUnderResolved(params.s_points));
    }
    match u_bc {
        VelocityBc::Nonslip => reconstruct_dirichlet(fields, params),
        VelocityBc::StressFree => reconstruct_neumann(fields, model, params),
    }
}

fn reconstruct_dirichlet(fields: &FieldSet, params: &DuhamelParams) -> Result<Field, SolverError> {
    let g = fields.grid;
    let xs = g.xs();
    let u0 = fields.u.row(0).to_vec();
    let ns = params.s_points;
    let tol = params.tail_tol;

    let mut out = Field::zeros(g);
    out.row_mut(0).copy_from_slice(&u0);

    let rows: Vec<(usize, &mut [f64])> =
        out.data.chunks_mut(g.nx).enumerate().skip(1).collect();
    rows.into_par_iter()
        .try_for_each(|(n, out_row)| -> Result<(), SolverError> {
            let t = g.t(n);
            let smax = (t - g.t0).sqrt();
            let hs = smax / ns as f64;
            let mut theta_t = vec![0.0; g.nx];
            for (i, o) in out_row.iter_mut().enumerate() {
                let kernel = ImageKernel::new(KernelKind::Green, xs[i], t - g.t0, tol)?;
                *o = kernel.integrate_linear(&xs, &u0);
            }
            for k in 0..ns {
                let s = (k as f64 + 0.5) * hs;
                let tau = t - s * s;
                let weight = 2.0 * s * hs;
                interp_row(&fields.theta_t, tau, &mut theta_t);
                if all_zero(&theta_t) {
                    continue;
                }
                for (i, o) in out_row.iter_mut().enumerate() {
                    let kernel = ImageKernel::new(KernelKind::Green, xs[i], s * s, tol)?;
                    *o -= weight * kernel.integrate_dxi_linear(&xs, &theta_t);
                }
            }
            Ok(())
        })?;
    Ok(out)
}

fn reconstruct_neumann(
    fields: &FieldSet,
    model: &MaterialModel,
    params: &DuhamelParams,
) -> Result<Field, SolverError> {
    let g = fields.grid;
    let xs = g.xs();
    let dx = g.dx();
    let ns = params.s_points;
    let tol = params.tail_tol;

    // Shifted initial profile: u0 + (1/pi) int_0^x y theta1(y) dy.
    let y_theta1: Vec<f64> = xs
        .iter()
        .zip(fields.theta_t.row(0))
        .map(|(&y, &t1)| y * t1)
        .collect();
    let shift0 = cumtrapz(&y_theta1, dx);
    let u0_shifted: Vec<f64> = fields
        .u
        .row(0)
        .iter()
        .zip(&shift0)
        .map(|(&u, &s)| u + s / PI)
        .collect();

    // Volume source of the shifted problem and the partial_xi-kernel weight,
    // per time level.
    let mut volume = Field::zeros(g);
    let mut parts = Field::zeros(g);
    for n in 0..g.nt {
        let mut nonlinear = Vec::with_capacity(g.nx);
        let mut inertial = Vec::with_capacity(g.nx);
        for i in 0..g.nx {
            let theta = fields.theta.at(i, n);
            let ty = fields.theta_x.at(i, n);
            let (c, cp) = model.wave_speed(theta);
            nonlinear.push((c + xs[i] * cp * ty) * c * ty);
            inertial.push(xs[i] * (fields.theta_t.at(i, n) + fields.j.at(i, n)));
        }
        let cum_nl = cumtrapz(&nonlinear, dx);
        let cum_in = cumtrapz(&inertial, dx);
        for i in 0..g.nx {
            let theta = fields.theta.at(i, n);
            let ty = fields.theta_x.at(i, n);
            let (c, _) = model.wave_speed(theta);
            volume.set(
                i,
                n,
                (xs[i] * c * c * ty - cum_nl[i] - cum_in[i]) / PI,
            );
            parts.set(i, n, (1.0 - xs[i] / PI) * fields.theta_t.at(i, n));
        }
    }

    let mut out = Field::zeros(g);
    out.row_mut(0).copy_from_slice(fields.u.row(0));

    let rows: Vec<(usize, &mut [f64])> =
        out.data.chunks_mut(g.nx).enumerate().skip(1).collect();
    rows.into_par_iter()
        .try_for_each(|(n, out_row)| -> Result<(), SolverError> {
            let t = g.t(n);
            let smax = (t - g.t0).sqrt();
            let hs = smax / ns as f64;
            let mut vol = vec![0.0; g.nx];
            let mut pts = vec![0.0; g.nx];

            for (i, o) in out_row.iter_mut().enumerate() {
                let kernel = ImageKernel::new(KernelKind::Neumann, xs[i], t - g.t0, tol)?;
                *o = kernel.integrate_linear(&xs, &u0_shifted);
            }
            for k in 0..ns {
                let s = (k as f64 + 0.5) * hs;
                let tau = t - s * s;
                let weight = 2.0 * s * hs;
                interp_row(&volume, tau, &mut vol);
                interp_row(&parts, tau, &mut pts);
                if all_zero(&vol) && all_zero(&pts) {
                    continue;
                }
                for (i, o) in out_row.iter_mut().enumerate() {
                    let kernel = ImageKernel::new(KernelKind::Neumann, xs[i], s * s, tol)?;
                    let mut acc = 0.0;
                    if !all_zero(&vol) {
                        acc += kernel.integrate_linear(&xs, &vol);
                    }
                    if !all_zero(&pts) {
                        acc -= kernel.integrate_dxi_linear(&xs, &pts);
                    }
                    *o += weight * acc;
                }
            }

            // Undo the shift: u = u_tilde - (1/pi) int_0^x y theta_t dy.
            let mut theta_t_row = vec![0.0; g.nx];
            interp_row(&fields.theta_t, t, &mut theta_t_row);
            let y_tt: Vec<f64> = xs
                .iter()
                .zip(&theta_t_row)
                .map(|(&y, &tt)| y * tt)
                .collect();
            let shift = cumtrapz(&y_tt, dx);
            for (o, s) in out_row.iter_mut().zip(&shift) {
                *o -= s / PI;
            }
            Ok(())
        })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhysGrid;

    fn unit_model() -> MaterialModel {
        MaterialModel::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_velocity() {
        let g = PhysGrid::new(17, 5, 0.0, 0.2);
        let fields = FieldSet::zeros(g);
        for bc in [VelocityBc::Nonslip, VelocityBc::StressFree] {
            let u = reconstruct_u(&fields, &unit_model(), bc, &DuhamelParams::default()).unwrap();
            assert!(u.data.iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn pure_heat_decay_of_sine_profile() {
        // theta = 0, u0 = sin x, Dirichlet walls: u = e^{-t} sin x.
        let g = PhysGrid::new(2049, 2, 0.0, 0.25);
        let mut fields = FieldSet::zeros(g);
        for i in 0..g.nx {
            let v = g.x(i).sin();
            fields.u.set(i, 0, v);
        }
        let params = DuhamelParams {
            s_points: 16,
            ..Default::default()
        };
        let u = reconstruct_u(&fields, &unit_model(), VelocityBc::Nonslip, &params).unwrap();
        let decay = (-0.25f64).exp();
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            worst = worst.max((u.at(i, 1) - decay * g.x(i).sin()).abs());
        }
        assert!(worst < 1e-6, "sup error {worst}");
        assert!(u.at(0, 1).abs() < 1e-10 && u.at(g.nx - 1, 1).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_angle_keeps_zero_velocity() {
        let g = PhysGrid::new(33, 5, 0.0, 0.2);
        let mut fields = FieldSet::zeros(g);
        fields.theta.data.fill(0.9);
        let m = MaterialModel::new(1.0, 3.0).unwrap();
        let u = reconstruct_u(&fields, &m, VelocityBc::StressFree, &DuhamelParams::default())
            .unwrap();
        assert!(u.data.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn neumann_decay_of_cosine_profile() {
        // theta = 0, u0 = cos x, stress-free walls: u = e^{-t} cos x.
        // (With theta = 0 the stress-free condition J = u_x at the walls is
        // u_x = 0, which cos x satisfies.)
        let g = PhysGrid::new(1025, 2, 0.0, 0.25);
        let mut fields = FieldSet::zeros(g);
        for i in 0..g.nx {
            fields.u.set(i, 0, g.x(i).cos());
        }
        let params = DuhamelParams {
            s_points: 16,
            ..Default::default()
        };
        let u = reconstruct_u(&fields, &unit_model(), VelocityBc::StressFree, &params).unwrap();
        let decay = (-0.25f64).exp();
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            worst = worst.max((u.at(i, 1) - decay * g.x(i).cos()).abs());
        }
        assert!(worst < 1e-5, "sup error {worst}");
    }
}
