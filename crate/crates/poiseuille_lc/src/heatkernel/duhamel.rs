//! The Duhamel integral map `M(J)` whose fixed point is the shear stress.
//!
//! For nonslip walls `J` satisfies an insulated heat problem and the map uses
//! the Neumann kernel with a wall-trace term; for stress-free walls `J`
//! vanishes at the walls and the map uses the Green kernel with no trace term.
//!
//! Quadrature: the time integral is taken under the substitution
//! `tau = t - s^2` with a midpoint rule in `s`, which removes the
//! `1/sqrt(t-tau)` kernel singularity; the space integral uses exact per-cell
//! Gaussian moments against the piecewise-linear field rows.

use crate::error::SolverError;
use crate::grid::{Field, FieldSet};
use crate::heatkernel::kernels::{ImageKernel, KernelKind, TAIL_TOL};
use crate::model::{MaterialModel, VelocityBc};
use rayon::prelude::*;

/// Quadrature controls for the Duhamel integrals.
#[derive(Clone, Copy, Debug)]
pub struct DuhamelParams {
    /// Points of the midpoint rule in the `s = sqrt(t - tau)` variable.
    pub s_points: usize,
    /// Image-series truncation tolerance.
    pub tail_tol: f64,
}

impl Default for DuhamelParams {
    fn default() -> Self {
        DuhamelParams {
            s_points: 48,
            tail_tol: TAIL_TOL,
        }
    }
}

/// Linearly interpolate a stored field row at time `tau`.
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

/// Per-time-level source rows entering the Duhamel integrals.
struct Sources {
    /// `theta_t + J`.
    damping: Field,
    /// `c c' theta_x^2`.
    quad: Field,
    /// `c^2 theta_x`.
    flux: Field,
    /// Wall traces of `c^2 theta_x` per time level (nonslip case only).
    trace0: Vec<f64>,
    trace_pi: Vec<f64>,
}

/// Wall value of `c^2 theta_x` from a one-sided second-order difference of
/// the stored `theta` row.
fn wall_trace(model: &MaterialModel, theta_row: &[f64], dx: f64, left: bool) -> f64 {
    let n = theta_row.len();
    let (theta_w, slope) = if left {
        (
            theta_row[0],
            (-3.0 * theta_row[0] + 4.0 * theta_row[1] - theta_row[2]) / (2.0 * dx),
        )
    } else {
        (
            theta_row[n - 1],
            (3.0 * theta_row[n - 1] - 4.0 * theta_row[n - 2] + theta_row[n - 3]) / (2.0 * dx),
        )
    };
    let (c, _) = model.wave_speed(theta_w);
    c * c * slope
}

fn build_sources(fields: &FieldSet, model: &MaterialModel, u_bc: VelocityBc) -> Sources {
    let g = fields.grid;
    let mut damping = Field::zeros(g);
    let mut quad = Field::zeros(g);
    let mut flux = Field::zeros(g);
    let mut trace0 = vec![0.0; g.nt];
    let mut trace_pi = vec![0.0; g.nt];
    let dx = g.dx();
    for n in 0..g.nt {
        for i in 0..g.nx {
            let theta = fields.theta.at(i, n);
            let tx = fields.theta_x.at(i, n);
            let (c, cp) = model.wave_speed(theta);
            damping.set(i, n, fields.theta_t.at(i, n) + fields.j.at(i, n));
            quad.set(i, n, c * cp * tx * tx);
            flux.set(i, n, c * c * tx);
        }
        if u_bc == VelocityBc::Nonslip {
            trace0[n] = wall_trace(model, fields.theta.row(n), dx, true);
            trace_pi[n] = wall_trace(model, fields.theta.row(n), dx, false);
        }
    }
    // At cusp-tagged wall instants the one-sided stencil is unusable: borrow
    // the trace from the nearest non-cusp time level.
    if u_bc == VelocityBc::Nonslip {
        patch_cusp_trace(fields, 0, &mut trace0);
        patch_cusp_trace(fields, g.nx - 1, &mut trace_pi);
    }
    Sources {
        damping,
        quad,
        flux,
        trace0,
        trace_pi,
    }
}

fn patch_cusp_trace(fields: &FieldSet, i: usize, trace: &mut [f64]) {
    let nt = fields.grid.nt;
    let bad: Vec<usize> = (0..nt).filter(|&n| fields.is_cusp(i, n)).collect();
    for n in bad {
        let donor = (0..nt)
            .filter(|&m| !fields.is_cusp(i, m))
            .min_by_key(|&m| m.abs_diff(n));
        if let Some(m) = donor {
            trace[n] = trace[m];
        }
    }
}

/// Apply the Duhamel map to the fields tabulated on the window grid.
///
/// `fields.j` plays the role of the current iterate `J`; row 0 of `fields.j`
/// is the initial datum `J0` and is returned unchanged.
pub fn duhamel_j(
    fields: &FieldSet,
    model: &MaterialModel,
    u_bc: VelocityBc,
    params: &DuhamelParams,
) -> Result<Field, SolverError> {
    if params.s_points < 8 {
        return Err(SolverError::WindowUnderResolved(params.s_points));
    }
    let g = fields.grid;
    let kind = match u_bc {
        VelocityBc::Nonslip => KernelKind::Neumann,
        VelocityBc::StressFree => KernelKind::Green,
    };
    let sources = build_sources(fields, model, u_bc);
    let xs = g.xs();
    let j0 = fields.j.row(0).to_vec();
    let ns = params.s_points;
    let tol = params.tail_tol;

    let mut out = Field::zeros(g);
    out.row_mut(0).copy_from_slice(&j0);

    let rows: Vec<(usize, &mut [f64])> = out
        .data
        .chunks_mut(g.nx)
        .enumerate()
        .skip(1)
        .collect();

    rows.into_par_iter()
        .try_for_each(|(n, out_row)| -> Result<(), SolverError> {
            let t = g.t(n);
            let smax = (t - g.t0).sqrt();
            let hs = smax / ns as f64;
            let mut damping = vec![0.0; g.nx];
            let mut quad = vec![0.0; g.nx];
            let mut flux = vec![0.0; g.nx];

            // Initial term.
            for (i, o) in out_row.iter_mut().enumerate() {
                let kernel = ImageKernel::new(kind, xs[i], t - g.t0, tol)?;
                *o = kernel.integrate_linear(&xs, &j0);
            }

            for k in 0..ns {
                let s = (k as f64 + 0.5) * hs;
                let tau = t - s * s;
                let weight = 2.0 * s * hs;
                interp_row(&sources.damping, tau, &mut damping);
                interp_row(&sources.quad, tau, &mut quad);
                interp_row(&sources.flux, tau, &mut flux);
                let (tr0, tr_pi) = if u_bc == VelocityBc::Nonslip {
                    (
                        crate::util::interp_linear(&g.ts(), &sources.trace0, tau),
                        crate::util::interp_linear(&g.ts(), &sources.trace_pi, tau),
                    )
                } else {
                    (0.0, 0.0)
                };
                let skip_damping = all_zero(&damping);
                let skip_quad = all_zero(&quad);
                let skip_flux = all_zero(&flux);
                if skip_damping && skip_quad && skip_flux && tr0 == 0.0 && tr_pi == 0.0 {
                    continue;
                }
                for (i, o) in out_row.iter_mut().enumerate() {
                    let kernel = ImageKernel::new(kind, xs[i], s * s, tol)?;
                    let mut acc = 0.0;
                    if !skip_damping {
                        acc -= kernel.integrate_linear(&xs, &damping);
                    }
                    if !skip_quad {
                        acc -= kernel.integrate_linear(&xs, &quad);
                    }
                    if !skip_flux {
                        acc -= kernel.integrate_dxi_linear(&xs, &flux);
                    }
                    if u_bc == VelocityBc::Nonslip {
                        acc += kernel.eval(xs[g.nx - 1]) * tr_pi - kernel.eval(xs[0]) * tr0;
                    }
                    *o += weight * acc;
                }
            }
            Ok(())
        })?;

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhysGrid;
    use std::f64::consts::PI;

    fn unit_model() -> MaterialModel {
        MaterialModel::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_data_maps_to_zero() {
        let g = PhysGrid::new(17, 9, 0.0, 0.25);
        let fields = FieldSet::zeros(g);
        let out = duhamel_j(
            &fields,
            &unit_model(),
            VelocityBc::Nonslip,
            &DuhamelParams::default(),
        )
        .unwrap();
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equilibrium_angle_maps_to_zero() {
        // Constant theta: every theta-derivative source vanishes identically.
        let g = PhysGrid::new(17, 9, 0.0, 0.25);
        let mut fields = FieldSet::zeros(g);
        fields.theta.data.fill(0.7);
        let m = MaterialModel::new(1.0, 2.5).unwrap();
        let out =
            duhamel_j(&fields, &m, VelocityBc::Nonslip, &DuhamelParams::default()).unwrap();
        assert!(out.data.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_profile_decays_exponentially() {
        // theta = 0 and J(x,t) = e^{-t}: then M(J) solves M_t = M_xx - J with
        // M(x,0) = 1, insulated walls, i.e. M = e^{-t}.
        let g = PhysGrid::new(33, 33, 0.0, 0.5);
        let mut fields = FieldSet::zeros(g);
        for n in 0..g.nt {
            let v = (-g.t(n)).exp();
            fields.j.row_mut(n).fill(v);
        }
        let params = DuhamelParams {
            s_points: 64,
            ..Default::default()
        };
        let out = duhamel_j(&fields, &unit_model(), VelocityBc::Nonslip, &params).unwrap();
        let mut worst = 0.0f64;
        for n in 0..g.nt {
            let expect = (-g.t(n)).exp();
            for i in 0..g.nx {
                worst = worst.max((out.at(i, n) - expect).abs());
            }
        }
        assert!(worst < 5e-4, "sup error {worst}");
    }

    /// Cosine-spectral oracle for `M_t - M_xx = f`, `M(x,0) = j0`, insulated
    /// walls; modal ODEs integrated by RK4.
    fn spectral_neumann_heat(
        f: impl Fn(f64, f64) -> f64,
        j0: impl Fn(f64) -> f64,
        t_end: f64,
        modes: usize,
        xs: &[f64],
    ) -> Vec<f64> {
        let nq = 512;
        let qx: Vec<f64> = (0..=nq).map(|i| PI * i as f64 / nq as f64).collect();
        let project = |values: &dyn Fn(f64) -> f64, k: usize| -> f64 {
            let kf = k as f64;
            let samples: Vec<f64> = qx.iter().map(|&x| values(x) * (kf * x).cos()).collect();
            let norm = if k == 0 { PI } else { PI / 2.0 };
            crate::util::simpson(&samples, PI / nq as f64) / norm
        };
        let mut coeff: Vec<f64> = (0..=modes).map(|k| project(&|x| j0(x), k)).collect();
        let steps = 2000;
        let dt = t_end / steps as f64;
        // Forcing projections on the half-step grid, computed once.
        let fhat: Vec<Vec<f64>> = (0..=2 * steps)
            .map(|j| {
                let tt = 0.5 * j as f64 * dt;
                (0..=modes).map(|k| project(&|x| f(x, tt), k)).collect()
            })
            .collect();
        for step in 0..steps {
            for k in 0..=modes {
                let kf = k as f64;
                let (f0, fh, f1) = (
                    fhat[2 * step][k],
                    fhat[2 * step + 1][k],
                    fhat[2 * step + 2][k],
                );
                let rhs = |fv: f64, a: f64| -kf * kf * a + fv;
                let k1 = rhs(f0, coeff[k]);
                let k2 = rhs(fh, coeff[k] + 0.5 * dt * k1);
                let k3 = rhs(fh, coeff[k] + 0.5 * dt * k2);
                let k4 = rhs(f1, coeff[k] + dt * k3);
                coeff[k] += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        xs.iter()
            .map(|&x| {
                (0..=modes)
                    .map(|k| coeff[k] * (k as f64 * x).cos())
                    .sum::<f64>()
            })
            .collect()
    }

    fn manufactured_error(nx: usize, nt: usize) -> f64 {
        let m = MaterialModel::new(1.0, 2.0).unwrap();
        let t_end = 0.4;
        let g = PhysGrid::new(nx, nt, 0.0, t_end);
        let theta = |x: f64, t: f64| 0.1 * x.sin() * (-t).exp();
        let theta_t = |x: f64, t: f64| -0.1 * x.sin() * (-t).exp();
        let theta_x = |x: f64, t: f64| 0.1 * x.cos() * (-t).exp();
        let theta_xx = |x: f64, t: f64| -0.1 * x.sin() * (-t).exp();
        let j = |x: f64, t: f64| 0.2 * x.cos() * (-0.5 * t).exp();
        let mut fields = FieldSet::zeros(g);
        for n in 0..g.nt {
            let t = g.t(n);
            for i in 0..g.nx {
                let x = g.x(i);
                fields.theta.set(i, n, theta(x, t));
                fields.theta_t.set(i, n, theta_t(x, t));
                fields.theta_x.set(i, n, theta_x(x, t));
                fields.j.set(i, n, j(x, t));
            }
        }
        let params = DuhamelParams {
            s_points: 64,
            ..Default::default()
        };
        let out = duhamel_j(&fields, &m, VelocityBc::Nonslip, &params).unwrap();

        // Oracle: the exact weak solution of M_t - M_xx = c(c theta_x)_x
        // - theta_t - J with M(x,0) = J(x,0), via the cosine expansion.
        let f = |x: f64, t: f64| {
            let (c, cp) = m.wave_speed(theta(x, t));
            let tx = theta_x(x, t);
            c * cp * tx * tx + c * c * theta_xx(x, t) - theta_t(x, t) - j(x, t)
        };
        let xs = g.xs();
        let oracle = spectral_neumann_heat(f, |x| j(x, 0.0), t_end, 24, &xs);
        let mut err = 0.0f64;
        for i in 0..g.nx {
            err = err.max((out.at(i, g.nt - 1) - oracle[i]).abs());
        }
        err
    }

    #[test]
    fn manufactured_solution_matches_spectral_oracle() {
        let coarse = manufactured_error(17, 9);
        let fine = manufactured_error(33, 17);
        assert!(fine < 2e-3, "fine-grid error {fine}");
        assert!(
            coarse / fine >= 1.5 || coarse < 1e-4,
            "no convergence: coarse {coarse}, fine {fine}"
        );
    }

    #[test]
    fn under_resolved_window_is_rejected() {
        let g = PhysGrid::new(9, 3, 0.0, 0.1);
        let fields = FieldSet::zeros(g);
        let params = DuhamelParams {
            s_points: 4,
            ..Default::default()
        };
        assert!(matches!(
            duhamel_j(&fields, &unit_model(), VelocityBc::Nonslip, &params),
            Err(SolverError::WindowUnderResolved(4))
        ));
    }
}
