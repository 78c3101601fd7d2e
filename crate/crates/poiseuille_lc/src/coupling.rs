//! Fixed-point coupling of the characteristic wave solver and the heat
//! kernel stress update.
//!
//! On a short time window the map `J -> M(J)` (solve the wave equation with
//! stress history `J`, then re-evaluate the stress from the Duhamel
//! representation) is iterated from the constant-in-time extension of the
//! seam stress until the sup-norm change drops below tolerance. Windows are
//! chained: the fields at the seam become the initial data of the next
//! window. Iteration is treated as a heuristic — on sustained residual
//! growth the window is halved and retried.

use crate::charwave::{build_curve_from_samples, invert_map, march};
use crate::error::SolverError;
use crate::grid::{Field, FieldSet, PhysGrid};
use crate::heatkernel::{duhamel_j, reconstruct_u, DuhamelParams};
use crate::model::ValidatedProblem;
use crate::util::{interp_linear, rms_diff, sup_diff};

/// Knobs of the window fixed point.
#[derive(Clone, Debug)]
pub struct FixedPointConfig {
    /// Initial window length.
    pub delta: f64,
    /// Sup-norm convergence tolerance for `M(J) - J`.
    pub tol: f64,
    /// Iteration budget per window attempt.
    pub max_iter: usize,
    /// Window halving budget on non-convergence.
    pub max_halvings: usize,
    /// Optional bound on `sup |J - J_seed|`; exceeding it counts as
    /// divergence.
    pub k_guard: Option<f64>,
    /// Characteristic lattice resolution per window.
    pub char_n: usize,
    /// Sample count for the initial-curve tables.
    pub curve_samples: usize,
    /// Quadrature parameters of the Duhamel evaluation.
    pub duhamel: DuhamelParams,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            delta: 0.1,
            tol: 1e-8,
            max_iter: 40,
            max_halvings: 8,
            k_guard: None,
            char_n: 384,
            curve_samples: 4097,
            duhamel: DuhamelParams::default(),
        }
    }
}

impl FixedPointConfig {
    fn check(&self) -> Result<(), SolverError> {
        if !(self.delta > 0.0 && self.tol > 0.0) {
            return Err(SolverError::Config(
                "fixed-point config requires delta > 0 and tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Fields along a constant-time slice, used to hand one window to the next.
#[derive(Clone, Debug)]
pub struct SeamState {
    pub xs: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub u: Vec<f64>,
    pub j: Vec<f64>,
}

impl SeamState {
    fn from_row(fields: &FieldSet, n: usize) -> Self {
        SeamState {
            xs: fields.grid.xs(),
            theta: fields.theta.row(n).to_vec(),
            theta_t: fields.theta_t.row(n).to_vec(),
            theta_x: fields.theta_x.row(n).to_vec(),
            u: fields.u.row(n).to_vec(),
            j: fields.j.row(n).to_vec(),
        }
    }

    fn initial(problem: &ValidatedProblem, nx: usize) -> Self {
        let ini = &problem.spec.initial;
        let xs: Vec<f64> = (0..nx)
            .map(|i| std::f64::consts::PI * i as f64 / (nx - 1) as f64)
            .collect();
        SeamState {
            theta: xs.iter().map(|&x| ini.theta0.eval(x)).collect(),
            theta_t: xs.iter().map(|&x| ini.theta1.eval(x)).collect(),
            theta_x: xs.iter().map(|&x| ini.theta0.deriv(x)).collect(),
            u: xs.iter().map(|&x| ini.u0.eval(x)).collect(),
            j: xs
                .iter()
                .map(|&x| interp_linear(&problem.j0_xs, &problem.j0_values, x))
                .collect(),
            xs,
        }
    }
}

/// Convergence record of one accepted window.
#[derive(Clone, Debug)]
pub struct WindowReport {
    pub t0: f64,
    pub t1: f64,
    pub iterations: usize,
    pub halvings: usize,
    /// Final fixed-point residual `sup |M(J) - J|`.
    pub residual: f64,
    /// Range of the Jacobian weights on the accepted characteristic grid.
    pub min_p: f64,
    pub max_p: f64,
    pub min_q: f64,
    pub max_q: f64,
    /// Lower envelope of the nodewise larger weight `max(p, q)`, away from
    /// cusp angles and inside the horizon.
    pub env_min: f64,
    /// Upper envelope of the nodewise larger weight, same restriction.
    pub env_max: f64,
}

/// Range of `p` and `q` over every node of a characteristic grid.
pub fn pq_bounds(grid: &crate::charwave::CharGrid) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for col in &grid.columns {
        for node in &col.nodes {
            b.0 = b.0.min(node.p);
            b.1 = b.1.max(node.p);
            b.2 = b.2.min(node.q);
            b.3 = b.3.max(node.q);
        }
    }
    b
}

/// Envelope of the nodewise larger Jacobian weight `max(p, q)`.
///
/// The structural two-sided bound applies to the larger of the pair, so that
/// is the quantity whose range is tracked. Nodes where either compressed
/// angle sits within `CUSP_CLEARANCE` of an odd multiple of pi are skipped:
/// there the coordinate map degenerates and the discrete weights carry no
/// information at any affordable resolution. Overshoot rows past the
/// requested horizon (the march finishes whole columns) are skipped too.
pub fn pq_envelope(grid: &crate::charwave::CharGrid) -> (f64, f64) {
    const CUSP_CLEARANCE: f64 = 0.3;
    let clear = |a: f64| {
        let m = a.rem_euclid(2.0 * std::f64::consts::PI);
        (m - std::f64::consts::PI).abs() >= CUSP_CLEARANCE
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for col in &grid.columns {
        for node in &col.nodes {
            if node.t > grid.t_end || !(clear(node.w) && clear(node.z)) {
                continue;
            }
            let m = node.p.max(node.q);
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    (lo, hi)
}

/// The chained solution on the full horizon.
#[derive(Clone, Debug)]
pub struct SolutionBundle {
    pub problem: crate::model::ProblemSpec,
    pub fields: FieldSet,
    pub windows: Vec<WindowReport>,
}

/// Reconciliation report for `J = u_x + theta_t`.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub l2: f64,
    pub sup: f64,
}

/// One fixed-point attempt on a window of `rows` steps of size `dt`
/// (window-local time). Returns the converged window fields, the iteration
/// count, and the final residual.
fn attempt_window(
    problem: &ValidatedProblem,
    seam: &SeamState,
    config: &FixedPointConfig,
    dt: f64,
    rows: usize,
) -> Result<(FieldSet, usize, f64, (f64, f64, f64, f64), (f64, f64)), SolverError> {
    let model = &problem.spec.material;
    let u_bc = problem.spec.boundary.u_side;
    let nx = seam.xs.len();
    let t_win = rows as f64 * dt;
    let wgrid = PhysGrid::new(nx, rows + 1, 0.0, t_win);

    let curve = build_curve_from_samples(
        &seam.xs,
        &seam.theta,
        &seam.theta_t,
        &seam.theta_x,
        model,
        config.curve_samples,
    )?;

    // Seed: constant-in-time extension of the seam stress.
    let mut j = Field::zeros(wgrid);
    for n in 0..wgrid.nt {
        j.row_mut(n).copy_from_slice(&seam.j);
    }
    let seed = j.clone();

    let mut prev_res = f64::INFINITY;
    let mut growths = 0usize;
    for it in 1..=config.max_iter {
        let __t0 = std::time::Instant::now();
        let grid = march(&curve, model, &problem.theta_bc, Some(&j), t_win, config.char_n)?;
        let __t1 = std::time::Instant::now();
        let mut fields = invert_map(&grid, &curve, model, wgrid)?;
        let __t2 = std::time::Instant::now();
        fields.j = j;
        fields.u.row_mut(0).copy_from_slice(&seam.u);
        let j_new = duhamel_j(&fields, model, u_bc, &config.duhamel)?;
        eprintln!("TRACE march={:.3}s invert={:.3}s duhamel={:.3}s", (__t1-__t0).as_secs_f64(), (__t2-__t1).as_secs_f64(), __t2.elapsed().as_secs_f64());
        let res = rms_diff(&fields.j.data, &j_new.data);
        j = j_new;

        if res < config.tol {
            // Consistency pass with the converged stress, then the velocity.
            let grid = march(&curve, model, &problem.theta_bc, Some(&j), t_win, config.char_n)?;
            let mut fields = invert_map(&grid, &curve, model, wgrid)?;
            fields.j = j;
            fields.u.row_mut(0).copy_from_slice(&seam.u);
            fields.u = reconstruct_u(&fields, model, u_bc, &config.duhamel)?;
            return Ok((fields, it, res, pq_bounds(&grid), pq_envelope(&grid)));
        }
        if let Some(k) = config.k_guard {
            if sup_diff(&j.data, &seed.data) > k {
                return Err(SolverError::FixedPointDiverged {
                    t0: 0.0,
                    t1: t_win,
                    iterations: it,
                });
            }
        }
        if res > prev_res {
            growths += 1;
            if growths >= 3 {
                return Err(SolverError::FixedPointDiverged {
                    t0: 0.0,
                    t1: t_win,
                    iterations: it,
                });
            }
        } else {
            growths = 0;
        }
        prev_res = res;
    }
    Err(SolverError::FixedPointDiverged {
        t0: 0.0,
        t1: t_win,
        iterations: config.max_iter,
    })
}

/// Run the window fixed point starting from `seam`, halving the window on
/// non-convergence. `max_rows` bounds the window in steps of size `dt`.
pub fn picard_window(
    problem: &ValidatedProblem,
    seam: &SeamState,
    config: &FixedPointConfig,
    dt: f64,
    max_rows: usize,
    seam_time: f64,
) -> Result<(FieldSet, WindowReport), SolverError> {
    config.check()?;
    let mut rows = max_rows.max(1);
    for halving in 0..=config.max_halvings {
        match attempt_window(problem, seam, config, dt, rows) {
            Ok((fields, iterations, residual, (min_p, max_p, min_q, max_q), (env_min, env_max))) => {
                return Ok((
                    fields,
                    WindowReport {
                        t0: seam_time,
                        t1: seam_time + rows as f64 * dt,
                        iterations,
                        halvings: halving,
                        residual,
                        min_p,
                        max_p,
                        min_q,
                        max_q,
                        env_min,
                        env_max,
                    },
                ));
            }
            Err(SolverError::FixedPointDiverged { .. }) if rows > 1 => {
                rows /= 2;
            }
            Err(SolverError::FixedPointDiverged { .. }) => {
                return Err(SolverError::WindowCollapsed(seam_time));
            }
            Err(e) => return Err(e.at_time("coupling", seam_time)),
        }
    }
    Err(SolverError::WindowCollapsed(seam_time))
}

/// Chain fixed-point windows until the output grid is filled.
pub fn extend_to_horizon(
    problem: &ValidatedProblem,
    config: &FixedPointConfig,
    phys: PhysGrid,
) -> Result<SolutionBundle, SolverError> {
    config.check()?;
    let dt = phys.dt();
    let nx = phys.nx;
    let mut fields = FieldSet::zeros(phys);
    let mut windows = Vec::new();

    let mut seam = SeamState::initial(problem, nx);
    let mut filled = 0usize; // last written global row

    // Write the initial slice.
    fields.theta.row_mut(0).copy_from_slice(&seam.theta);
    fields.theta_t.row_mut(0).copy_from_slice(&seam.theta_t);
    fields.theta_x.row_mut(0).copy_from_slice(&seam.theta_x);
    fields.u.row_mut(0).copy_from_slice(&seam.u);
    fields.j.row_mut(0).copy_from_slice(&seam.j);

    let window_rows = ((config.delta / dt).round() as usize).max(1);
    while filled + 1 < phys.nt {
        let want = window_rows.min(phys.nt - 1 - filled);
        let seam_time = phys.t(filled);
        let (wfields, report) = picard_window(problem, &seam, config, dt, want, seam_time)?;
        let got = wfields.grid.nt - 1;
        for n in 1..=got {
            let dst = filled + n;
            fields.theta.row_mut(dst).copy_from_slice(wfields.theta.row(n));
            fields
                .theta_t
                .row_mut(dst)
                .copy_from_slice(wfields.theta_t.row(n));
            fields
                .theta_x
                .row_mut(dst)
                .copy_from_slice(wfields.theta_x.row(n));
            fields.u.row_mut(dst).copy_from_slice(wfields.u.row(n));
            fields.j.row_mut(dst).copy_from_slice(wfields.j.row(n));
            for i in 0..nx {
                fields.cusp[dst * nx + i] = wfields.cusp[n * nx + i];
            }
        }
        seam = SeamState::from_row(&wfields, got);
        filled += got;
        windows.push(report);
    }

    Ok(SolutionBundle {
        problem: problem.spec.clone(),
        fields,
        windows,
    })
}

/// Check the closure `J = u_x + theta_t` on the bundle grid, with `u_x`
/// from centered differences (independent of the kernel pipeline).
pub fn reconcile_j(bundle: &SolutionBundle) -> ResidualReport {
    let g = bundle.fields.grid;
    let dx = g.dx();
    let mut sup = 0.0f64;
    let mut sq = 0.0f64;
    for n in 0..g.nt {
        let u = bundle.fields.u.row(n);
        for i in 0..g.nx {
            let ux = if i == 0 {
                (-1.5 * u[0] + 2.0 * u[1] - 0.5 * u[2]) / dx
            } else if i == g.nx - 1 {
                (1.5 * u[i] - 2.0 * u[i - 1] + 0.5 * u[i - 2]) / dx
            } else {
                (u[i + 1] - u[i - 1]) / (2.0 * dx)
            };
            let r = bundle.fields.j.at(i, n) - ux - bundle.fields.theta_t.at(i, n);
            sup = sup.max(r.abs());
            let wx = if i == 0 || i == g.nx - 1 { 0.5 } else { 1.0 };
            let wt = if n == 0 || n == g.nt - 1 { 0.5 } else { 1.0 };
            let boundary_weight = wx * wt;
            sq += boundary_weight * r * r;
        }
    }
    ResidualReport {
        l2: (sq * dx * g.dt()).sqrt(),
        sup,
    }
}
