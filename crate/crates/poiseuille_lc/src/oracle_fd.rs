//! Independent finite-difference reference solver for the coupled system in
//! smooth regimes.
//!
//! The director equation is advanced by leapfrog with the Rayleigh damping
//! term time-centered, the velocity by Crank-Nicolson with the `(theta_t)_x`
//! source at the half step. This deliberately shares nothing with the
//! characteristic + kernel pipeline, so agreement between the two is
//! evidence rather than tautology. The scheme refuses to run past gradient
//! blowup instead of regularizing: its validity domain is classical
//! solutions only.

use crate::error::SolverError;
use crate::grid::{FieldSet, PhysGrid};
use crate::model::{MaterialModel, ThetaBcClass, ValidatedProblem, VelocityBc};

/// Run controls for the reference solver.
#[derive(Clone, Copy, Debug)]
pub struct FdConfig {
    /// Space nodes (endpoints included).
    pub nx: usize,
    /// Output time levels (endpoints included).
    pub nt_out: usize,
    /// CFL number as a fraction of the stability margin `0.9 dx / C_U`.
    pub cfl: f64,
    /// Freeze `u = 0` and drop the `u_x` forcing (damped-wave harness flag).
    pub wave_only: bool,
}

impl FdConfig {
    pub fn new(nx: usize, nt_out: usize) -> Self {
        FdConfig {
            nx,
            nt_out,
            cfl: 0.5,
            wave_only: false,
        }
    }
}

/// One time level of the marching state.
#[derive(Clone, Debug)]
pub struct FdState {
    pub model: MaterialModel,
    pub u_bc: VelocityBc,
    pub theta_bc: ThetaBcClass,
    pub dx: f64,
    pub dt: f64,
    pub t: f64,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    /// Previous level of theta (leapfrog memory).
    pub theta_prev: Vec<f64>,
    pub wave_only: bool,
}

const BLOWUP_SUP: f64 = 1e6;

fn half_speed(model: &MaterialModel, a: f64, b: f64) -> f64 {
    model.wave_speed(0.5 * (a + b)).0
}

impl FdState {
    /// `c (c theta_x)_x` with half-node wave speeds, plus ghost-node closure
    /// of the active right boundary condition.
    fn wave_operator(&self, theta: &[f64]) -> Vec<f64> {
        let n = theta.len();
        let m = &self.model;
        let dx2 = self.dx * self.dx;
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let c = m.wave_speed(theta[i]).0;
            let cr = half_speed(m, theta[i], theta[i + 1]);
            let cl = half_speed(m, theta[i - 1], theta[i]);
            out[i] =
                c * (cr * (theta[i + 1] - theta[i]) - cl * (theta[i] - theta[i - 1])) / dx2;
        }
        // Right wall: Robin theta_x(pi) = -iota theta(pi) via the ghost node
        // theta_g = theta[n-2] - 2 dx iota theta[n-1]; Dirichlet walls keep
        // their rows pinned instead.
        if let ThetaBcClass::DirichletRobin { iota } = self.theta_bc {
            let i = n - 1;
            let ghost = theta[n - 2] - 2.0 * self.dx * iota * theta[n - 1];
            let c = m.wave_speed(theta[i]).0;
            let cr = half_speed(m, theta[i], ghost);
            let cl = half_speed(m, theta[i - 1], theta[i]);
            out[i] = c * (cr * (ghost - theta[i]) - cl * (theta[i] - theta[i - 1])) / dx2;
        }
        out
    }

    fn u_x(&self) -> Vec<f64> {
        centered_gradient(&self.u, self.dx)
    }

    /// Advance one step of size `self.dt`.
    pub fn step(&mut self) -> Result<(), SolverError> {
        let n = self.theta.len();
        let (dt, dx) = (self.dt, self.dx);
        let limit = 0.9 * dx / self.model.c_upper();
        if dt > limit {
            return Err(SolverError::CFLViolation { dt, limit });
        }

        // Leapfrog theta update with time-centered damping:
        // (th+ - 2 th + th-)/dt^2 + (th+ - th-)/dt = L(th) - u_x.
        let lw = self.wave_operator(&self.theta);
        let ux = if self.wave_only {
            vec![0.0; n]
        } else {
            self.u_x()
        };
        let a = 1.0 / (dt * dt) + 1.0 / dt;
        let b = 1.0 / (dt * dt) - 1.0 / dt;
        let mut theta_new = vec![0.0; n];
        for i in 0..n {
            theta_new[i] =
                (lw[i] - ux[i] + 2.0 * self.theta[i] / (dt * dt) - b * self.theta_prev[i]) / a;
        }
        theta_new[0] = 0.0;
        if self.theta_bc == ThetaBcClass::DirichletDirichlet {
            theta_new[n - 1] = 0.0;
        }

        if !self.wave_only {
            // theta_t at the half step, centered in time.
            let theta_t_half: Vec<f64> = theta_new
                .iter()
                .zip(&self.theta)
                .map(|(&a, &b)| (a - b) / dt)
                .collect();
            let source = centered_gradient(&theta_t_half, dx);
            self.u = crank_nicolson_u(&self.u, &source, &theta_t_half, self.u_bc, dx, dt);
        }

        self.theta_prev = std::mem::replace(&mut self.theta, theta_new);
        self.t += dt;

        let sup = self
            .theta
            .iter()
            .chain(&self.u)
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        if !(sup < BLOWUP_SUP) {
            return Err(SolverError::BlowupDetected(self.t));
        }
        Ok(())
    }

    pub fn theta_t(&self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.theta_prev)
            .map(|(&a, &b)| (a - b) / self.dt)
            .collect()
    }
}

/// Centered interior gradient with second-order one-sided ends.
pub fn centered_gradient(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    out
}

/// Thomas algorithm for a tridiagonal system (diagonals `a` sub, `b` main,
/// `c` super).
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Crank-Nicolson step of `u_t = u_xx + source`, with either pinned walls or
/// the stress-free flux `u_x = -theta_t` at the walls.
fn crank_nicolson_u(
    u: &[f64],
    source: &[f64],
    theta_t_half: &[f64],
    u_bc: VelocityBc,
    dx: f64,
    dt: f64,
) -> Vec<f64> {
    let n = u.len();
    let r = dt / (2.0 * dx * dx);
    let mut sub = vec![-r; n];
    let mut main = vec![1.0 + 2.0 * r; n];
    let mut sup = vec![-r; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        rhs[i] = u[i] + r * (u[i + 1] - 2.0 * u[i] + u[i - 1]) + dt * source[i];
    }
    match u_bc {
        VelocityBc::Nonslip => {
            main[0] = 1.0;
            sup[0] = 0.0;
            rhs[0] = 0.0;
            main[n - 1] = 1.0;
            sub[n - 1] = 0.0;
            rhs[n - 1] = 0.0;
        }
        VelocityBc::StressFree => {
            // Ghost elimination for u_x(0) = g0, u_x(pi) = g1 with
            // g = -theta_t at the wall (J = 0).
            let g0 = -theta_t_half[0];
            let g1 = -theta_t_half[n - 1];
            main[0] = 1.0 + 2.0 * r;
            sup[0] = -2.0 * r;
            rhs[0] = u[0]
                + 2.0 * r * (u[1] - u[0] - dx * g0)
                + dt * source[0]
                - 2.0 * r * dx * g0;
            main[n - 1] = 1.0 + 2.0 * r;
            sub[n - 1] = -2.0 * r;
            rhs[n - 1] = u[n - 1]
                + 2.0 * r * (u[n - 2] - u[n - 1] + dx * g1)
                + dt * source[n - 1]
                + 2.0 * r * dx * g1;
        }
    }
    thomas(&sub, &main, &sup, &rhs)
}

/// March the problem to `t_end` and tabulate the fields at `nt_out` output
/// levels.
pub fn run(
    problem: &ValidatedProblem,
    t_end: f64,
    config: &FdConfig,
) -> Result<FieldSet, SolverError> {
    let model = problem.spec.material;
    let ini = &problem.spec.initial;
    let grid = PhysGrid::new(config.nx, config.nt_out, 0.0, t_end);
    let dx = grid.dx();

    let theta0: Vec<f64> = grid.xs().iter().map(|&x| ini.theta0.eval(x)).collect();
    let theta1: Vec<f64> = grid.xs().iter().map(|&x| ini.theta1.eval(x)).collect();
    let u0: Vec<f64> = grid.xs().iter().map(|&x| ini.u0.eval(x)).collect();

    let dt_max = config.cfl * 0.9 * dx / model.c_upper();
    let spacing = grid.dt();
    let substeps = if spacing > 0.0 {
        (spacing / dt_max).ceil() as usize
    } else {
        0
    }
    .max(1);
    let dt = if spacing > 0.0 {
        spacing / substeps as f64
    } else {
        dt_max
    };

    let mut state = FdState {
        model,
        u_bc: problem.spec.boundary.u_side,
        theta_bc: problem.theta_bc,
        dx,
        dt,
        t: 0.0,
        u: if config.wave_only {
            vec![0.0; config.nx]
        } else {
            u0
        },
        theta: theta0.clone(),
        theta_prev: Vec::new(),
        wave_only: config.wave_only,
    };

    // Second-order start: theta^{-1} = theta0 - dt theta1 + dt^2/2 theta_tt(0)
    // with theta_tt(0) = c(c theta0_x)_x - u0_x - 2 theta1.
    let lw0 = state.wave_operator(&theta0);
    let ux0 = if config.wave_only {
        vec![0.0; config.nx]
    } else {
        state.u_x()
    };
    state.theta_prev = (0..config.nx)
        .map(|i| {
            let acc = lw0[i] - ux0[i] - 2.0 * theta1[i];
            theta0[i] - dt * theta1[i] + 0.5 * dt * dt * acc
        })
        .collect();

    let mut out = FieldSet::zeros(grid);
    let store = |out: &mut FieldSet, level: usize, state: &FdState, theta_t: &[f64]| {
        let theta_x = centered_gradient(&state.theta, state.dx);
        let ux = centered_gradient(&state.u, state.dx);
        for i in 0..state.theta.len() {
            out.theta.set(i, level, state.theta[i]);
            out.theta_t.set(i, level, theta_t[i]);
            out.theta_x.set(i, level, theta_x[i]);
            out.u.set(i, level, state.u[i]);
            out.j.set(i, level, ux[i] + theta_t[i]);
        }
    };
    store(&mut out, 0, &state, &theta1);

    for level in 1..config.nt_out {
        for _ in 0..substeps {
            state
                .step()
                .map_err(|e| e.at_time("oracle_fd", state.t))?;
        }
        let theta_t = state.theta_t();
        store(&mut out, level, &state, &theta_t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundarySpec, InitialData, Profile, ProblemSpec, SineTerm};
    use crate::util::sup_diff;
    use std::f64::consts::PI;

    fn problem(
        u_bc: VelocityBc,
        iota: f64,
        u0: Profile,
        theta0: Profile,
        theta1: Profile,
    ) -> ValidatedProblem {
        ProblemSpec {
            material: crate::model::MaterialModel::new(1.0, 1.0).unwrap(),
            boundary: BoundarySpec::dirichlet_robin(u_bc, iota),
            initial: InitialData {
                u0,
                theta0,
                theta1,
                alpha: 0.2,
            },
        }
        .validate()
        .expect("valid problem")
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = problem(
            VelocityBc::Nonslip,
            1.0,
            Profile::Zero,
            Profile::Zero,
            Profile::Zero,
        );
        let out = run(&p, 1.0, &FdConfig::new(65, 5)).unwrap();
        assert!(out.theta.data.iter().all(|&v| v == 0.0));
        assert!(out.u.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modal_damped_wave() {
        // theta0 = sin(x/2), theta1 = 0, c = 1, Neumann right wall, wave only:
        // the single mode sin(x/2) evolves by T'' + 2T' + T/4 = 0, so
        // theta(pi, 1) = A e^{s1} + B e^{s2} with s = -1 +- sqrt(3)/2.
        let p = problem(
            VelocityBc::Nonslip,
            0.0,
            Profile::Zero,
            Profile::SineSeries {
                terms: vec![SineTerm {
                    amp: 1.0,
                    freq: 0.5,
                    phase: 0.0,
                }],
            },
            Profile::Zero,
        );
        let mut config = FdConfig::new(1025, 3);
        config.wave_only = true;
        let out = run(&p, 1.0, &config).unwrap();

        let s1 = -1.0 + 3.0f64.sqrt() / 2.0;
        let s2 = -1.0 - 3.0f64.sqrt() / 2.0;
        let a = -s2 / 3.0f64.sqrt();
        let b = s1 / 3.0f64.sqrt();
        let exact = a * s1.exp() + b * s2.exp();
        assert!((exact - 0.93030).abs() < 1e-4, "modal constant: {exact}");

        let got = out.theta.at(out.grid.nx - 1, 2);
        assert!((got - exact).abs() < 2e-3, "theta(pi,1) = {got} vs {exact}");
    }

    fn smooth_problem() -> ValidatedProblem {
        // Neumann right wall with theta0 = 0.1 sin^3(x/2) and
        // u0 = 0.1 sin^3 x = (0.3 sin x - 0.1 sin 3x)/4: u0' and u0'' vanish
        // at both walls, so the corners are compatible through second order
        // (in particular theta_tt(0,0) = -u0'(0) = 0 matches the pinned
        // wall) and the scheme can show its full interior order.
        problem(
            VelocityBc::Nonslip,
            0.0,
            Profile::SineSeries {
                terms: vec![
                    SineTerm {
                        amp: 0.075,
                        freq: 1.0,
                        phase: 0.0,
                    },
                    SineTerm {
                        amp: -0.025,
                        freq: 3.0,
                        phase: 0.0,
                    },
                ],
            },
            Profile::SineSeries {
                terms: vec![
                    SineTerm {
                        amp: 0.075,
                        freq: 0.5,
                        phase: 0.0,
                    },
                    SineTerm {
                        amp: -0.025,
                        freq: 1.5,
                        phase: 0.0,
                    },
                ],
            },
            Profile::Zero,
        )
    }

    #[test]
    fn smooth_energy_non_increasing() {
        let p = smooth_problem();
        let out = run(&p, 0.5, &FdConfig::new(257, 21)).unwrap();
        let m = p.spec.material;
        let dx = out.grid.dx();
        let energy: Vec<f64> = (0..out.grid.nt)
            .map(|n| {
                let vals: Vec<f64> = (0..out.grid.nx)
                    .map(|i| {
                        let (c, _) = m.wave_speed(out.theta.at(i, n));
                        let tt = out.theta_t.at(i, n);
                        let tx = out.theta_x.at(i, n);
                        let u = out.u.at(i, n);
                        0.5 * (tt * tt + c * c * tx * tx + u * u)
                    })
                    .collect();
                crate::util::simpson(&vals, dx)
            })
            .collect();
        for w in energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "energy increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn refinement_study_second_order() {
        let p = smooth_problem();
        let t_end = 0.5;
        let runs: Vec<FieldSet> = [129usize, 257, 513]
            .iter()
            .map(|&nx| run(&p, t_end, &FdConfig::new(nx, 2)).unwrap())
            .collect();
        // Compare theta at the shared (coarse) nodes at the final time.
        let diff = |coarse: &FieldSet, fine: &FieldSet| -> f64 {
            let n = coarse.grid.nt - 1;
            let coarse_row = coarse.theta.row(n);
            let fine_row: Vec<f64> = (0..coarse.grid.nx)
                .map(|i| fine.theta.at(2 * i, n))
                .collect();
            sup_diff(coarse_row, &fine_row)
        };
        let d1 = diff(&runs[0], &runs[1]);
        let d2 = diff(&runs[1], &runs[2]);
        assert!(d2 > 0.0 && d1 / d2 >= 3.0, "d1={d1}, d2={d2}");
    }

    #[test]
    fn cfl_violation_is_reported() {
        let p = smooth_problem();
        let mut state = FdState {
            model: p.spec.material,
            u_bc: VelocityBc::Nonslip,
            theta_bc: p.theta_bc,
            dx: PI / 64.0,
            dt: 1.0,
            t: 0.0,
            u: vec![0.0; 65],
            theta: vec![0.0; 65],
            theta_prev: vec![0.0; 65],
            wave_only: true,
        };
        assert!(matches!(
            state.step(),
            Err(SolverError::CFLViolation { .. })
        ));
    }

    #[test]
    fn stress_free_walls_hold_zero_stress() {
        // u0 = 0.05 (1 - cos 2x) = 0.1 sin^2 x, so u0'(0) = u0'(pi) = 0 and
        // the walls start stress-free.
        let p = problem(
            VelocityBc::StressFree,
            1.0,
            Profile::SineSeries {
                terms: vec![
                    SineTerm {
                        amp: 0.05,
                        freq: 0.0,
                        phase: PI / 2.0,
                    },
                    SineTerm {
                        amp: -0.05,
                        freq: 2.0,
                        phase: PI / 2.0,
                    },
                ],
            },
            Profile::SineSeries {
                terms: vec![SineTerm {
                    amp: 0.1,
                    freq: 1.0,
                    phase: 0.0,
                }],
            },
            Profile::Zero,
        );
        let out = run(&p, 0.5, &FdConfig::new(257, 11)).unwrap();
        for n in 1..out.grid.nt {
            assert!(out.j.at(0, n).abs() < 5e-2, "J(0) = {}", out.j.at(0, n));
            assert!(
                out.j.at(out.grid.nx - 1, n).abs() < 5e-2,
                "J(pi) = {}",
                out.j.at(out.grid.nx - 1, n)
            );
        }
    }
}
