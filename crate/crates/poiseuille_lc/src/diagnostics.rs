//! Checkable consequences of the existence theory: energies and the
//! dissipation inequality, weak-form residuals against a family of test
//! functions, Hoelder quotients of the director angle, and internal
//! consistency metrics of the characteristic grid.

use crate::charwave::march::CharGrid;
use crate::coupling::SolutionBundle;
use crate::grid::Field;
use crate::model::MaterialModel;
use crate::util::simpson;

/// Energy and dissipation history of a run.
#[derive(Clone, Debug)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    /// Interior energy `(1/2) int (theta_t^2 + c^2 theta_x^2 + u^2)`.
    pub e: Vec<f64>,
    /// Boundary potential at `x = 0`.
    pub b0: Vec<f64>,
    /// Boundary potential at `x = pi`.
    pub bpi: Vec<f64>,
    /// Accumulated dissipation `int_0^t int (J^2 + theta_t^2)`.
    pub d: Vec<f64>,
    /// `E_total(t) + D(t) - E_total(0)`; zero for exact smooth solutions,
    /// nonpositive up to slack for weak ones.
    pub residual: Vec<f64>,
    /// Times where the residual exceeds the slack bound.
    pub flagged: Vec<f64>,
    pub slack: f64,
}

use crate::util::interpolate_masked;

fn row_energy(bundle: &SolutionBundle, n: usize) -> (f64, f64, f64) {
    let g = bundle.fields.grid;
    let model = &bundle.problem.material;
    let mask: Vec<bool> = (0..g.nx).map(|i| bundle.fields.is_cusp(i, n)).collect();
    let mut tts: Vec<f64> = (0..g.nx).map(|i| bundle.fields.theta_t.at(i, n)).collect();
    let mut txs: Vec<f64> = (0..g.nx).map(|i| bundle.fields.theta_x.at(i, n)).collect();
    interpolate_masked(&mut tts, &mask);
    interpolate_masked(&mut txs, &mask);
    let mut density = Vec::with_capacity(g.nx);
    for i in 0..g.nx {
        let tt = tts[i];
        let tx = txs[i];
        let u = bundle.fields.u.at(i, n);
        let (c, _) = model.wave_speed(bundle.fields.theta.at(i, n));
        density.push(0.5 * (tt * tt + c * c * tx * tx + u * u));
    }
    let e = simpson(&density, g.dx());
    let (i1, i2) = bundle.problem.boundary.theta_left;
    let (i3, i4) = bundle.problem.boundary.theta_right;
    let b0 = if i2 != 0.0 {
        model.boundary_energy(i1 / i2, bundle.fields.theta.at(0, n))
    } else {
        0.0
    };
    let bpi = if i4 != 0.0 {
        model.boundary_energy(i3 / i4, bundle.fields.theta.at(g.nx - 1, n))
    } else {
        0.0
    };
    (e, b0, bpi)
}

/// Interior and boundary energies at the output time nearest to `t`.
pub fn energy(bundle: &SolutionBundle, t: f64) -> (f64, f64, f64) {
    let g = bundle.fields.grid;
    let n = if g.dt() > 0.0 {
        (((t - g.t0) / g.dt()).round() as i64).clamp(0, g.nt as i64 - 1) as usize
    } else {
        0
    };
    row_energy(bundle, n)
}

/// Evaluate the full energy/dissipation history and check the dissipation
/// inequality up to `slack` (defaulting to `max(1e-6 E(0), 1e-8)` when
/// `None`).
pub fn dissipation_report(bundle: &SolutionBundle, slack: Option<f64>) -> EnergyTrace {
    let g = bundle.fields.grid;
    let nt = g.nt;
    let mut times = Vec::with_capacity(nt);
    let mut e = Vec::with_capacity(nt);
    let mut b0 = Vec::with_capacity(nt);
    let mut bpi = Vec::with_capacity(nt);
    let mut rate = Vec::with_capacity(nt);
    for n in 0..nt {
        times.push(g.t(n));
        let (en, b0n, bpin) = row_energy(bundle, n);
        e.push(en);
        b0.push(b0n);
        bpi.push(bpin);
        let mask: Vec<bool> = (0..g.nx).map(|i| bundle.fields.is_cusp(i, n)).collect();
        let mut tts: Vec<f64> = (0..g.nx).map(|i| bundle.fields.theta_t.at(i, n)).collect();
        let mut js: Vec<f64> = (0..g.nx).map(|i| bundle.fields.j.at(i, n)).collect();
        interpolate_masked(&mut tts, &mask);
        interpolate_masked(&mut js, &mask);
        let mut density = Vec::with_capacity(g.nx);
        for i in 0..g.nx {
            density.push(js[i] * js[i] + tts[i] * tts[i]);
        }
        rate.push(simpson(&density, g.dx()));
    }
    let d = crate::util::cumtrapz(&rate, g.dt());
    let e_total0 = e[0] + b0[0] + bpi[0];
    let slack = slack.unwrap_or_else(|| (1e-6 * e_total0).max(1e-8));
    let residual: Vec<f64> = (0..nt)
        .map(|n| e[n] + b0[n] + bpi[n] + d[n] - e_total0)
        .collect();
    let flagged = (0..nt)
        .filter(|&n| residual[n] > slack)
        .map(|n| times[n])
        .collect();
    EnergyTrace {
        times,
        e,
        b0,
        bpi,
        d,
        residual,
        flagged,
        slack,
    }
}

/// `C^infinity` bump supported on `(a, b)`, vanishing with all derivatives
/// at the endpoints; returns `(value, d/dt)`.
fn bump(t: f64, a: f64, b: f64) -> (f64, f64) {
    let s = (t - a) / (b - a);
    if s <= 0.0 || s >= 1.0 {
        return (0.0, 0.0);
    }
    let g = s * (1.0 - s);
    let v = (-1.0 / g).exp();
    let dv = v * (1.0 - 2.0 * s) / (g * g) / (b - a);
    (v, dv)
}

/// Max absolute value of the two weak-form functionals over an `m x m`
/// family of test functions `sin(kx)` times time bumps on staggered
/// windows. Both vanish for exact weak solutions.
pub fn weak_residual(bundle: &SolutionBundle, m: usize) -> (f64, f64) {
    let g = bundle.fields.grid;
    let model = &bundle.problem.material;
    let (dx, dt) = (g.dx(), g.dt());
    let t_total = g.t(g.nt - 1) - g.t0;

    let mut r_u = 0.0f64;
    let mut r_theta = 0.0f64;
    for k in 1..=m {
        let kk = k as f64;
        for l in 1..=m {
            // Bump window l of m, overlapping its neighbours.
            let a = g.t0 + t_total * (l - 1) as f64 / (m + 1) as f64;
            let b = a + 2.0 * t_total / (m + 1) as f64;
            let mut fu = 0.0;
            let mut ftheta = 0.0;
            for n in 0..g.nt {
                let (bv, bdv) = bump(g.t(n), a, b);
                if bv == 0.0 && bdv == 0.0 {
                    continue;
                }
                let wt = if n == 0 || n == g.nt - 1 { 0.5 } else { 1.0 };
                let mut row_u = 0.0;
                let mut row_theta = 0.0;
                for i in 0..g.nx {
                    let x = g.x(i);
                    let phi = (kk * x).sin();
                    let phix = kk * (kk * x).cos();
                    let u = bundle.fields.u.at(i, n);
                    let j = bundle.fields.j.at(i, n);
                    let tt = bundle.fields.theta_t.at(i, n);
                    let tx = bundle.fields.theta_x.at(i, n);
                    let (c, cp) = model.wave_speed(bundle.fields.theta.at(i, n));
                    let wx = if i == 0 || i == g.nx - 1 { 0.5 } else { 1.0 };
                    // u-equation: u psi_t - J psi_x (boundary term vanishes
                    // since psi is zero at the walls).
                    row_u += wx * (u * phi * bdv - j * phix * bv);
                    // theta-equation: theta_t phi_t - (c phi)_x c theta_x
                    //   - 2 theta_t phi + u phi_x (u_x moved by parts).
                    let cphi_x = cp * tx * phi * bv + c * phix * bv;
                    row_theta += wx
                        * (tt * phi * bdv - cphi_x * c * tx - 2.0 * tt * phi * bv
                            + u * phix * bv);
                }
                fu += wt * row_u * dx * dt;
                ftheta += wt * row_theta * dx * dt;
            }
            r_u = r_u.max(fu.abs());
            r_theta = r_theta.max(ftheta.abs());
        }
    }
    (r_u, r_theta)
}

/// Largest Hoelder-1/2 quotient of the director angle on the output grid.
///
/// Samples flagged as cusp-adjacent carry one-sided values of no pointwise
/// accuracy; they are bridged by interpolation from resolved neighbours
/// before taking quotients (the angle itself is continuous across a cusp,
/// so bridging a flagged cell changes it by the resolved modulus only).
pub fn theta_holder(bundle: &SolutionBundle) -> f64 {
    let g = bundle.fields.grid;
    let mut theta = bundle.fields.theta.clone();
    for n in 0..g.nt {
        let mask: Vec<bool> = (0..g.nx).map(|i| bundle.fields.cusp[n * g.nx + i]).collect();
        crate::util::interpolate_masked(theta.row_mut(n), &mask);
    }
    holder_quotient(&theta, 0.5)
}

/// Largest Hoelder quotient `|df| / |dx or dt|^exponent` over node pairs at
/// separations of at least two grid cells (same row or same column).
pub fn holder_quotient(field: &Field, exponent: f64) -> f64 {
    let g = field.grid;
    let mut worst = 0.0f64;
    // Pairs within a time slice.
    for n in 0..g.nt {
        let row = field.row(n);
        for i in 0..g.nx {
            for sep in 2..g.nx - i {
                let q = (row[i + sep] - row[i]).abs() / (sep as f64 * g.dx()).powf(exponent);
                worst = worst.max(q);
            }
        }
    }
    // Pairs along time at fixed x.
    for i in 0..g.nx {
        for n in 0..g.nt {
            for sep in 2..g.nt - n {
                let q = (field.at(i, n + sep) - field.at(i, n)).abs()
                    / (sep as f64 * g.dt()).powf(exponent);
                worst = worst.max(q);
            }
        }
    }
    worst
}

/// Internal consistency metrics of a marched characteristic grid.
#[derive(Clone, Copy, Debug)]
pub struct CharConsistency {
    /// Max centered-difference mismatch of `x_{XY} - x_{YX}`.
    pub mismatch_x: f64,
    /// Max centered-difference mismatch of `t_{XY} - t_{YX}`.
    pub mismatch_t: f64,
    pub min_p: f64,
    pub max_p: f64,
    pub min_q: f64,
    pub max_q: f64,
    /// Nodes where the area element `pq cos^2(w/2) cos^2(z/2)` degenerates
    /// (cusp set), reported rather than treated as errors.
    pub degenerate_nodes: usize,
}

/// Cross-derivative compatibility and Jacobian positivity of the march.
pub fn char_consistency(grid: &CharGrid, model: &MaterialModel) -> CharConsistency {
    let mut out = CharConsistency {
        mismatch_x: 0.0,
        mismatch_t: 0.0,
        min_p: f64::INFINITY,
        max_p: f64::NEG_INFINITY,
        min_q: f64::INFINITY,
        max_q: f64::NEG_INFINITY,
        degenerate_nodes: 0,
    };
    let rate = |i: usize, j: i64| -> Option<(f64, f64, f64, f64)> {
        let nd = grid.node(i, j)?;
        let (c, _) = model.wave_speed(nd.theta);
        let fx = (1.0 + nd.w.cos()) * nd.p / 4.0;
        let fy = -(1.0 + nd.z.cos()) * nd.q / 4.0;
        Some((fx, fy, fx / c, -fy / c))
    };
    for (i, col) in grid.columns.iter().enumerate() {
        for j in col.jmin..=col.jmax() {
            let node = col.node(j).unwrap();
            out.min_p = out.min_p.min(node.p);
            out.max_p = out.max_p.max(node.p);
            out.min_q = out.min_q.min(node.q);
            out.max_q = out.max_q.max(node.q);
            let area = node.p
                * node.q
                * (0.5 * node.w).cos().powi(2)
                * (0.5 * node.z).cos().powi(2);
            if area < 1e-12 {
                out.degenerate_nodes += 1;
            }
            if i == 0 {
                continue;
            }
            // Centered cross derivatives of the position map.
            if let (Some(n_up), Some(n_dn), Some(w_r), Some(w_l)) = (
                rate(i, j + 1),
                rate(i, j - 1),
                rate(i + 1, j),
                rate(i - 1, j),
            ) {
                let dxy = (n_up.0 - n_dn.0) / (2.0 * grid.h) - (w_r.1 - w_l.1) / (2.0 * grid.h);
                let dty = (n_up.2 - n_dn.2) / (2.0 * grid.h) - (w_r.3 - w_l.3) / (2.0 * grid.h);
                out.mismatch_x = out.mismatch_x.max(dxy.abs());
                out.mismatch_t = out.mismatch_t.max(dty.abs());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charwave::{build_initial_curve, march};
    use crate::coupling::{extend_to_horizon, FixedPointConfig};
    use crate::grid::{FieldSet, PhysGrid};
    use crate::heatkernel::DuhamelParams;
    use crate::model::{
        BoundarySpec, InitialData, ProblemSpec, Profile, SineTerm, ThetaBcClass, VelocityBc,
    };
    use std::f64::consts::PI;

    fn spec(theta0: Profile, theta1: Profile, u0: Profile, iota: f64) -> ProblemSpec {
        ProblemSpec {
            material: MaterialModel::new(1.0, 1.0).unwrap(),
            boundary: BoundarySpec::dirichlet_robin(VelocityBc::Nonslip, iota),
            initial: InitialData {
                u0,
                theta0,
                theta1,
                alpha: 0.2,
            },
        }
    }

    fn manual_bundle(spec: ProblemSpec, fields: FieldSet) -> SolutionBundle {
        SolutionBundle {
            problem: spec,
            fields,
            windows: Vec::new(),
        }
    }

    #[test]
    fn zero_bundle_is_inert() {
        let g = PhysGrid::new(33, 9, 0.0, 1.0);
        let bundle = manual_bundle(
            spec(Profile::Zero, Profile::Zero, Profile::Zero, 1.0),
            FieldSet::zeros(g),
        );
        let (e, b0, bpi) = energy(&bundle, 0.5);
        assert_eq!((e, b0, bpi), (0.0, 0.0, 0.0));
        let trace = dissipation_report(&bundle, None);
        assert!(trace.residual.iter().all(|&r| r == 0.0));
        assert!(trace.flagged.is_empty());
        let (ru, rt) = weak_residual(&bundle, 3);
        assert_eq!((ru, rt), (0.0, 0.0));
        assert_eq!(holder_quotient(&bundle.fields.theta, 0.5), 0.0);
    }

    #[test]
    fn energy_of_pure_angular_velocity() {
        // theta_t = a everywhere at t = 0: E = pi a^2 / 2.
        let g = PhysGrid::new(129, 3, 0.0, 0.1);
        let mut fields = FieldSet::zeros(g);
        let a = 0.7;
        for i in 0..g.nx {
            fields.theta_t.set(i, 0, a);
        }
        let bundle = manual_bundle(spec(Profile::Zero, Profile::Zero, Profile::Zero, 1.0), fields);
        let (e, b0, bpi) = energy(&bundle, 0.0);
        assert!((e - 0.5 * PI * a * a).abs() < 1e-10);
        assert_eq!((b0, bpi), (0.0, 0.0));
    }

    #[test]
    fn robin_boundary_potential_is_quadratic_for_unit_speed() {
        // K1 = K3 = 1, iota = 1, theta(pi) = b: B_pi = b^2 / 2.
        let g = PhysGrid::new(17, 2, 0.0, 0.1);
        let mut fields = FieldSet::zeros(g);
        let b = 0.4;
        fields.theta.set(g.nx - 1, 0, b);
        let bundle = manual_bundle(spec(Profile::Zero, Profile::Zero, Profile::Zero, 1.0), fields);
        let (_, b0, bpi) = energy(&bundle, 0.0);
        assert_eq!(b0, 0.0);
        assert!((bpi - 0.5 * b * b).abs() < 1e-12);
    }

    #[test]
    fn holder_quotient_of_linear_profile() {
        // theta = x: the quotient |dx| / |dx|^{1/2} = |dx|^{1/2} grows with
        // separation, so the maximum is sqrt(pi) across the whole interval.
        let g = PhysGrid::new(65, 2, 0.0, 0.1);
        let mut fields = FieldSet::zeros(g);
        for n in 0..g.nt {
            for i in 0..g.nx {
                fields.theta.set(i, n, g.x(i));
            }
        }
        let q = holder_quotient(&fields.theta, 0.5);
        assert!((q - PI.sqrt()).abs() < 1e-12, "quotient {q}");
    }

    fn smooth_bundle(nx: usize, nt: usize, char_n: usize, t1: f64) -> SolutionBundle {
        let p = spec(
            Profile::SineSeries {
                terms: vec![SineTerm {
                    amp: 0.1,
                    freq: 0.5,
                    phase: 0.0,
                }],
            },
            Profile::Zero,
            Profile::SineSeries {
                terms: vec![SineTerm {
                    amp: 0.1,
                    freq: 1.0,
                    phase: 0.0,
                }],
            },
            0.0,
        )
        .validate()
        .unwrap();
        let config = FixedPointConfig {
            char_n,
            curve_samples: 2049,
            duhamel: DuhamelParams {
                s_points: 16,
                ..Default::default()
            },
            ..Default::default()
        };
        extend_to_horizon(&p, &config, PhysGrid::new(nx, nt, 0.0, t1)).unwrap()
    }

    #[test]
    fn weak_residuals_shrink_under_refinement() {
        let coarse = smooth_bundle(33, 11, 192, 0.25);
        let fine = smooth_bundle(65, 21, 384, 0.25);
        let (ru0, rt0) = weak_residual(&coarse, 3);
        let (ru1, rt1) = weak_residual(&fine, 3);
        assert!(ru1 * 1.7 <= ru0, "u residuals {ru0} -> {ru1}");
        assert!(rt1 * 1.7 <= rt0, "theta residuals {rt0} -> {rt1}");
    }

    #[test]
    fn coupled_run_dissipates_within_slack() {
        let bundle = smooth_bundle(65, 21, 384, 0.5);
        let trace = dissipation_report(&bundle, Some(1e-4));
        assert!(trace.flagged.is_empty(), "residuals {:?}", trace.residual);
        // Energy itself decays.
        assert!(trace.e.last().unwrap() < &trace.e[0]);
    }

    #[test]
    fn char_grid_consistency_for_zero_and_smooth_data() {
        let m = MaterialModel::new(1.0, 1.0).unwrap();
        let zero = InitialData {
            u0: Profile::Zero,
            theta0: Profile::Zero,
            theta1: Profile::Zero,
            alpha: 0.2,
        };
        let curve = build_initial_curve(&zero, &m, 2049).unwrap();
        let bc = ThetaBcClass::DirichletRobin { iota: 0.0 };
        let grid = march(&curve, &m, &bc, None, 1.0, 64).unwrap();
        let rep = char_consistency(&grid, &m);
        assert!(rep.mismatch_x < 1e-10 && rep.mismatch_t < 1e-10);
        assert_eq!((rep.min_p, rep.max_p), (1.0, 1.0));
        assert_eq!(rep.degenerate_nodes, 0);

        // Smooth data: node values carry O(h^2) error, so the centered
        // mismatch over a 2h stencil shrinks at least at first order.
        let data = InitialData {
            u0: Profile::Zero,
            theta0: Profile::SineSeries {
                terms: vec![SineTerm {
                    amp: 0.6,
                    freq: 0.5,
                    phase: 0.0,
                }],
            },
            theta1: Profile::Zero,
            alpha: 0.2,
        };
        let curve = build_initial_curve(&data, &m, 8193).unwrap();
        let mm = |n: usize| {
            let grid = march(&curve, &m, &bc, None, 0.8, n).unwrap();
            let rep = char_consistency(&grid, &m);
            rep.mismatch_x.max(rep.mismatch_t)
        };
        let (c0, c1) = (mm(128), mm(256));
        let order = (c0 / c1).log2();
        assert!(order >= 1.0, "observed order {order} ({c0} -> {c1})");
        assert!(c1 < 1e-5, "mismatch too large: {c1}");
    }
}
