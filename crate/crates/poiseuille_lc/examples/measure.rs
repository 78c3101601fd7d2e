// Scratch measurement harness for acceptance thresholds (not a deliverable).

use poiseuille_lc::diagnostics::{dissipation_report, theta_holder, weak_residual};
use poiseuille_lc::coupling::reconcile_j;
use poiseuille_lc::model::{
    BoundarySpec, InitialData, MaterialModel, ProblemSpec, Profile, SineTerm, VelocityBc,
};
use poiseuille_lc::oracle_fd;
use poiseuille_lc::runner::{solve, FixedPointSettings, GridConfig, Mode, RunConfig};
use std::f64::consts::PI;

fn sine(terms: &[(f64, f64)]) -> Profile {
    Profile::SineSeries {
        terms: terms
            .iter()
            .map(|&(amp, freq)| SineTerm { amp, freq, phase: 0.0 })
            .collect(),
    }
}

fn smooth_config(stress_free: bool, level: u32) -> RunConfig {
    let f = 1usize << level;
    let (u_side, u0, theta_right) = if stress_free {
        (
            VelocityBc::StressFree,
            Profile::SineSeries {
                terms: vec![
                    SineTerm { amp: 0.05, freq: 0.0, phase: PI / 2.0 },
                    SineTerm { amp: -0.05, freq: 2.0, phase: PI / 2.0 },
                ],
            },
            (1.0, 1.0),
        )
    } else {
        (VelocityBc::Nonslip, sine(&[(0.1, 1.0)]), (1.0, 1.0))
    };
    RunConfig {
        label: "smooth".into(),
        problem: ProblemSpec {
            material: MaterialModel::new(1.0, 1.2).unwrap(),
            boundary: BoundarySpec {
                u_side,
                theta_left: (1.0, 0.0),
                theta_right,
            },
            initial: InitialData {
                u0,
                theta0: sine(&[(0.1, 1.0)]),
                theta1: Profile::Zero,
                alpha: 0.2,
            },
        },
        horizon: 0.5,
        grids: GridConfig {
            char_n: 256 * f,
            nx: 64 * f + 1,
            nt: 25 * f + 1,
            fd_nx: 4 * (64 * f) + 1,
            dt_fd: None,
        },
        fixed_point: FixedPointSettings {
            delta: 0.1,
            tol: 1e-8,
            max_iter: 40,
            max_halvings: 8,
            s_points: 32,
        },
    }
}

fn cusp_theta1() -> Profile {
    let n = 2049;
    let xs: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let th = 0.8 * (0.5 * x).sin() + 0.3 * (16.0 * x).sin();
            let thp = 0.4 * (0.5 * x).cos() + 4.8 * (16.0 * x).cos();
            let c = (th.cos().powi(2) + 16.0 * th.sin().powi(2)).sqrt();
            x.sin() * c * thp
        })
        .collect();
    Profile::Table { xs, ys }
}

fn cusp_config(level: u32, stress_free: bool) -> RunConfig {
    let f = 1usize << level;
    let u_side = if stress_free { VelocityBc::StressFree } else { VelocityBc::Nonslip };
    RunConfig {
        label: "cusp".into(),
        problem: ProblemSpec {
            material: MaterialModel::new(1.0, 16.0).unwrap(),
            boundary: BoundarySpec {
                u_side,
                theta_left: (1.0, 0.0),
                theta_right: (0.0, 1.0),
            },
            initial: InitialData {
                u0: Profile::Zero,
                theta0: sine(&[(0.8, 0.5), (0.3, 16.0)]),
                theta1: cusp_theta1(),
                alpha: 0.2,
            },
        },
        horizon: 0.12,
        grids: GridConfig {
            char_n: 2048 * f,
            nx: 256 * f + 1,
            nt: 30 * f + 1,
            fd_nx: 513,
            dt_fd: None,
        },
        fixed_point: FixedPointSettings {
            delta: 0.12,
            tol: 1e-7,
            max_iter: 80,
            max_halvings: 2,
            s_points: 16,
        },
    }
}

fn report(tag: &str, cfg: &RunConfig, mode: Mode) -> Option<poiseuille_lc::coupling::SolutionBundle> {
    let t0 = std::time::Instant::now();
    match solve(cfg, mode) {
        Ok(b) => {
            let trace = dissipation_report(&b, None);
            let recon = reconcile_j(&b);
            let (wru, wrt) = weak_residual(&b, 3);
            let txs = b.fields.theta_x.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let hol = theta_holder(&b);
            let env = b
                .windows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |a, w| {
                    (a.0.min(w.env_min), a.1.max(w.env_max))
                });
            let minp = b.windows.iter().fold(f64::INFINITY, |a, w| a.min(w.min_p.min(w.min_q)));
            println!(
                "{tag}: [{:.1}s] energy_ok={} resid_max={:.3e} slack={:.3e} recon_l2={:.6e} recon_sup={:.3e} wr=({:.4e},{:.4e}) txs={:.4} holder={:.6} env=[{:.6e},{:.6e}] minpq={:.3e} cusp={} iters={:?}",
                t0.elapsed().as_secs_f64(),
                trace.flagged.is_empty(),
                trace.residual.iter().fold(f64::NEG_INFINITY, |m, &r| m.max(r)),
                trace.slack,
                recon.l2,
                recon.sup,
                wru,
                wrt,
                txs,
                hol,
                env.0,
                env.1,
                minp,
                b.fields.cusp.iter().filter(|&&c| c).count(),
                b.windows.iter().map(|w| w.iterations).collect::<Vec<_>>(),
            );
            Some(b)
        }
        Err(e) => {
            println!("{tag}: FAILED after {:.1}s: {e}", t0.elapsed().as_secs_f64());
            None
        }
    }
}

fn main() {
    let what = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if what == "smooth" || what == "all" {
        for &sf in &[false, true] {
            for level in 0..3u32 {
                let cfg = smooth_config(sf, level);
                let tag = format!("smooth sf={sf} L{level}");
                if let Some(b) = report(&tag, &cfg, Mode::Coupled) {
                    // FD cross-check at 4x resolution.
                    let problem = cfg.validate_problem().unwrap();
                    let fd = cfg.fd_config().unwrap();
                    match oracle_fd::run(&problem, cfg.horizon, &fd) {
                        Ok(r) => {
                            let g = b.fields.grid;
                            let fg = r.grid;
                            let mut worst = 0.0f64;
                            for n in 0..g.nt.min(fg.nt) {
                                for i in 0..g.nx {
                                    let x = g.x(i);
                                    let fi = ((x / fg.dx()).round() as usize).min(fg.nx - 1);
                                    worst = worst
                                        .max((b.fields.theta.at(i, n) - r.theta.at(fi, n)).abs());
                                }
                            }
                            println!("{tag}: fd_sup_theta={worst:.6e}");
                        }
                        Err(e) => println!("{tag}: fd failed: {e}"),
                    }
                }
            }
        }
    }

    if what == "cusp" || what == "all" {
        for level in 0..4u32 {
            let cfg = cusp_config(level, false);
            report(&format!("cusp ladder L{level}"), &cfg, Mode::WaveOnly);
        }
    }

    if what == "cuspcoupled" || what == "all" {
        for &sf in &[false, true] {
            let cfg = cusp_config(1, sf);
            report(&format!("cusp coupled sf={sf}"), &cfg, Mode::Coupled);
        }
    }

    if what == "modal" {
        let cfg = RunConfig {
            label: "modal".into(),
            problem: ProblemSpec {
                material: MaterialModel::new(1.0, 1.0).unwrap(),
                boundary: BoundarySpec {
                    u_side: VelocityBc::Nonslip,
                    theta_left: (1.0, 0.0),
                    theta_right: (0.0, 1.0),
                },
                initial: InitialData {
                    u0: Profile::Zero,
                    theta0: sine(&[(1.0, 0.5)]),
                    theta1: Profile::Zero,
                    alpha: 0.2,
                },
            },
            horizon: 1.0,
            grids: GridConfig { char_n: 2048, nx: 257, nt: 201, fd_nx: 1025, dt_fd: None },
            fixed_point: FixedPointSettings {
                delta: 0.1,
                tol: 1e-8,
                max_iter: 60,
                max_halvings: 8,
                s_points: 32,
            },
        };
        if let Some(b) = report("modal wave-only", &cfg, Mode::WaveOnly) {
            let g = b.fields.grid;
            let s1 = -1.0 + 3.0f64.sqrt() / 2.0;
            let s2 = -1.0 - 3.0f64.sqrt() / 2.0;
            let exact = (-s2 * s1.exp() + s1 * s2.exp()) / 3.0f64.sqrt();
            let got = b.fields.theta.at(g.nx - 1, g.nt - 1);
            println!("modal: theta(pi,1)={got:.8} exact={exact:.8} err={:.3e}", (got - exact).abs());
        }
    }
}
