// Scratch parameter search for a cusp-forming simple-wave configuration.

use poiseuille_lc::charwave::{build_curve_from_samples, invert_map, march};
use poiseuille_lc::grid::{Field, PhysGrid};
use poiseuille_lc::model::{MaterialModel, ThetaBcClass};
use std::f64::consts::PI;

fn arg(i: usize, default: f64) -> f64 {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let b = arg(1, 0.8);
    let eps = arg(2, 0.3);
    let k = arg(3, 32.0);
    let k3 = arg(4, 16.0);
    let char_n = arg(5, 8192.0) as usize;
    let rows = arg(6, 20.0) as usize;
    let dt = arg(7, 0.02);

    let model = MaterialModel::new(1.0, k3).unwrap();
    let nx = arg(8, 513.0) as usize;
    let xs: Vec<f64> = (0..nx).map(|i| PI * i as f64 / (nx - 1) as f64).collect();
    let off = arg(9, 0.0);
    let theta: Vec<f64> = xs
        .iter()
        .map(|&x| off + b * (0.5 * x).sin() + eps * (k * x).sin())
        .collect();
    let theta_x: Vec<f64> = xs
        .iter()
        .map(|&x| 0.5 * b * (0.5 * x).cos() + eps * k * (k * x).cos())
        .collect();
    // Rightward simple wave, tapered to satisfy theta_t = 0 at the pinned
    // left wall: theta_t = sin(x) c(theta0) theta0'.
    let theta_t: Vec<f64> = xs
        .iter()
        .zip(theta.iter().zip(&theta_x))
        .map(|(&x, (&th, &tx))| x.sin() * model.wave_speed(th).0 * tx)
        .collect();

    let bc = ThetaBcClass::DirichletRobin { iota: 0.0 };
    let tol = 1e-7;

    let curve = build_curve_from_samples(&xs, &theta, &theta_t, &theta_x, &model, 8193).unwrap();
    let t_win = rows as f64 * dt;
    let wgrid = PhysGrid::new(nx, rows + 1, 0.0, t_win);
    let mut j = Field::zeros(wgrid);
    for n in 0..wgrid.nt {
        j.row_mut(n).copy_from_slice(&theta_t);
    }
    for it in 1..=80 {
        let grid = match march(&curve, &model, &bc, Some(&j), t_win, char_n) {
            Ok(g) => g,
            Err(e) => {
                println!("iter {it}: march failed: {e}");
                return;
            }
        };
        let wf = match invert_map(&grid, &curve, &model, wgrid) {
            Ok(wf) => wf,
            Err(e) => {
                println!("iter {it}: invert failed: {e}");
                return;
            }
        };
        let mut wf = wf;
        for n in 0..wgrid.nt {
            let mask: Vec<bool> = (0..nx).map(|i| wf.cusp[n * nx + i]).collect();
            poiseuille_lc::util::interpolate_masked(wf.theta_t.row_mut(n), &mask);
        }
        let res: f64 = (j
            .data
            .iter()
            .zip(&wf.theta_t.data)
            .map(|(&a, &c)| (a - c) * (a - c))
            .sum::<f64>()
            / j.data.len() as f64)
            .sqrt();
        j.data.copy_from_slice(&wf.theta_t.data);
        eprintln!("iter {it}: res {res:.3e}");
        if res < tol {
            let mut wmax = 0.0f64;
            let mut zmin = 0.0f64;
            let (mut pmin, mut pmax, mut qmin, mut qmax) = (f64::MAX, 0.0f64, f64::MAX, 0.0f64);
            for col in &grid.columns {
                for nd in &col.nodes {
                    wmax = wmax.max(nd.w);
                    zmin = zmin.min(nd.z);
                    pmin = pmin.min(nd.p);
                    pmax = pmax.max(nd.p);
                    qmin = qmin.min(nd.q);
                    qmax = qmax.max(nd.q);
                }
            }
            let mut worst: Vec<(f64,f64,f64,f64,f64,f64)> = Vec::new();
            for col in &grid.columns {
                for nd in &col.nodes {
                    if nd.q > 1.0e6 || nd.p > 1.0e6 {
                        worst.push((nd.x, nd.t, nd.w, nd.z, nd.p, nd.q));
                    }
                }
            }
            worst.sort_by(|a, b| (b.4.max(b.5)).total_cmp(&a.4.max(a.5)));
            println!("huge pq nodes: {}", worst.len());
            for &(x, t, w, z, p, q) in worst.iter().take(6) {
                let ew = (1.0 - w.cos()) * p;
                let ez = (1.0 - z.cos()) * q;
                println!("  (x,t)=({x:.3},{t:.3}) w={w:.4} z={z:.4} p={p:.2e} q={q:.2e} (1-cw)p={ew:.2e} (1-cz)q={ez:.2e}");
            }
            let near = |a: f64| {
                let r = (a.abs() + PI).rem_euclid(2.0 * PI) - PI; // distance helper
                (r.abs() - PI).abs() < 0.2 || false
            };
            let _ = near;
            let dist_to_odd_pi = |a: f64| {
                let m = a.rem_euclid(2.0 * PI);
                (m - PI).abs()
            };
            let (mut fpmin, mut fpmax, mut fqmin, mut fqmax) = (f64::MAX, 0.0f64, f64::MAX, 0.0f64);
            for col in &grid.columns {
                for nd in &col.nodes {
                    if nd.t > grid.t_end {
                        continue;
                    }
                    let m = nd.p.max(nd.q);
                    fpmin = fpmin.min(m);
                    fpmax = fpmax.max(m);
                    if nd.w.abs() <= 2.8 && nd.z.abs() <= 2.8 {
                        fqmin = fqmin.min(m);
                        fqmax = fqmax.max(m);
                    }
                }
            }
            println!("maxpq all=[{fpmin:.3e},{fpmax:.3e}] precusp=[{fqmin:.3e},{fqmax:.3e}]");
            let mut argmin = (0.0, 0.0, 0.0, 0.0, f64::MAX);
            for col in &grid.columns {
                for nd in &col.nodes {
                    if nd.t > grid.t_end {
                        continue;
                    }
                    let m = nd.p.max(nd.q);
                    if m < argmin.4 {
                        argmin = (nd.x, nd.t, nd.w, nd.z, m);
                    }
                }
            }
            println!("argmin maxpq at (x,t)=({:.3},{:.3}) w={:.3} z={:.3} m={:.3e}", argmin.0, argmin.1, argmin.2, argmin.3, argmin.4);
            let mut char_txs = 0.0f64;
            for col in &grid.columns {
                for nd in &col.nodes {
                    if nd.t > grid.t_end {
                        continue;
                    }
                    let c = model.wave_speed(nd.theta).0;
                    let tx = ((0.5 * nd.w).tan() - (0.5 * nd.z).tan()) / (2.0 * c);
                    if tx.is_finite() {
                        char_txs = char_txs.max(tx.abs());
                    }
                }
            }
            println!("char grid txsup = {char_txs:.4}");
            let mut theta_masked = wf.theta.clone();
            for n in 0..wgrid.nt {
                let mask: Vec<bool> = (0..nx).map(|i| wf.cusp[n * nx + i]).collect();
                poiseuille_lc::util::interpolate_masked(theta_masked.row_mut(n), &mask);
            }
            let mut holder = 0.0f64;
            let mut hq_at = (0usize, 0usize, 0usize);
            for n in 0..wgrid.nt {
                let row = theta_masked.row(n);
                for i in 0..nx {
                    for jx in (i + 1)..nx {
                        let q = (row[jx] - row[i]).abs() / (xs[jx] - xs[i]).sqrt();
                        if q > holder {
                            holder = q;
                            hq_at = (n, i, jx);
                        }
                    }
                }
            }
            let (hn, hi, hj) = hq_at;
            println!(
                "holder quotient = {holder:.6} at t={:.4} x=[{:.5},{:.5}] th=[{:.5},{:.5}]",
                hn as f64 * (t_win / (wgrid.nt - 1) as f64),
                xs[hi], xs[hj],
                theta_masked.at(hi, hn), theta_masked.at(hj, hn)
            );
            let ncusp = wf.cusp.iter().filter(|&&c| c).count();
            let txsup = wf.theta_x.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            println!(
                "converged in {it} iters; h={:.4} wmax={wmax:.5} zmin={zmin:.5} cusp={ncusp} \
                 txsup={txsup:.4} p=[{pmin:.3e},{pmax:.3e}] q=[{qmin:.3e},{qmax:.3e}]",
                grid.h
            );
            return;
        }
    }
    println!("no convergence");
}
