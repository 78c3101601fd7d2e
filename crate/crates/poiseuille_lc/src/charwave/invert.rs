//! Pull the marched characteristic solution back onto a uniform physical
//! grid.
//!
//! Every lattice cell is a bilinear patch of the coordinate map
//! `(X, Y) -> (x, t)`. For each physical node inside a patch's bounding box
//! a 2x2 Newton iteration inverts the bilinear map; accepted local
//! coordinates interpolate `theta`, `w`, `z`, from which `theta_t` and
//! `theta_x` are recovered. The walls and the initial row are filled
//! directly from the wall node sequences and the initial curve, which is
//! both cheaper and exact there.

use crate::charwave::curve::Gamma0Curve;
use crate::charwave::march::{CharGrid, CharNode};
use crate::charwave::rhs::wrap_to_pi;
use crate::error::SolverError;
use crate::grid::{FieldSet, PhysGrid};
use crate::model::{MaterialModel, CUSP_TOL};
use crate::util::interp_linear;
use std::f64::consts::PI;

/// One patch corner: position plus the interpolated unknowns.
#[derive(Clone, Copy, Debug, Default)]
struct Corner {
    x: f64,
    t: f64,
    theta: f64,
    w: f64,
    z: f64,
}

impl Corner {
    fn of(node: &CharNode) -> Self {
        Corner {
            x: node.x,
            t: node.t,
            theta: node.theta,
            w: node.w,
            z: node.z,
        }
    }
}

/// Slope of `tan(w/2)` used in place of an infinite cusp value: finite but
/// large, so gradient-growth diagnostics still see the blowup.
/// Slope magnitude beyond which a sample counts as sitting inside a cusp
/// neighbourhood (`|w| or |z|` within ~0.04 of `pi`).
const SPIKE_TOL: f64 = 50.0;

fn half_tan(w: f64) -> (f64, bool) {
    let principal = wrap_to_pi(w);
    if principal.abs() >= PI - CUSP_TOL {
        let capped = principal.signum() * (PI - CUSP_TOL);
        ((0.5 * capped).tan(), true)
    } else {
        ((0.5 * principal).tan(), false)
    }
}

struct Writer<'a> {
    fields: &'a mut FieldSet,
    assigned: Vec<bool>,
    model: &'a MaterialModel,
}

/// Whether the (winding) angle interval `[lo, hi]` contains an odd multiple
/// of `pi`, i.e. whether a cusp sits inside the patch spanning those values.
fn brackets_cusp(lo: f64, hi: f64) -> bool {
    ((lo - PI) / (2.0 * PI)).ceil() <= ((hi - PI) / (2.0 * PI)).floor()
}

impl Writer<'_> {
    fn assign(&mut self, i: usize, n: usize, theta: f64, w: f64, z: f64, patch_cusp: bool) {
        let nx = self.fields.grid.nx;
        if self.assigned[n * nx + i] {
            return;
        }
        self.assigned[n * nx + i] = true;
        let (r, cusp_w) = half_tan(w);
        let (s, cusp_z) = half_tan(z);
        let (c, _) = self.model.wave_speed(theta);
        self.fields.theta.set(i, n, theta);
        self.fields.theta_t.set(i, n, 0.5 * (r + s));
        self.fields.theta_x.set(i, n, 0.5 * (r - s) / c);
        // Also flag samples so close to a cusp that one grid cell cannot
        // resolve them; quadratures treat flagged cells by interpolation
        // from resolved neighbours.
        let near = r.abs() > SPIKE_TOL || s.abs() > SPIKE_TOL;
        self.fields.cusp[n * nx + i] = patch_cusp || cusp_w || cusp_z || near;
    }
}

/// Invert one bilinear patch over the physical nodes in its bounding box.
fn process_patch(patch: &[Corner; 4], writer: &mut Writer, tol_ab: f64) {
    let g = writer.fields.grid;
    let [a, b, c, d] = patch;

    let xmin = a.x.min(b.x).min(c.x).min(d.x) - 1e-12;
    let xmax = a.x.max(b.x).max(c.x).max(d.x) + 1e-12;
    let tmin = a.t.min(b.t).min(c.t).min(d.t) - 1e-12;
    let tmax = a.t.max(b.t).max(c.t).max(d.t) + 1e-12;

    let i_lo = ((xmin / g.dx()).ceil().max(0.0)) as usize;
    let i_hi = ((xmax / g.dx()).floor() as i64).min(g.nx as i64 - 1);
    let n_lo = (((tmin - g.t0) / g.dt()).ceil().max(0.0)) as usize;
    let n_hi = (((tmax - g.t0) / g.dt()).floor() as i64).min(g.nt as i64 - 1);
    if i_hi < i_lo as i64 || n_hi < n_lo as i64 {
        return;
    }

    // Bilinear map F(s, r) = A + s E + r F + s r G (s east, r north).
    let (ex, et) = (b.x - a.x, b.t - a.t);
    let (fx, ft) = (d.x - a.x, d.t - a.t);
    let (gx, gt) = (a.x - b.x + c.x - d.x, a.t - b.t + c.t - d.t);
    let scale = (xmax - xmin).max(tmax - tmin).max(1e-300);

    // A cusp lies inside the patch when the corner values of either angle
    // bracket an odd multiple of pi; every physical node that lands in such a
    // patch is flagged.
    let wlo = a.w.min(b.w).min(c.w).min(d.w);
    let whi = a.w.max(b.w).max(c.w).max(d.w);
    let zlo = a.z.min(b.z).min(c.z).min(d.z);
    let zhi = a.z.max(b.z).max(c.z).max(d.z);
    let patch_cusp = brackets_cusp(wlo, whi) || brackets_cusp(zlo, zhi);

    for n in n_lo..=(n_hi as usize) {
        for i in i_lo..=(i_hi as usize) {
            if writer.assigned[n * g.nx + i] {
                continue;
            }
            let (px, pt) = (g.x(i), g.t(n));
            let (mut s, mut r) = (0.5, 0.5);
            let mut ok = false;
            for _ in 0..20 {
                let rx = a.x + s * ex + r * fx + s * r * gx - px;
                let rt = a.t + s * et + r * ft + s * r * gt - pt;
                if rx.abs() + rt.abs() < 1e-11 * scale {
                    ok = true;
                    break;
                }
                let j11 = ex + r * gx;
                let j12 = fx + s * gx;
                let j21 = et + r * gt;
                let j22 = ft + s * gt;
                let det = j11 * j22 - j12 * j21;
                if det.abs() < 1e-14 * scale * scale {
                    break;
                }
                s -= (rx * j22 - rt * j12) / det;
                r -= (rt * j11 - rx * j21) / det;
                if !(s.is_finite() && r.is_finite()) {
                    break;
                }
                s = s.clamp(-1.0, 2.0);
                r = r.clamp(-1.0, 2.0);
            }
            if !ok {
                continue;
            }
            if s < -tol_ab || s > 1.0 + tol_ab || r < -tol_ab || r > 1.0 + tol_ab {
                continue;
            }
            let w00 = (1.0 - s) * (1.0 - r);
            let w10 = s * (1.0 - r);
            let w11 = s * r;
            let w01 = (1.0 - s) * r;
            let theta = w00 * a.theta + w10 * b.theta + w11 * c.theta + w01 * d.theta;
            let w = w00 * a.w + w10 * b.w + w11 * c.w + w01 * d.w;
            let z = w00 * a.z + w10 * b.z + w11 * c.z + w01 * d.z;
            writer.assign(i, n, theta, w, z, patch_cusp);
        }
    }
}

fn curve_corner(curve: &Gamma0Curve, big_x: f64) -> Corner {
    let cp = curve.point_at_big_x(big_x);
    Corner {
        x: cp.x,
        t: 0.0,
        theta: cp.theta,
        w: cp.w,
        z: cp.z,
    }
}

fn sweep(grid: &CharGrid, curve: &Gamma0Curve, writer: &mut Writer, tol_ab: f64) {
    let ncols = grid.columns.len();
    for i in 0..ncols.saturating_sub(1) {
        let col = &grid.columns[i];
        let colr = &grid.columns[i + 1];
        let big_x = i as f64 * grid.h;

        // Gap patch between the initial curve and the lattice bottoms.
        if big_x < grid.xhat {
            let a = curve_corner(curve, big_x);
            let b = curve_corner(curve, (big_x + grid.h).min(grid.xhat));
            let c = Corner::of(&colr.nodes[0]);
            let d = Corner::of(&col.nodes[0]);
            process_patch(&[a, b, c, d], writer, tol_ab);
        }

        // Fan triangles between mismatched column bottoms: rows below the
        // shared j-range are bounded by one column's bottom node on one side
        // and several nodes of the other column on the other.
        if colr.jmin < col.jmin {
            let apex = Corner::of(&col.nodes[0]);
            for j in colr.jmin..col.jmin.min(colr.jmax()) {
                if let (Some(p2), Some(p3)) = (colr.node(j), colr.node(j + 1)) {
                    let patch = [apex, Corner::of(p2), Corner::of(p3), apex];
                    process_patch(&patch, writer, tol_ab);
                }
            }
        } else if col.jmin < colr.jmin {
            let apex = Corner::of(&colr.nodes[0]);
            for j in col.jmin..colr.jmin.min(col.jmax()) {
                if let (Some(p2), Some(p3)) = (col.node(j), col.node(j + 1)) {
                    let patch = [apex, Corner::of(p2), Corner::of(p3), apex];
                    process_patch(&patch, writer, tol_ab);
                }
            }
        }

        // Interior lattice cells.
        let jlo = col.jmin.max(colr.jmin);
        let jhi = col.jmax().min(colr.jmax()) - 1;
        let mut j = jlo;
        while j <= jhi {
            let a = Corner::of(col.node(j).unwrap());
            let b = Corner::of(colr.node(j).unwrap());
            let c = Corner::of(colr.node(j + 1).unwrap());
            let d = Corner::of(col.node(j + 1).unwrap());
            process_patch(&[a, b, c, d], writer, tol_ab);
            j += 1;
        }

        // Matching fans at the top fringe, where the time cap ends adjacent
        // columns at different rows.
        if colr.jmax() > col.jmax() {
            let apex = Corner::of(col.node(col.jmax()).unwrap());
            for j in col.jmax().max(colr.jmin)..colr.jmax() {
                if let (Some(p2), Some(p3)) = (colr.node(j), colr.node(j + 1)) {
                    let patch = [apex, Corner::of(p2), Corner::of(p3), apex];
                    process_patch(&patch, writer, tol_ab);
                }
            }
        } else if col.jmax() > colr.jmax() {
            let apex = Corner::of(colr.node(colr.jmax()).unwrap());
            for j in colr.jmax().max(col.jmin)..col.jmax() {
                if let (Some(p2), Some(p3)) = (col.node(j), col.node(j + 1)) {
                    let patch = [apex, Corner::of(p2), Corner::of(p3), apex];
                    process_patch(&patch, writer, tol_ab);
                }
            }
        }

        // Triangle next to the left wall: (i, i), (i+1, i), (i+1, i+1).
        if let (Some(p1), Some(p2), Some(p3)) = (
            col.node(i as i64),
            colr.node(i as i64),
            colr.node(i as i64 + 1),
        ) {
            let patch = [Corner::of(p1), Corner::of(p2), Corner::of(p3), Corner::of(p1)];
            process_patch(&patch, writer, tol_ab);
        }

        // Triangle next to the right wall: (i, i-n), (i+1, i-n+1), (i, i-n+1).
        let jpi = i as i64 - grid.n as i64;
        if let (Some(p1), Some(p2), Some(p3)) =
            (col.node(jpi), colr.node(jpi + 1), col.node(jpi + 1))
        {
            if (p1.x - PI).abs() < 1e-12 {
                let patch = [Corner::of(p1), Corner::of(p2), Corner::of(p3), Corner::of(p1)];
                process_patch(&patch, writer, tol_ab);
            }
        }
    }
}

/// Sample the characteristic solution on `phys`. Returns a [`FieldSet`] with
/// `theta`, `theta_t`, `theta_x` and the cusp mask filled in (`u` and `j`
/// are left zero for the caller).
pub fn invert_map(
    grid: &CharGrid,
    curve: &Gamma0Curve,
    model: &MaterialModel,
    phys: PhysGrid,
) -> Result<FieldSet, SolverError> {
    let mut fields = FieldSet::zeros(phys);
    let mut writer = Writer {
        assigned: vec![false; phys.nx * phys.nt],
        fields: &mut fields,
        model,
    };

    // Initial row, straight from the curve tables (exact parameterization).
    for i in 0..phys.nx {
        let x = phys.x(i);
        let theta = interp_linear(&curve.xs, &curve.theta, x);
        let w = interp_linear(&curve.xs, &curve.w, x);
        let z = interp_linear(&curve.xs, &curve.z, x);
        writer.assign(i, 0, theta, w, z, false);
    }

    // Walls from the boundary node sequences.
    let mut l0_t = vec![0.0];
    let mut l0_w = vec![interp_linear(&curve.xs, &curve.w, 0.0)];
    let mut lpi_t = vec![0.0];
    let mut lpi_theta = vec![interp_linear(&curve.xs, &curve.theta, PI)];
    let mut lpi_w = vec![interp_linear(&curve.xs, &curve.w, PI)];
    let mut lpi_z = vec![interp_linear(&curve.xs, &curve.z, PI)];
    for (i, col) in grid.columns.iter().enumerate() {
        if let Some(node) = col.node(i as i64) {
            if node.t > *l0_t.last().unwrap() {
                l0_t.push(node.t);
                l0_w.push(node.w);
            }
        }
        if i as f64 * grid.h > grid.xhat {
            if let Some(node) = col.node(i as i64 - grid.n as i64) {
                if node.t > *lpi_t.last().unwrap() {
                    lpi_t.push(node.t);
                    lpi_theta.push(node.theta);
                    lpi_w.push(node.w);
                    lpi_z.push(node.z);
                }
            }
        }
    }
    let theta_left = interp_linear(&curve.xs, &curve.theta, 0.0);
    for n in 1..phys.nt {
        let t = phys.t(n);
        let w = interp_linear(&l0_t, &l0_w, t);
        writer.assign(0, n, theta_left, w, -w, false);
        writer.assign(
            phys.nx - 1,
            n,
            interp_linear(&lpi_t, &lpi_theta, t),
            interp_linear(&lpi_t, &lpi_w, t),
            interp_linear(&lpi_t, &lpi_z, t),
            false,
        );
    }

    // Interior: tight pass, then a lenient pass for stragglers on patch
    // seams (mild bilinear extrapolation stays second-order accurate).
    sweep(grid, curve, &mut writer, 1e-9);
    if writer.assigned.iter().any(|a| !a) {
        sweep(grid, curve, &mut writer, 0.05);
    }

    // Stragglers next to a degenerate (cusp) region, where the coordinate
    // map loses its Jacobian and patch coverage can open gaps: take the
    // nearest lattice node outright. Anything further than a coarse-cell
    // diameter from every lattice node is a genuine coverage failure.
    if writer.assigned.iter().any(|a| !a) {
        let misses: Vec<usize> = (0..phys.nx * phys.nt)
            .filter(|&k| !writer.assigned[k])
            .collect();
        let reach = (2.0 * phys.dx()).max(2.0 * phys.dt());
        for k in misses {
            let (n, i) = (k / phys.nx, k % phys.nx);
            let (px, pt) = (phys.x(i), phys.t(n));
            let mut best: Option<(f64, f64, f64, f64)> = None;
            let mut best_d = f64::INFINITY;
            for col in &grid.columns {
                for node in &col.nodes {
                    let d = (node.x - px).hypot(node.t - pt);
                    if d < best_d {
                        best_d = d;
                        best = Some((node.theta, node.w, node.z, d));
                    }
                }
            }
            match best {
                Some((theta, w, z, d)) if d <= reach => {
                    writer.assign(i, n, theta, w, z, true);
                }
                _ => {
                    return Err(SolverError::LookupMiss { x: px, t: pt });
                }
            }
        }
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charwave::curve::build_initial_curve;
    use crate::charwave::march::march;
    use crate::model::{InitialData, Profile, SineTerm, ThetaBcClass};

    fn unit_model() -> MaterialModel {
        MaterialModel::new(1.0, 1.0).unwrap()
    }

    fn modal_data() -> InitialData {
        InitialData {
            u0: Profile::Zero,
            theta0: Profile::SineSeries {
                terms: vec![SineTerm {
                    amp: 1.0,
                    freq: 0.5,
                    phase: 0.0,
                }],
            },
            theta1: Profile::Zero,
            alpha: 0.2,
        }
    }

    #[test]
    fn zero_data_inverts_to_rest() {
        let m = unit_model();
        let data = InitialData {
            u0: Profile::Zero,
            theta0: Profile::Zero,
            theta1: Profile::Zero,
            alpha: 0.2,
        };
        let curve = build_initial_curve(&data, &m, 2049).unwrap();
        let bc = ThetaBcClass::DirichletRobin { iota: 1.0 };
        let grid = march(&curve, &m, &bc, None, 2.0, 64).unwrap();
        let phys = PhysGrid::new(33, 9, 0.0, 2.0);
        let fields = invert_map(&grid, &curve, &m, phys).unwrap();
        for v in fields
            .theta
            .data
            .iter()
            .chain(&fields.theta_t.data)
            .chain(&fields.theta_x.data)
        {
            assert!(v.abs() < 1e-9);
        }
        assert!(fields.cusp.iter().all(|&c| !c));
    }

    #[test]
    fn modal_solution_matches_the_separated_form() {
        // With J = 0 the effective damping is 1, so
        // theta = T(t) sin(x/2) with T'' + T' + T/4 = 0, T(0) = 1,
        // T'(0) = 0: critically damped, T = (1 + t/2) e^{-t/2}.
        let m = unit_model();
        let curve = build_initial_curve(&modal_data(), &m, 8193).unwrap();
        let bc = ThetaBcClass::DirichletRobin { iota: 0.0 };
        let grid = march(&curve, &m, &bc, None, 1.3, 768).unwrap();
        let phys = PhysGrid::new(65, 6, 0.0, 1.0);
        let fields = invert_map(&grid, &curve, &m, phys).unwrap();

        let mut worst_theta = 0.0f64;
        let mut worst_tt = 0.0f64;
        for n in 0..phys.nt {
            let t = phys.t(n);
            let big_t = (1.0 + 0.5 * t) * (-0.5 * t).exp();
            let big_tp = -0.25 * t * (-0.5 * t).exp();
            for i in 0..phys.nx {
                let shape = (0.5 * phys.x(i)).sin();
                worst_theta =
                    worst_theta.max((fields.theta.at(i, n) - big_t * shape).abs());
                worst_tt = worst_tt.max((fields.theta_t.at(i, n) - big_tp * shape).abs());
            }
        }
        assert!(worst_theta < 5e-3, "theta error {worst_theta}");
        assert!(worst_tt < 5e-3, "theta_t error {worst_tt}");
    }

    #[test]
    fn horizon_overrun_is_a_lookup_miss() {
        let m = unit_model();
        let curve = build_initial_curve(&modal_data(), &m, 4097).unwrap();
        let bc = ThetaBcClass::DirichletRobin { iota: 0.0 };
        let grid = march(&curve, &m, &bc, None, 0.5, 256).unwrap();
        let phys = PhysGrid::new(33, 9, 0.0, 2.0);
        let err = invert_map(&grid, &curve, &m, phys).unwrap_err();
        assert!(matches!(err, SolverError::LookupMiss { .. }));
    }
}
