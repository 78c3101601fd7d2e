//! Column-major march of the semilinear system over the characteristic
//! lattice.
//!
//! The lattice has spacing `h = Xtil / n` so that the wall line `Lpi`
//! (`Y = X - Xtil`) passes through lattice nodes exactly; `L0` (`Y = X`)
//! does too. A column `i` holds nodes `(X_i, Y_j)` from its entry point on
//! `Gamma0` or `Lpi` up to the `L0` node `j = i`. Within a column every node
//! depends only on its southern neighbour (which carries `w`, `p` upward)
//! and its western neighbour (which carries `z`, `q` rightward), so one
//! left-to-right, bottom-to-top sweep respects causality. Updates are
//! trapezoidal with an explicit predictor and two corrector passes.

use crate::charwave::curve::{CurvePoint, Gamma0Curve};
use crate::charwave::rhs::{apply_boundary_l0, apply_boundary_lpi, rhs_semilinear};
use crate::error::SolverError;
use crate::grid::Field;
use crate::model::{MaterialModel, RiemannState, ThetaBcClass};
use std::f64::consts::PI;

/// State carried by one lattice node.
#[derive(Clone, Copy, Debug, Default)]
pub struct CharNode {
    pub theta: f64,
    /// Compressed forward slope, allowed to wind past `+-pi`.
    pub w: f64,
    /// Compressed backward slope, allowed to wind past `+-pi`.
    pub z: f64,
    pub p: f64,
    pub q: f64,
    /// Physical position of the node.
    pub x: f64,
    /// Physical time of the node.
    pub t: f64,
}

/// One column of the lattice: nodes at `Y = j h` for `j = jmin, ...`.
#[derive(Clone, Debug)]
pub struct Column {
    pub jmin: i64,
    pub nodes: Vec<CharNode>,
}

impl Column {
    pub fn jmax(&self) -> i64 {
        self.jmin + self.nodes.len() as i64 - 1
    }

    pub fn node(&self, j: i64) -> Option<&CharNode> {
        if j < self.jmin {
            return None;
        }
        self.nodes.get((j - self.jmin) as usize)
    }
}

/// The marched characteristic solution.
#[derive(Clone, Debug)]
pub struct CharGrid {
    /// Lattice spacing.
    pub h: f64,
    /// Nodes per `Xtil`; `Lpi` sits at `j = i - n`.
    pub n: usize,
    pub xhat: f64,
    pub xtil: f64,
    /// Requested time horizon.
    pub t_end: f64,
    pub columns: Vec<Column>,
}

impl CharGrid {
    pub fn node(&self, i: usize, j: i64) -> Option<&CharNode> {
        self.columns.get(i).and_then(|c| c.node(j))
    }
}

fn stress_at(j_field: Option<&Field>, x: f64, t: f64) -> f64 {
    let Some(f) = j_field else { return 0.0 };
    let g = f.grid;
    let fx = ((x - 0.0) / g.dx()).clamp(0.0, (g.nx - 1) as f64);
    let ft = ((t - g.t0) / g.dt().max(f64::MIN_POSITIVE)).clamp(0.0, (g.nt - 1) as f64);
    let i0 = (fx.floor() as usize).min(g.nx.saturating_sub(2));
    let n0 = (ft.floor() as usize).min(g.nt.saturating_sub(2));
    if g.nx == 1 || g.nt == 1 {
        return f.at(i0.min(g.nx - 1), n0.min(g.nt - 1));
    }
    let (a, b) = (fx - i0 as f64, ft - n0 as f64);
    (1.0 - a) * (1.0 - b) * f.at(i0, n0)
        + a * (1.0 - b) * f.at(i0 + 1, n0)
        + (1.0 - a) * b * f.at(i0, n0 + 1)
        + a * b * f.at(i0 + 1, n0 + 1)
}

fn node_rhs(
    node: &CharNode,
    model: &MaterialModel,
    j_field: Option<&Field>,
) -> crate::charwave::rhs::SemilinearRhs {
    let state = RiemannState {
        r: 0.0,
        s: 0.0,
        w: node.w,
        z: node.z,
        p: node.p,
        q: node.q,
    };
    let j = stress_at(j_field, node.x, node.t);
    rhs_semilinear(&state, node.theta, j, model)
}

/// `x_Y` and `t_Y` at a node.
fn pos_rate_y(node: &CharNode, model: &MaterialModel) -> (f64, f64) {
    let (c, _) = model.wave_speed(node.theta);
    let f = (1.0 + node.z.cos()) * node.q / 4.0;
    (-f, f / c)
}

/// `x_X` and `t_X` at a node.
fn pos_rate_x(node: &CharNode, model: &MaterialModel) -> (f64, f64) {
    let (c, _) = model.wave_speed(node.theta);
    let f = (1.0 + node.w.cos()) * node.p / 4.0;
    (f, f / c)
}

fn curve_node(cp: &CurvePoint) -> CharNode {
    CharNode {
        theta: cp.theta,
        w: cp.w,
        z: cp.z,
        p: 1.0,
        q: 1.0,
        x: cp.x,
        t: 0.0,
    }
}

enum NodeKind {
    Interior,
    LeftWall,
    RightWall,
}

struct Sources<'a> {
    south: Option<(&'a CharNode, f64)>,
    west: Option<(&'a CharNode, f64)>,
}

/// Cap on a single log-space step of `p` or `q`; far beyond any resolved
/// rate, it only guards against overflow to `inf`/`NaN` in stiff spots.
const LOG_STEP_CAP: f64 = 30.0;

/// Predictor + corrector update of a single node from its available sources.
fn update_node(
    kind: NodeKind,
    src: &Sources,
    model: &MaterialModel,
    right_wall: &ThetaBcClass,
    wall_theta: (f64, f64),
    j_field: Option<&Field>,
) -> Result<CharNode, SolverError> {
    let south = src.south.map(|(s, dy)| (s, dy, node_rhs(s, model, j_field)));
    let west = src.west.map(|(w, dx)| (w, dx, node_rhs(w, model, j_field)));

    // Explicit predictor.
    let mut g = CharNode::default();
    let mut acc_theta = (0.0, 0.0);
    let mut acc_x = (0.0, 0.0);
    let mut acc_t = (0.0, 0.0);
    if let Some((s, dy, rs)) = &south {
        g.w = s.w + dy * rs.w_y;
        // The p equation is linear in p, so stepping ln p keeps p > 0
        // unconditionally (the additive step can overshoot through zero when
        // the coefficient is large near a cusp).
        g.p = s.p * (dy * rs.p_y / s.p).clamp(-LOG_STEP_CAP, LOG_STEP_CAP).exp();
        let (xr, tr) = pos_rate_y(s, model);
        acc_theta = (acc_theta.0 + s.theta + dy * rs.theta_y, acc_theta.1 + 1.0);
        acc_x = (acc_x.0 + s.x + dy * xr, acc_x.1 + 1.0);
        acc_t = (acc_t.0 + s.t + dy * tr, acc_t.1 + 1.0);
    }
    if let Some((w, dx, rw)) = &west {
        g.z = w.z + dx * rw.z_x;
        g.q = w.q * (dx * rw.q_x / w.q).clamp(-LOG_STEP_CAP, LOG_STEP_CAP).exp();
        let (xr, tr) = pos_rate_x(w, model);
        acc_theta = (acc_theta.0 + w.theta + dx * rw.theta_x, acc_theta.1 + 1.0);
        acc_x = (acc_x.0 + w.x + dx * xr, acc_x.1 + 1.0);
        acc_t = (acc_t.0 + w.t + dx * tr, acc_t.1 + 1.0);
    }
    g.theta = acc_theta.0 / acc_theta.1;
    g.x = acc_x.0 / acc_x.1;
    g.t = acc_t.0 / acc_t.1;
    apply_closure(&kind, &mut g, model, right_wall, wall_theta)?;

    // Two corrector passes of the trapezoid rule.
    for _ in 0..2 {
        let rg = node_rhs(&g, model, j_field);
        let (gxy, gty) = pos_rate_y(&g, model);
        let (gxx, gtx) = pos_rate_x(&g, model);
        let mut theta = (0.0, 0.0);
        let mut x = (0.0, 0.0);
        let mut t = (0.0, 0.0);
        if let Some((s, dy, rs)) = &south {
            g.w = s.w + 0.5 * dy * (rs.w_y + rg.w_y);
            g.p = s.p * (0.5 * dy * (rs.p_y / s.p + rg.p_y / g.p)).clamp(-LOG_STEP_CAP, LOG_STEP_CAP).exp();
            let (sxy, sty) = pos_rate_y(s, model);
            theta = (
                theta.0 + s.theta + 0.5 * dy * (rs.theta_y + rg.theta_y),
                theta.1 + 1.0,
            );
            x = (x.0 + s.x + 0.5 * dy * (sxy + gxy), x.1 + 1.0);
            t = (t.0 + s.t + 0.5 * dy * (sty + gty), t.1 + 1.0);
        }
        if let Some((w, dx, rw)) = &west {
            g.z = w.z + 0.5 * dx * (rw.z_x + rg.z_x);
            g.q = w.q * (0.5 * dx * (rw.q_x / w.q + rg.q_x / g.q)).clamp(-LOG_STEP_CAP, LOG_STEP_CAP).exp();
            let (wxx, wtx) = pos_rate_x(w, model);
            theta = (
                theta.0 + w.theta + 0.5 * dx * (rw.theta_x + rg.theta_x),
                theta.1 + 1.0,
            );
            x = (x.0 + w.x + 0.5 * dx * (wxx + gxx), x.1 + 1.0);
            t = (t.0 + w.t + 0.5 * dx * (wtx + gtx), t.1 + 1.0);
        }
        g.theta = theta.0 / theta.1;
        g.x = x.0 / x.1;
        g.t = t.0 / t.1;
        apply_closure(&kind, &mut g, model, right_wall, wall_theta)?;
    }
    Ok(g)
}

fn apply_closure(
    kind: &NodeKind,
    g: &mut CharNode,
    model: &MaterialModel,
    right_wall: &ThetaBcClass,
    wall_theta: (f64, f64),
) -> Result<(), SolverError> {
    match kind {
        NodeKind::Interior => {}
        NodeKind::LeftWall => {
            let (z, q) = apply_boundary_l0(g.w, g.p);
            g.z = z;
            g.q = q;
            g.theta = wall_theta.0;
            g.x = 0.0;
        }
        NodeKind::RightWall => {
            match right_wall {
                ThetaBcClass::DirichletRobin { iota } => {
                    let (w, p) = apply_boundary_lpi(g.z, g.q, g.theta, *iota, model)?;
                    g.w = w;
                    g.p = p;
                }
                ThetaBcClass::DirichletDirichlet => {
                    // Pinned right wall: same reflection as at x = 0.
                    let (w, p) = apply_boundary_l0(g.z, g.q);
                    g.w = w;
                    g.p = p;
                    g.theta = wall_theta.1;
                }
            }
            g.x = PI;
        }
    }
    Ok(())
}

/// March the characteristic lattice until every column has passed the time
/// horizon `t_end`. `n` sets the resolution (`h = Xtil / n`); `j_field`
/// supplies the stress history (`None` solves the unforced wave equation).
pub fn march(
    curve: &Gamma0Curve,
    model: &MaterialModel,
    right_wall: &ThetaBcClass,
    j_field: Option<&Field>,
    t_end: f64,
    n: usize,
) -> Result<CharGrid, SolverError> {
    assert!(n >= 8, "lattice too coarse");
    let h = curve.xtil / n as f64;
    let snap = 1e-9 * h;
    let max_cols = 4 * n + ((16.0 * (t_end + 1.0) * (1.0 + model.c_upper())) / h).ceil() as usize;

    // Dirichlet wall values are the traces of the initial director angle.
    let wall_theta = (
        curve.point_at_big_x(0.0).theta,
        curve.point_at_big_x(curve.xhat).theta,
    );
    let mut columns: Vec<Column> = Vec::new();
    let mut cols_beyond = 0usize;

    for i in 0..max_cols {
        let big_x = i as f64 * h;
        let on_curve_side = big_x <= curve.xhat + snap;
        let jmin: i64 = if on_curve_side {
            let phi = curve.phi(big_x);
            ((phi - snap) / h).ceil() as i64
        } else {
            i as i64 - n as i64
        };

        let mut nodes: Vec<CharNode> = Vec::new();
        let mut first_exceed: Option<i64> = None;

        let mut j = jmin;
        while j <= i as i64 {
            let big_y = j as f64 * h;
            let node = if i == 0 {
                // The corner node sits on both Gamma0 and L0.
                curve_node(&curve.point_at_big_x(0.0))
            } else if on_curve_side
                && j == jmin
                && (big_y - curve.phi(big_x)).abs() <= snap
            {
                // Lattice node exactly on the initial curve.
                curve_node(&curve.point_at_big_x(big_x))
            } else {
                // Southern source: previous node in this column, the initial
                // curve (partial step), or nothing on the Lpi wall.
                let south_cp;
                let south: Option<(&CharNode, f64)> = if !nodes.is_empty() {
                    Some((nodes.last().unwrap(), h))
                } else if on_curve_side {
                    south_cp = curve_node(&curve.point_at_big_x(big_x));
                    Some((&south_cp, (big_y - curve.phi(big_x)).max(0.0)))
                } else {
                    None
                };

                // Western source: the neighbouring column, the initial curve
                // (partial step), or nothing on the L0 wall.
                let west_cp;
                let west: Option<(&CharNode, f64)> = if j == i as i64 {
                    None
                } else if let Some(wn) = columns.get(i - 1).and_then(|c| c.node(j)) {
                    Some((wn, h))
                } else {
                    let cp = curve.point_at_big_y(big_y);
                    west_cp = curve_node(&cp);
                    Some((&west_cp, (big_x - cp.big_x).max(0.0)))
                };

                let kind = if j == i as i64 {
                    NodeKind::LeftWall
                } else if !on_curve_side && j == jmin {
                    NodeKind::RightWall
                } else {
                    NodeKind::Interior
                };
                update_node(
                    kind,
                    &Sources { south, west },
                    model,
                    right_wall,
                    wall_theta,
                    j_field,
                )?
            };

            if !(node.p > 0.0 && node.q > 0.0) {
                return Err(SolverError::NonpositivePQ {
                    x_coord: big_x,
                    y_coord: big_y,
                    p: node.p,
                    q: node.q,
                });
            }
            if node.t > t_end && first_exceed.is_none() {
                first_exceed = Some(j);
            }
            nodes.push(node);
            if let Some(fe) = first_exceed {
                if j >= fe + 3 {
                    break;
                }
            }
            j += 1;
        }

        let bottom_t = nodes[0].t;
        columns.push(Column { jmin, nodes });

        if !on_curve_side && bottom_t > t_end {
            cols_beyond += 1;
            if cols_beyond > 2 {
                return Ok(CharGrid {
                    h,
                    n,
                    xhat: curve.xhat,
                    xtil: curve.xtil,
                    t_end,
                    columns,
                });
            }
        }
    }
    Err(SolverError::HorizonNotReached(t_end))
}
