//! Right sides of the semilinear characteristic system and the wall
//! closures.
//!
//! Every term below is a bounded trigonometric polynomial in `w` and `z`
//! (2pi-periodic in each), so the march can let `w` and `z` wind
//! continuously past `+-pi`; crossing an odd multiple of `pi` is exactly a
//! cusp of `theta_x`.

use crate::error::SolverError;
use crate::model::{MaterialModel, RiemannState, CUSP_TOL};
use std::f64::consts::PI;

/// Derivatives of the characteristic unknowns: `theta_X`, `theta_Y`, `w_Y`,
/// `z_X`, `p_Y`, `q_X` (each variable varies in one coordinate only).
#[derive(Clone, Copy, Debug, Default)]
pub struct SemilinearRhs {
    pub theta_x: f64,
    pub theta_y: f64,
    pub w_y: f64,
    pub z_x: f64,
    pub p_y: f64,
    pub q_x: f64,
}

/// Evaluate the semilinear right sides at one node. Only `w`, `z`, `p`, `q`
/// of the state are read; `j` is the total shear stress at the node.
pub fn rhs_semilinear(
    state: &RiemannState,
    theta: f64,
    j: f64,
    model: &MaterialModel,
) -> SemilinearRhs {
    let (c, cp) = model.wave_speed(theta);
    let (w, z, p, q) = (state.w, state.z, state.p, state.q);

    let (sw, cw2) = (w.sin(), (0.5 * w).cos().powi(2));
    let (sz, cz2) = (z.sin(), (0.5 * z).cos().powi(2));
    let sw2 = 1.0 - cw2; // sin^2(w/2)
    let sz2 = 1.0 - cz2;
    let ratio = cp / c;

    let angle_common = -sw * cz2 - sz * cw2 - 4.0 * j * cw2 * cz2;
    let w_y = q / (4.0 * c) * (ratio * (cz2 - cw2) + angle_common);
    let z_x = p / (4.0 * c) * (ratio * (cw2 - cz2) + angle_common);

    let p_y = p * q / (2.0 * c)
        * (0.25 * ratio * (sz - sw) - 0.25 * sw * sz - sw2 * cz2 - j * sw * cz2);
    let q_x = p * q / (2.0 * c)
        * (0.25 * ratio * (sw - sz) - 0.25 * sw * sz - sz2 * cw2 - j * sz * cw2);

    SemilinearRhs {
        theta_x: sw / (4.0 * c) * p,
        theta_y: sz / (4.0 * c) * q,
        w_y,
        z_x,
        p_y,
        q_x,
    }
}

/// Reduce an angle to the principal branch `(-pi, pi]`.
pub fn wrap_to_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Wall closure at `x = 0` (`theta = 0` pinned): the reflected forward wave
/// is `w = -z`, `p = q`.
pub fn apply_boundary_l0(z_in: f64, q_in: f64) -> (f64, f64) {
    (-z_in, q_in)
}

/// Wall closure at `x = pi` for the Dirichlet/Robin regime
/// `c theta_x + iota theta = 0`: in compressed variables
/// `tan(w/2) = tan(z/2) - 2 iota c(theta) theta` and the amplitude scales by
/// the slope ratio. The winding count of `z` is carried over to `w` so the
/// march can keep both angles continuous.
pub fn apply_boundary_lpi(
    z_in: f64,
    q_in: f64,
    theta: f64,
    iota: f64,
    model: &MaterialModel,
) -> Result<(f64, f64), SolverError> {
    if iota == 0.0 {
        // Neumann wall: the wave reflects without modification.
        return Ok((z_in, q_in));
    }
    let z_principal = wrap_to_pi(z_in);
    if z_principal.abs() >= PI - CUSP_TOL {
        return Err(SolverError::CuspAtRobinBoundary(theta));
    }
    let (c, _) = model.wave_speed(theta);
    let tz = (0.5 * z_principal).tan();
    let tw = tz - 2.0 * iota * c * theta;
    let w_principal = 2.0 * tw.atan();
    let winding = z_in - z_principal;
    let p = q_in * (1.0 + tw * tw) / (1.0 + tz * tz);
    Ok((w_principal + winding, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn state(w: f64, z: f64, p: f64, q: f64) -> RiemannState {
        RiemannState {
            r: 0.0,
            s: 0.0,
            w,
            z,
            p,
            q,
        }
    }

    fn unit_model() -> MaterialModel {
        MaterialModel::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn rest_state_is_stationary() {
        let rhs = rhs_semilinear(&state(0.0, 0.0, 1.0, 1.0), 0.0, 0.0, &unit_model());
        assert_eq!(rhs.theta_x, 0.0);
        assert_eq!(rhs.theta_y, 0.0);
        assert_eq!(rhs.w_y, 0.0);
        assert_eq!(rhs.z_x, 0.0);
        assert_eq!(rhs.p_y, 0.0);
        assert_eq!(rhs.q_x, 0.0);
    }

    #[test]
    fn double_cusp_freezes_all_derivatives() {
        // At w = z = pi every trigonometric weight vanishes: the cusp set is
        // invariant under the flow even with forcing present.
        let m = MaterialModel::new(1.0, 2.5).unwrap();
        let rhs = rhs_semilinear(&state(PI, PI, 2.0, 3.0), 0.7, 5.0, &m);
        assert!(rhs.theta_x.abs() < 1e-15);
        assert!(rhs.theta_y.abs() < 1e-15);
        assert!(rhs.w_y.abs() < 1e-15);
        assert!(rhs.z_x.abs() < 1e-15);
        assert!(rhs.p_y.abs() < 1e-15);
        assert!(rhs.q_x.abs() < 1e-15);
    }

    #[test]
    fn hand_computed_values() {
        // c = 1, c' = 0, w = pi/2, z = 0, p = q = 1, J = 1:
        // theta_X = 1/4; w_Y = (1/4)(-1 - 4 * 1/2) = -3/4.
        let rhs = rhs_semilinear(&state(FRAC_PI_2, 0.0, 1.0, 1.0), 0.0, 1.0, &unit_model());
        assert!((rhs.theta_x - 0.25).abs() < 1e-15);
        assert!((rhs.w_y + 0.75).abs() < 1e-14);
    }

    #[test]
    fn periodicity_in_both_angles() {
        let m = MaterialModel::new(0.8, 1.7).unwrap();
        let a = rhs_semilinear(&state(0.4, -1.1, 1.5, 0.6), 0.3, -0.2, &m);
        let b = rhs_semilinear(
            &state(0.4 + 2.0 * PI, -1.1 - 4.0 * PI, 1.5, 0.6),
            0.3,
            -0.2,
            &m,
        );
        assert!((a.w_y - b.w_y).abs() < 1e-13);
        assert!((a.z_x - b.z_x).abs() < 1e-13);
        assert!((a.p_y - b.p_y).abs() < 1e-13);
        assert!((a.q_x - b.q_x).abs() < 1e-13);
    }

    #[test]
    fn left_wall_closure_reflects() {
        let (w, p) = apply_boundary_l0(0.3, 2.0);
        assert_eq!(w, -0.3);
        assert_eq!(p, 2.0);
    }

    #[test]
    fn right_wall_neumann_is_identity() {
        let (w, p) = apply_boundary_lpi(1.2 + 2.0 * PI, 0.7, 0.4, 0.0, &unit_model()).unwrap();
        assert_eq!(w, 1.2 + 2.0 * PI);
        assert_eq!(p, 0.7);
    }

    #[test]
    fn right_wall_robin_closure() {
        // iota = 1, c = 1, theta = 0.5, z = 0: tan(w/2) = -1, so w = -pi/2
        // and p = 2q.
        let (w, p) = apply_boundary_lpi(0.0, 1.5, 0.5, 1.0, &unit_model()).unwrap();
        assert!((w + FRAC_PI_2).abs() < 1e-14);
        assert!((p - 3.0).abs() < 1e-14);
    }

    #[test]
    fn right_wall_cusp_is_reported() {
        let err = apply_boundary_lpi(PI, 1.0, 0.2, 1.0, &unit_model()).unwrap_err();
        assert!(matches!(err, SolverError::CuspAtRobinBoundary(_)));
    }

    #[test]
    fn winding_is_preserved_through_the_robin_wall() {
        let m = unit_model();
        let (w0, _) = apply_boundary_lpi(0.3, 1.0, 0.2, 0.5, &m).unwrap();
        let (w1, _) = apply_boundary_lpi(0.3 + 2.0 * PI, 1.0, 0.2, 0.5, &m).unwrap();
        assert!((w1 - w0 - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_to_pi(3.0 * PI) - PI).abs() < 1e-13);
        assert!((wrap_to_pi(-0.2) + 0.2).abs() < 1e-13);
        assert!((wrap_to_pi(2.0 * PI + 0.1) - 0.1).abs() < 1e-13);
    }
}
