//! Characteristic-coordinate solver for the forced damped variational wave
//! equation.
//!
//! In the coordinates `(X, Y)` built from the initial characteristics the
//! wave equation becomes a semilinear system for `(theta, w, z, p, q)` with
//! bounded right sides, so Hoelder-continuous solutions with cusps
//! (`|w| = pi`, i.e. unbounded `theta_x`) remain representable. The module
//! builds the initial curve, marches the lattice with the wall closures,
//! maps the result back to physical coordinates, and evaluates the wave
//! energy as a line integral over level sets of `t`.

pub mod curve;
pub mod energy;
pub mod invert;
pub mod march;
pub mod rhs;

pub use curve::{build_curve_from_samples, build_initial_curve, Gamma0Curve};
pub use energy::energy_char;
pub use invert::invert_map;
pub use march::{march, CharGrid, CharNode, Column};
pub use rhs::{
    apply_boundary_l0, apply_boundary_lpi, rhs_semilinear, wrap_to_pi, SemilinearRhs,
};
