//! Solver suite for the 1-D Poiseuille flow of a nematic liquid crystal with
//! director inertia: the coupled hyperbolic-parabolic system
//!
//! ```text
//! u_t = (u_x + theta_t)_x,
//! theta_tt + 2 theta_t = c(theta) (c(theta) theta_x)_x - u_x,
//! ```
//!
//! on `x in [0, pi]`, where `c(theta) = sqrt(K1 cos^2 theta + K3 sin^2 theta)`.
//!
//! The wave part is solved in characteristic coordinates, where the equation
//! becomes semilinear and Hoelder-continuous (possibly cusped) solutions stay
//! representable. The shear stress `J = u_x + theta_t` satisfies a forced heat
//! equation on the interval; it is updated through image-method heat kernels
//! and Duhamel integrals, and the two halves are coupled by Picard iteration
//! on time windows. An independent finite-difference solver and a set of
//! energy / weak-form diagnostics cross-check the pipeline.

pub mod charwave;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod heatkernel;
pub mod model;
pub mod oracle_fd;
pub mod runner;
pub mod util;

pub use error::SolverError;
pub use model::{BoundarySpec, InitialData, MaterialModel, ProblemSpec, VelocityBc};
