//! Interval heat kernels, the Duhamel map defining the fixed point for the
//! shear stress `J`, and the integral reconstruction of the velocity `u`.

pub mod duhamel;
pub mod kernels;
pub mod reconstruct;

pub use duhamel::{duhamel_j, DuhamelParams};
pub use kernels::{
    dgreen_dx, dgreen_dxi, dneumann_dx, dneumann_dxi, g0, green, images_needed, neumann,
    ImageKernel, KernelKind, TAIL_TOL,
};
pub use reconstruct::reconstruct_u;
