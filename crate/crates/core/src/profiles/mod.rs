//! Steady profile `U`, its dilations, the kernels `Z_1..Z_n` and the
//! variational functionals of the trace problem.

mod field;
mod functionals;
mod grid;
mod steady;
pub mod bumps;

pub use field::{CylField, CylFunction, FnField, ProfileField, Scaled};
pub use functionals::{
    boundary_power, dirichlet_energy, functional_i, functional_j, quadform_bu, rayleigh_q, sharp_trace_constant,
};
pub use grid::QuadratureGrid;
pub use steady::{
    eval_u, eval_u_full, eval_u_scaled, eval_z, eval_z_vec, grad_u_vec, kernel_residuals, u_vec, z_dn_vec,
    ProfileEval, GENERIC_DIRECTION,
};
