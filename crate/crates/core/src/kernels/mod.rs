//! Neumann heat kernels of the half-space, Duhamel representation, barrier
//! functions, convolution-bound checkers and a small Picard solver for the
//! inner linear problem.

mod barrier;
mod bounds;
mod duhamel;
mod heat;
mod picard;

pub use barrier::{barrier_check, barrier_derivatives, barrier_f_poly, barrier_theta_threshold, BarrierMargins};
pub use bounds::{bound_ratio, BoundFamily, BoundReport, BoundSample, FamilyId};
pub use duhamel::{duhamel, tangential_kernel, DuhamelData};
pub use heat::{g_n, h_n, h_n_via_g, HeatKernelQuery};
pub use picard::{fd_extrapolated, fd_reference, picard_inner, PicardGrid, PicardResult};
