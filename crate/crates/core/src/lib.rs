//! Numerical laboratory for the heat equation on the half-space with the
//! critical nonlinear Neumann condition `-d_n u = |u|^{2/(n-2)} u`.
//!
//! Module map:
//! - [`base`]: shared types, the cutoff, coordinate maps
//! - [`profiles`]: steady profile, kernels, variational functionals
//! - [`spectral`]: caloric polynomials, Hermite basis, localized basis
//! - [`kernels`]: Neumann heat kernel, Duhamel solver, bound checkers
//! - [`eigensolver`]: negative eigenpair of the linearized problem
//! - [`modulation`]: scale constant and modulation ODEs
//! - [`ansatz`]: multi-bubble approximate solution and its errors
//! - [`simulator`]: finite-difference solver and rate fits
//! - [`cli`]: command-line wiring

pub mod error;
pub mod numerics;

pub mod base;
pub mod profiles;
pub mod spectral;
pub mod kernels;
pub mod eigensolver;
pub mod modulation;
pub mod ansatz;
pub mod simulator;
pub mod cli;

pub use error::{BblError, Result};
