//! Caloric functions `Theta_l`, the Hermite eigenbasis of
//! `A_z = Delta - z/2 . grad` on the half-space, eigenvalue counting,
//! Gaussian-weighted inner products and the localized dual basis.

mod hermite;
mod laguerre;
mod localized;

pub use hermite::{
    az_eigen_residual, eig_count_neumann, hermite_tilde, inner_rho, neumann_eigenfunctions, Domain, EigenFunction,
    HermiteTilde, MultiIndex,
};
pub use laguerre::{laguerre_mod, theta, theta_coeffs, theta_heat_identity_exact, theta_heat_residual, LaguerrePoly};
pub use localized::{basis_size_for_order, build_localized_basis, LocalizedBasis};
