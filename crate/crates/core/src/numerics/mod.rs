//! Numerical building blocks: quadrature rules, Bessel functions,
//! exact polynomial arithmetic and small regression helpers.

pub mod bessel;
pub mod fit;
pub mod poly;
pub mod quad;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Surface measure of the unit sphere `S^{k-1}` in `R^k`.
pub fn sphere_area(k: usize) -> f64 {
    let h = k as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}
