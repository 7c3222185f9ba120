//! Shared domain types, the cutoff and coordinate maps.

mod coords;
mod cutoff;

pub use coords::{inner_coords, selfsim_coords, selfsim_inverse};
pub use cutoff::{cutoff_eta, eta, eta_d1, eta_d2, RadialCutoff};

use crate::error::{invalid, BblError, Result};
use serde::{Deserialize, Serialize};

/// Point of the closed half-space in cylindrical form.
///
/// `r = |x~|` is measured from the frame axis, `xn` is the normal coordinate.
/// Where a signed tangential coordinate is needed the point is read in the
/// axis plane `x~ = r e_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylPoint {
    pub r: f64,
    pub xn: f64,
    pub dim: usize,
}

impl CylPoint {
    pub fn new(r: f64, xn: f64, dim: usize) -> Result<Self> {
        if !(r >= 0.0) || !(xn >= 0.0) {
            return invalid(format!("cylindrical point needs r >= 0 and xn >= 0, got ({r}, {xn})"));
        }
        if dim < 3 {
            return invalid(format!("dimension must be at least 3, got {dim}"));
        }
        Ok(Self { r, xn, dim })
    }

    /// Unchecked constructor for hot loops; callers guarantee the invariants.
    #[inline]
    pub fn at(r: f64, xn: f64, dim: usize) -> Self {
        debug_assert!(r >= 0.0 && xn >= 0.0 && dim >= 3);
        Self { r, xn, dim }
    }

    #[inline]
    pub fn norm2(&self) -> f64 {
        self.r * self.r + self.xn * self.xn
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }
}

/// Time window `0 <= t < T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    #[serde(rename = "T")]
    pub big_t: f64,
    pub t: f64,
}

impl TimeWindow {
    pub fn new(big_t: f64, t: f64) -> Result<Self> {
        if !(big_t > 0.0) {
            return invalid(format!("blow-up time must be positive, got {big_t}"));
        }
        if !(t < big_t) {
            return Err(BblError::PastBlowup { t, big_t });
        }
        if t < 0.0 {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        Ok(Self { big_t, t })
    }

    /// Remaining time `T - t`.
    #[inline]
    pub fn tau(&self) -> f64 {
        self.big_t - self.t
    }

    /// Self-similar time `s = -ln(T - t)`.
    #[inline]
    pub fn s(&self) -> f64 {
        -self.tau().ln()
    }
}

/// One concentration bubble in the cylindrical reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    /// Scale `mu > 0`.
    pub mu: f64,
    /// Tangential offset of the center from the anchor, along `e_1`.
    pub xi_offset: f64,
    /// Distance of the evaluation point to the anchor.
    pub anchor_r: f64,
    /// Caloric order.
    pub l: u32,
}

impl BubbleParams {
    pub fn new(mu: f64, xi_offset: f64, anchor_r: f64, l: u32) -> Result<Self> {
        if !(mu > 0.0) {
            return invalid(format!("bubble scale must be positive, got {mu}"));
        }
        if !(anchor_r >= 0.0) {
            return invalid("anchor distance must be nonnegative");
        }
        Ok(Self { mu, xi_offset, anchor_r, l })
    }

    /// Centered bubble of scale `mu`.
    pub fn centered(mu: f64, l: u32) -> Result<Self> {
        Self::new(mu, 0.0, 0.0, l)
    }
}

/// Numerical tolerances shared by the routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quad_abs: f64,
    pub quad_rel: f64,
    /// Step for central first differences; second-difference stencils use `100 * fd_step`.
    pub fd_step: f64,
    pub eig_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quad_abs: 1e-10, quad_rel: 1e-8, fd_step: 1e-5, eig_tol: 1e-9 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("quad_abs", self.quad_abs),
            ("quad_rel", self.quad_rel),
            ("fd_step", self.fd_step),
            ("eig_tol", self.eig_tol),
        ] {
            if !(v > 0.0) {
                return invalid(format!("tolerance {k} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Step for second-derivative stencils.
    pub fn fd2_step(&self) -> f64 {
        100.0 * self.fd_step
    }

    /// Every tolerance scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            quad_abs: self.quad_abs * k,
            quad_rel: self.quad_rel * k,
            fd_step: self.fd_step,
            eig_tol: self.eig_tol * k,
        }
    }
}
