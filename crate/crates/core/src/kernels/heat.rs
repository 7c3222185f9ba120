use crate::base::CylPoint;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Kernel evaluation point. `plane_offset` is the tangential distance `|x~ - z~|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelQuery {
    pub x: CylPoint,
    pub t: f64,
    pub z: CylPoint,
    pub s: f64,
    pub plane_offset: f64,
}

impl HeatKernelQuery {
    pub fn new(x: CylPoint, t: f64, z: CylPoint, s: f64, plane_offset: f64) -> Result<Self> {
        if !(t > s) {
            return invalid(format!("kernel needs t > s, got t={t}, s={s}"));
        }
        if !(plane_offset >= 0.0) {
            return invalid("tangential offset must be nonnegative");
        }
        Ok(Self { x, t, z, s, plane_offset })
    }

    /// Points on a common ray from the axis, so `|x~ - z~| = |x.r - z.r|`.
    pub fn aligned(x: CylPoint, t: f64, z: CylPoint, s: f64) -> Result<Self> {
        Self::new(x, t, z, s, (x.r - z.r).abs())
    }
}

/// Neumann heat kernel: free Gaussian plus its reflection across `x_n = 0`.
pub fn g_n(q: &HeatKernelQuery, n: usize) -> Result<f64> {
    if !(q.t > q.s) {
        return invalid("kernel needs t > s");
    }
    let tau = q.t - q.s;
    let d2 = q.plane_offset * q.plane_offset;
    let a = (-(d2 + (q.x.xn - q.z.xn).powi(2)) / (4.0 * tau)).exp();
    let b = (-(d2 + (q.x.xn + q.z.xn).powi(2)) / (4.0 * tau)).exp();
    Ok((4.0 * PI * tau).powf(-(n as f64) / 2.0) * (a + b))
}

/// Self-similar kernel from its direct closed form. Here `plane_offset`
/// is `|e^{(sigma-s)/2} z~ - w~|`.
pub fn h_n(z: CylPoint, s: f64, w: CylPoint, sigma: f64, plane_offset: f64, n: usize) -> Result<f64> {
    if !(s > sigma) {
        return invalid(format!("self-similar kernel needs s > sigma, got s={s}, sigma={sigma}"));
    }
    let e = (sigma - s).exp();
    let d = -(sigma - s).exp_m1();
    let c = e.sqrt();
    let t2 = plane_offset * plane_offset;
    let a = (-(t2 + (c * z.xn - w.xn).powi(2)) / (4.0 * d)).exp();
    let b = (-(t2 + (c * z.xn + w.xn).powi(2)) / (4.0 * d)).exp();
    Ok((4.0 * PI * d).powf(-(n as f64) / 2.0) * (a + b))
}

/// Self-similar kernel as `e^{-sigma n/2} G_n(e^{-s/2} z, t3 - e^{-s}, e^{-sigma/2} w, t3 - e^{-sigma})`.
pub fn h_n_via_g(z: CylPoint, s: f64, w: CylPoint, sigma: f64, plane_offset: f64, n: usize, t3: f64) -> Result<f64> {
    if !(s > sigma) {
        return invalid("self-similar kernel needs s > sigma");
    }
    let ks = (-s / 2.0).exp();
    let kw = (-sigma / 2.0).exp();
    let x = CylPoint::at(ks * z.r, ks * z.xn, n);
    let y = CylPoint::at(kw * w.r, kw * w.xn, n);
    // the physical tangential offset is e^{-sigma/2} times the scaled one
    let q = HeatKernelQuery { x, t: t3 - (-s).exp(), z: y, s: t3 - (-sigma).exp(), plane_offset: kw * plane_offset };
    Ok((-sigma * n as f64 / 2.0).exp() * g_n(&q, n)?)
}
