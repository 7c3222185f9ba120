use crate::base::{CylPoint, Tolerances};
use crate::error::{invalid, Result};
use crate::numerics::bessel::i_scaled_reduced;
use crate::numerics::quad::integrate_pts;
use std::f64::consts::PI;

/// Heat kernel of `R^m` averaged over the sphere `|z~| = rho`, as a density
/// against `rho^{m-1} d rho`.
pub fn tangential_kernel(r: f64, rho: f64, tau: f64, m: usize) -> f64 {
    let nu = m as f64 / 2.0 - 1.0;
    (2.0 * tau).powf(-(m as f64) / 2.0) * (-(r - rho).powi(2) / (4.0 * tau)).exp() * i_scaled_reduced(nu, r * rho / (2.0 * tau))
}

/// One-dimensional Neumann kernel in the normal variable.
fn normal_kernel(x: f64, z: f64, tau: f64) -> f64 {
    (4.0 * PI * tau).powf(-0.5) * ((-(x - z).powi(2) / (4.0 * tau)).exp() + (-(x + z).powi(2) / (4.0 * tau)).exp())
}

type Src3<'a> = &'a (dyn Fn(f64, f64, f64) -> f64 + Sync);
type Src2<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// Data of the linear problem `u_t = Delta u + g`, `-d_n u = h`, `u(t0) = f0`,
/// all radial in `x~` about the axis.
pub struct DuhamelData<'a> {
    pub dim: usize,
    pub t0: f64,
    /// `g(r, xn, s)`
    pub interior: Option<Src3<'a>>,
    /// `h(r, s)`
    pub boundary: Option<Src2<'a>>,
    /// `f0(r, xn)`
    pub initial: Option<Src2<'a>>,
}

const WIDTH: f64 = 12.0;
const MAX_SEG: usize = 400;

fn window(c: f64, tau: f64) -> Vec<f64> {
    let w = WIDTH * tau.sqrt();
    let lo = (c - w).max(0.0);
    if c > lo { vec![lo, c, c + w] } else { vec![lo, c + w] }
}

fn tangential_conv(f: &dyn Fn(f64) -> f64, r: f64, tau: f64, m: usize, tol: &Tolerances) -> Result<f64> {
    let g = |rho: f64| rho.powi(m as i32 - 1) * tangential_kernel(r, rho, tau, m) * f(rho);
    Ok(integrate_pts(g, &window(r, tau), tol.quad_abs * 1e-2, tol.quad_rel * 1e-2, MAX_SEG)?.value)
}

fn space_conv(f: &dyn Fn(f64, f64) -> f64, x: CylPoint, tau: f64, tol: &Tolerances) -> Result<f64> {
    let m = x.dim - 1;
    let mut err = None;
    let outer = |zn: f64| {
        let kn = normal_kernel(x.xn, zn, tau);
        if kn == 0.0 {
            return 0.0;
        }
        match tangential_conv(&|rho| f(rho, zn), x.r, tau, m, tol) {
            Ok(v) => kn * v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    };
    let v = integrate_pts(outer, &window(x.xn, tau), tol.quad_abs * 1e-1, tol.quad_rel * 1e-1, MAX_SEG)?.value;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Three-term Green representation of the solution at `(x, t)`.
///
/// Time integrals use `t - s = u^2`, which cancels the `(t-s)^{-1/2}`
/// singularity of the boundary term.
pub fn duhamel(data: &DuhamelData, x: CylPoint, t: f64, tol: &Tolerances) -> Result<f64> {
    if !(t > data.t0) {
        return invalid("evaluation time must follow the initial time");
    }
    if x.dim != data.dim {
        return invalid("point dimension does not match data");
    }
    let m = data.dim - 1;
    let umax = (t - data.t0).sqrt();
    let mut total = 0.0;
    if let Some(f0) = data.initial {
        total += space_conv(f0, x, t - data.t0, tol)?;
    }
    if let Some(g) = data.interior {
        let mut err = None;
        let integrand = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let s = t - u * u;
            match space_conv(&|rho, zn| g(rho, zn, s), x, u * u, tol) {
                Ok(v) => 2.0 * u * v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        };
        total += integrate_pts(integrand, &[0.0, umax], tol.quad_abs, tol.quad_rel, MAX_SEG)?.value;
        if let Some(e) = err {
            return Err(e);
        }
    }
    if let Some(h) = data.boundary {
        let mut err = None;
        let integrand = |u: f64| {
            let s = t - u * u;
            let tau = u * u;
            // 2u * 2 (4 pi u^2)^{-1/2} = 2 / sqrt(pi)
            let kn = 2.0 / PI.sqrt() * if u == 0.0 { if x.xn == 0.0 { 1.0 } else { 0.0 } } else { (-x.xn * x.xn / (4.0 * tau)).exp() };
            if kn == 0.0 {
                return 0.0;
            }
            if u == 0.0 {
                return kn * h(x.r, t);
            }
            match tangential_conv(&|rho| h(rho, s), x.r, tau, m, tol) {
                Ok(v) => kn * v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        };
        total += integrate_pts(integrand, &[0.0, umax], tol.quad_abs, tol.quad_rel, MAX_SEG)?.value;
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(total)
}
