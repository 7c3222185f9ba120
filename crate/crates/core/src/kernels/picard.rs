use super::duhamel::tangential_kernel;
use crate::error::{invalid, BblError, Result};
use crate::numerics::quad::{gauss_legendre, gl_interval};
use crate::profiles::CylField;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform grid on `[0, length]^2` in `(r, xn)` with `nt` time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardGrid {
    pub dim: usize,
    pub nr: usize,
    pub nn: usize,
    pub length: f64,
    pub nt: usize,
}

impl PicardGrid {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 || self.nr < 3 || self.nn < 3 || self.nt < 1 {
            return invalid("Picard grid too small");
        }
        if self.nr > 64 || self.nn > 64 || self.nt > 64 {
            return invalid("Picard grid limited to 64 nodes per axis and 64 steps");
        }
        if !(self.length > 0.0) {
            return invalid("Picard domain length must be positive");
        }
        Ok(())
    }
    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.nr).map(|i| self.length * i as f64 / (self.nr - 1) as f64).collect()
    }
    pub fn xn_nodes(&self) -> Vec<f64> {
        (0..self.nn).map(|i| self.length * i as f64 / (self.nn - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PicardResult {
    pub times: Vec<f64>,
    pub r_nodes: Vec<f64>,
    /// Boundary trace `phi(r_i, 0, tau_m)`, one row per time.
    pub boundary: Vec<Vec<f64>>,
    /// Full fields at the output times.
    pub fields: Vec<CylField>,
    /// Sup-norm gap between successive iterates.
    pub gaps: Vec<f64>,
}

const Q_NODES: usize = 8;
const WIDTH: f64 = 12.0;

/// `int w(rho) K(r, rho) hat_j(rho) d rho` for every node `r_i` and hat `j`,
/// where `K` has width `sqrt(lambda)`.
fn hat_matrix(nodes: &[f64], lambda: f64, kernel: &(dyn Fn(f64, f64) -> f64 + Sync)) -> DMatrix<f64> {
    let n = nodes.len();
    let dx = nodes[1] - nodes[0];
    let w = WIDTH * lambda.sqrt();
    let sub = dx.min(2.0 * lambda.sqrt());
    let (gx, gw) = gauss_legendre(Q_NODES);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = nodes[i];
        for j in 0..n {
            let mut acc = 0.0;
            for side in 0..2 {
                // left piece rises on [x_{j-1}, x_j], right piece falls on [x_j, x_{j+1}]
                let (a, b) = if side == 0 {
                    if j == 0 {
                        continue;
                    }
                    (nodes[j - 1], nodes[j])
                } else {
                    if j == n - 1 {
                        continue;
                    }
                    (nodes[j], nodes[j + 1])
                };
                let lo = a.max(xi - w);
                let hi = b.min(xi + w);
                if hi <= lo {
                    continue;
                }
                let pieces = ((hi - lo) / sub).ceil().max(1.0) as usize;
                let h = (hi - lo) / pieces as f64;
                for p in 0..pieces {
                    let c = lo + (p as f64 + 0.5) * h;
                    for (x, wt) in gx.iter().zip(&gw) {
                        let z = c + 0.5 * h * x;
                        let hat = if side == 0 { (z - a) / dx } else { (b - z) / dx };
                        acc += 0.5 * h * wt * hat * kernel(xi, z);
                    }
                }
            }
            m[(i, j)] = acc;
        }
    }
    m
}

struct LagNode {
    lambda: f64,
    /// quadrature weight including `ds = 2u du`
    weight: f64,
    /// position of `s` inside its step, 0 at the left end
    frac: f64,
    kt: DMatrix<f64>,
    kn: DMatrix<f64>,
}

fn lag_nodes(grid: &PicardGrid, delta: f64) -> Vec<Vec<LagNode>> {
    let m = grid.dim - 1;
    let r = grid.r_nodes();
    let z = grid.xn_nodes();
    let kt_kernel = move |x: f64, rho: f64, lam: f64| rho.powi(m as i32 - 1) * tangential_kernel(x, rho, lam, m);
    let kn_kernel = |x: f64, zz: f64, lam: f64| {
        (4.0 * PI * lam).powf(-0.5) * ((-(x - zz).powi(2) / (4.0 * lam)).exp() + (-(x + zz).powi(2) / (4.0 * lam)).exp())
    };
    (0..grid.nt)
        .map(|q| {
            let (ua, ub) = ((q as f64 * delta).sqrt(), ((q + 1) as f64 * delta).sqrt());
            let (ux, uw) = gl_interval(if q == 0 { 2 * Q_NODES } else { Q_NODES }, ua, ub);
            ux.iter()
                .zip(&uw)
                .map(|(&u, &wu)| {
                    let lambda = u * u;
                    LagNode {
                        lambda,
                        weight: 2.0 * u * wu,
                        frac: ((q + 1) as f64 * delta - lambda) / delta,
                        kt: hat_matrix(&r, lambda, &|x, rho| kt_kernel(x, rho, lambda)),
                        kn: hat_matrix(&z, lambda, &|x, zz| kn_kernel(x, zz, lambda)),
                    }
                })
                .collect()
        })
        .collect()
}

/// Fixed-point iteration of the Green representation of
/// `phi_t = Delta phi + g`, `-d_n phi = (n/(n-2)) U^{2/(n-2)} phi + h`,
/// `phi(tau0) = 0`, with piecewise-linear data in space and time.
///
/// The boundary trace is iterated on its own; full fields are assembled at
/// every `field_every`-th step and at the final time.
pub fn picard_inner(
    g: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    h: &(dyn Fn(f64, f64) -> f64 + Sync),
    grid: &PicardGrid,
    tau0: f64,
    tau1: f64,
    iterations: usize,
    field_every: usize,
) -> Result<PicardResult> {
    grid.validate()?;
    if !(tau1 > tau0) {
        return invalid("Picard window needs tau1 > tau0");
    }
    let nt = grid.nt;
    let delta = (tau1 - tau0) / nt as f64;
    let times: Vec<f64> = (0..=nt).map(|k| tau0 + k as f64 * delta).collect();
    let r = grid.r_nodes();
    let z = grid.xn_nodes();
    let nf = grid.dim as f64;
    let feedback: DVector<f64> = DVector::from_iterator(grid.nr, r.iter().map(|ri| nf / (1.0 + ri * ri)));
    let gs: Vec<DMatrix<f64>> = times.iter().map(|&t| DMatrix::from_fn(grid.nr, grid.nn, |i, k| g(r[i], z[k], t))).collect();
    let hs: Vec<DVector<f64>> = times.iter().map(|&t| DVector::from_iterator(grid.nr, r.iter().map(|&ri| h(ri, t)))).collect();
    let lags = lag_nodes(grid, delta);

    // boundary weights for the feedback and flux terms at x_n = 0
    let bw = 2.0 / PI.sqrt();
    let mut wl = Vec::with_capacity(nt);
    let mut wr = Vec::with_capacity(nt);
    for nodes in &lags {
        let mut a = DMatrix::zeros(grid.nr, grid.nr);
        let mut b = DMatrix::zeros(grid.nr, grid.nr);
        for ln in nodes {
            // weight * 2 (4 pi lambda)^{-1/2} = w_u * 2/sqrt(pi)
            let c = ln.weight / (2.0 * ln.lambda.sqrt()) * bw;
            a += &ln.kt * (c * (1.0 - ln.frac));
            b += &ln.kt * (c * ln.frac);
        }
        wl.push(a);
        wr.push(b);
    }

    // interior source contribution to the boundary trace
    let mut ig: Vec<DVector<f64>> = vec![DVector::zeros(grid.nr); nt + 1];
    for m in 1..=nt {
        let mut acc = DVector::zeros(grid.nr);
        for q in 0..m {
            for ln in &lags[q] {
                let row0 = ln.kn.row(0).transpose();
                let left = &gs[m - 1 - q] * &row0;
                let right = &gs[m - q] * &row0;
                acc += &ln.kt * (left * (ln.weight * (1.0 - ln.frac)) + right * (ln.weight * ln.frac));
            }
        }
        ig[m] = acc;
    }

    let mut phi: Vec<DVector<f64>> = vec![DVector::zeros(grid.nr); nt + 1];
    let mut gaps = Vec::new();
    for _ in 0..iterations.max(1) {
        let flux: Vec<DVector<f64>> = (0..=nt).map(|m| feedback.component_mul(&phi[m]) + &hs[m]).collect();
        let mut next = vec![DVector::zeros(grid.nr); nt + 1];
        for m in 1..=nt {
            let mut v = ig[m].clone();
            for q in 0..m {
                v += &wl[q] * &flux[m - 1 - q] + &wr[q] * &flux[m - q];
            }
            next[m] = v;
        }
        let gap = phi.iter().zip(&next).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        let scale = next.iter().map(|v| v.amax()).fold(0.0, f64::max);
        if !gap.is_finite() {
            return Err(BblError::NonContraction("iterates are not finite".into()));
        }
        gaps.push(gap);
        phi = next;
        if gap <= 1e-14 * scale || scale == 0.0 {
            break;
        }
    }
    if gaps.len() > 3 && gaps[gaps.len() - 1] > gaps[0] {
        return Err(BblError::NonContraction(format!("iterate gap grew from {:.3e} to {:.3e}", gaps[0], gaps[gaps.len() - 1])));
    }

    let flux: Vec<DVector<f64>> = (0..=nt).map(|m| feedback.component_mul(&phi[m]) + &hs[m]).collect();
    let mut fields = Vec::new();
    let every = field_every.max(1);
    for m in (1..=nt).filter(|m| m % every == 0 || *m == nt) {
        let mut f = DMatrix::zeros(grid.nr, grid.nn);
        for q in 0..m {
            for ln in &lags[q] {
                let src = &gs[m - 1 - q] * (1.0 - ln.frac) + &gs[m - q] * ln.frac;
                f += &ln.kt * src * ln.kn.transpose() * ln.weight;
                let bflux = &flux[m - 1 - q] * (1.0 - ln.frac) + &flux[m - q] * ln.frac;
                let tr = &ln.kt * bflux;
                let c = ln.weight * 2.0 * (4.0 * PI * ln.lambda).powf(-0.5);
                for k in 0..grid.nn {
                    let e = c * (-z[k] * z[k] / (4.0 * ln.lambda)).exp();
                    if e != 0.0 {
                        for i in 0..grid.nr {
                            f[(i, k)] += e * tr[i];
                        }
                    }
                }
            }
        }
        let values: Vec<f64> = (0..grid.nr).flat_map(|i| (0..grid.nn).map(move |k| (i, k))).map(|(i, k)| f[(i, k)]).collect();
        fields.push(CylField::new(grid.dim, r.clone(), z.clone(), values, Some(times[m]))?);
    }
    let boundary = phi.iter().map(|v| v.iter().copied().collect()).collect();
    Ok(PicardResult { times, r_nodes: r, boundary, fields, gaps })
}

/// Explicit finite differences for the same problem on `[0, length]^2`
/// with spacing `hx`, zero Dirichlet data on the far sides and a ghost
/// row for the Robin condition. Returns the field at `tau1`.
pub fn fd_reference(
    g: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    h: &(dyn Fn(f64, f64) -> f64 + Sync),
    dim: usize,
    length: f64,
    hx: f64,
    tau0: f64,
    tau1: f64,
) -> Result<CylField> {
    if dim < 3 || !(hx > 0.0 && length > 2.0 * hx && tau1 > tau0) {
        return invalid("bad finite-difference setup");
    }
    let n = (length / hx).round() as usize + 1;
    let nf = dim as f64;
    let r: Vec<f64> = (0..n).map(|i| i as f64 * hx).collect();
    let steps = ((tau1 - tau0) / (0.08 * hx * hx)).ceil() as usize;
    let dt = (tau1 - tau0) / steps as f64;
    let mut u = vec![0.0; n * n];
    let mut next = vec![0.0; n * n];
    let idx = |i: usize, k: usize| i * n + k;
    let h2 = hx * hx;
    for step in 0..steps {
        let t = tau0 + step as f64 * dt;
        for (i, row) in next.chunks_mut(n).enumerate() {
            for k in 0..n {
                if i == n - 1 || k == n - 1 {
                    row[k] = 0.0;
                    continue;
                }
                let c = u[idx(i, k)];
                let lap_r = if i == 0 {
                    (nf - 1.0) * 2.0 * (u[idx(1, k)] - c) / h2
                } else {
                    let up = u[idx(i + 1, k)];
                    let dn = u[idx(i - 1, k)];
                    (up - 2.0 * c + dn) / h2 + (nf - 2.0) / r[i] * (up - dn) / (2.0 * hx)
                };
                let lap_n = if k == 0 {
                    let ghost = u[idx(i, 1)] + 2.0 * hx * (nf / (1.0 + r[i] * r[i]) * c + h(r[i], t));
                    (u[idx(i, 1)] - 2.0 * c + ghost) / h2
                } else {
                    (u[idx(i, k + 1)] - 2.0 * c + u[idx(i, k - 1)]) / h2
                };
                row[k] = c + dt * (lap_r + lap_n + g(r[i], r[k], t));
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    CylField::new(dim, r.clone(), r, u, Some(tau1))
}

/// Richardson combination of [`fd_reference`] at spacings `2 hx` and `hx`,
/// returned on the coarse nodes.
pub fn fd_extrapolated(
    g: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    h: &(dyn Fn(f64, f64) -> f64 + Sync),
    dim: usize,
    length: f64,
    hx: f64,
    tau0: f64,
    tau1: f64,
) -> Result<CylField> {
    let coarse = fd_reference(g, h, dim, length, 2.0 * hx, tau0, tau1)?;
    let fine = fd_reference(g, h, dim, length, hx, tau0, tau1)?;
    let n = coarse.r_nodes.len();
    let values = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .map(|(i, k)| (4.0 * fine.get(2 * i, 2 * k) - coarse.get(i, k)) / 3.0)
        .collect();
    CylField::new(dim, coarse.r_nodes.clone(), coarse.xn_nodes.clone(), values, Some(tau1))
}
