//! Scale constant, leading scale law and the first-order modulation ODEs.

use crate::base::{eta, BubbleParams, Tolerances};
use crate::error::{invalid, BblError, Result};
use crate::numerics::fit::linear_fit;
use crate::numerics::quad::{gauss_legendre, integrate_pts, integrate_to_inf};
use crate::numerics::sphere_area;
use crate::spectral::theta_coeffs;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

const ANGLE_NODES: usize = 24;

fn d_base(r2: f64, xn: f64) -> f64 {
    r2 + (1.0 + xn) * (1.0 + xn)
}

/// `c(x) = (n-2)^{n/2} D^{-n/2}`, so `Z_j = -c y_j` and `Z_n = c (1-|y|^2)/2`.
fn kernel_factor(n: usize, r2: f64, xn: f64) -> f64 {
    let nf = n as f64;
    (nf - 2.0).powf(nf / 2.0) * d_base(r2, xn).powf(-nf / 2.0)
}

/// Sphere-averaged `Z_j^2` at cylindrical `(r, xn)`; `j = n` is radial.
fn z_sq_avg(n: usize, j: usize, r: f64, xn: f64) -> f64 {
    let c = kernel_factor(n, r * r, xn);
    if j == n {
        let v = 0.5 * c * (1.0 - r * r - xn * xn);
        v * v
    } else {
        c * c * r * r / (n as f64 - 1.0)
    }
}

/// `int_{R^n_+} eta(|y|/(4R)) Z_j^2 dy`, or the full integral when `r_cut` is infinite.
fn kernel_mass(n: usize, j: usize, r_cut: f64, tol: &Tolerances) -> Result<f64> {
    let (gx, gw) = gauss_legendre(ANGLE_NODES);
    let shell = |rho: f64| {
        let mut s = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let th = FRAC_PI_2 * 0.5 * (x + 1.0);
            let (r, xn) = (rho * th.sin(), rho * th.cos());
            s += w * FRAC_PI_2 * 0.5 * th.sin().powi(n as i32 - 2) * z_sq_avg(n, j, r, xn);
        }
        s * rho.powi(n as i32 - 1)
    };
    let area = sphere_area(n - 1);
    let v = if r_cut.is_finite() {
        let f = |rho: f64| shell(rho) * eta(rho / (4.0 * r_cut));
        integrate_pts(f, &[0.0, 1.0, 4.0 * r_cut, 8.0 * r_cut], tol.quad_abs * 1e-2, tol.quad_rel * 1e-2, 4000)?.value
    } else {
        integrate_pts(shell, &[0.0, 1.0], tol.quad_abs * 1e-2, tol.quad_rel * 1e-2, 4000)?.value
            + integrate_to_inf(shell, 1.0, tol.quad_abs * 1e-2, tol.quad_rel * 1e-2)?.value
    };
    Ok(area * v)
}

/// Boundary integral `int_{R^{n-1}} f(r, cos phi)` with `y_1 = r cos phi`, over `r < 8 r_cut`.
fn boundary_integral<F: Fn(f64, f64) -> f64>(n: usize, r_cut: f64, f: F, tol: &Tolerances) -> Result<f64> {
    let (gx, gw) = gauss_legendre(ANGLE_NODES);
    let m = n as i32 - 3;
    let ring = |r: f64| {
        let mut s = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let phi = std::f64::consts::PI * 0.5 * (x + 1.0);
            s += w * std::f64::consts::PI * 0.5 * phi.sin().powi(m) * f(r, phi.cos());
        }
        s * r.powi(n as i32 - 2) * eta(r / (4.0 * r_cut))
    };
    let v = integrate_pts(ring, &[0.0, 1.0, 4.0 * r_cut, 8.0 * r_cut], tol.quad_abs * 1e-2, tol.quad_rel * 1e-2, 4000)?.value;
    Ok(sphere_area(n - 2) * v)
}

/// `int (n/(n-2)) U^{2/(n-2)} eta Z_n` over the boundary with the cutoff at scale `r_cut`.
fn boundary_moment(n: usize, r_cut: f64, tol: &Tolerances) -> Result<f64> {
    let nf = n as f64;
    boundary_integral(
        n,
        r_cut,
        |r, _| {
            let c = kernel_factor(n, r * r, 0.0);
            // (n/(n-2)) U^{2/(n-2)} = n / (1 + r^2)
            nf / (1.0 + r * r) * 0.5 * c * (1.0 - r * r)
        },
        tol,
    )
}

/// The scale constant `A_R`.
pub fn compute_ar(r_cut: f64, n: usize, tol: &Tolerances) -> Result<f64> {
    if !(r_cut >= 1.0) {
        return invalid(format!("cutoff scale must be at least 1, got {r_cut}"));
    }
    if n < 3 {
        return invalid("dimension must be at least 3");
    }
    Ok(-boundary_moment(n, r_cut, tol)? / kernel_mass(n, n, r_cut, tol)?)
}

/// `R -> infinity` limit `(n-2)/2 (int Z_n^2)^{-1} int_{R^{n-1}} U^{n/(n-2)}`.
pub fn compute_ar_limit(n: usize, tol: &Tolerances) -> Result<f64> {
    let nf = n as f64;
    let num = boundary_profile_power(n, tol)?;
    Ok((nf - 2.0) / 2.0 * num / kernel_mass(n, n, f64::INFINITY, tol)?)
}

/// `int_{R^{n-1}} U^{n/(n-2)}(y~, 0) dy~`.
pub fn boundary_profile_power(n: usize, tol: &Tolerances) -> Result<f64> {
    let nf = n as f64;
    let f = |r: f64| (nf - 2.0).powf(nf / 2.0) * (1.0 + r * r).powf(-nf / 2.0) * r.powi(n as i32 - 2);
    let v = integrate_pts(f, &[0.0, 1.0], tol.quad_abs * 1e-2, tol.quad_rel * 1e-2, 2000)?.value
        + integrate_to_inf(f, 1.0, tol.quad_abs * 1e-2, tol.quad_rel * 1e-2)?.value;
    Ok(sphere_area(n - 1) * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationParams {
    pub l: u32,
    #[serde(rename = "T")]
    pub big_t: f64,
    #[serde(rename = "R")]
    pub r_cut: f64,
    pub a_r: f64,
    pub c_mu: f64,
    pub dim: usize,
}

impl ModulationParams {
    /// Parameters with `R = |ln T|` unless `r_cut` is given.
    pub fn new(l: u32, big_t: f64, r_cut: Option<f64>, dim: usize, tol: &Tolerances) -> Result<Self> {
        if !(big_t > 0.0) {
            return invalid("blow-up time must be positive");
        }
        if dim >= 6 || dim < 3 {
            return invalid(format!("scale law needs 3 <= n < 6, got {dim}"));
        }
        let r_cut = r_cut.unwrap_or(big_t.ln().abs());
        let a_r = compute_ar(r_cut, dim, tol)?;
        if !(a_r > 0.0) {
            return invalid(format!("A_R = {a_r} is not positive at R = {r_cut}"));
        }
        let mut p = Self { l, big_t, r_cut, a_r, c_mu: 0.0, dim };
        p.c_mu = p.sandwich_constant();
        Ok(p)
    }

    /// `mu_0 = D (T-t)^k`; returns `(D, k)`.
    pub fn law(&self) -> (f64, f64) {
        let nf = self.dim as f64;
        let lp1 = self.l as f64 + 1.0;
        ((self.a_r * (6.0 - nf) / 2.0 / lp1).powf(2.0 / (6.0 - nf)), 2.0 * lp1 / (6.0 - nf))
    }

    /// Smallest `C > 9` with `9/C tau^k <= mu_0 <= C/9 tau^k` and `|mu_0'| <= C/9 tau^{k-1}`.
    fn sandwich_constant(&self) -> f64 {
        let (d, k) = self.law();
        (9.0 * d).max(9.0 / d).max(9.0 * d * k).max(9.0) * (1.0 + 1e-12)
    }
}

/// Leading scale `mu_0(t)`.
pub fn mu0(p: &ModulationParams, t: f64) -> Result<f64> {
    if !(t < p.big_t) {
        return Err(BblError::PastBlowup { t, big_t: p.big_t });
    }
    let (d, k) = p.law();
    Ok(d * (p.big_t - t).powf(k))
}

/// Closed-form derivative of [`mu0`].
pub fn dmu0(p: &ModulationParams, t: f64) -> Result<f64> {
    if !(t < p.big_t) {
        return Err(BblError::PastBlowup { t, big_t: p.big_t });
    }
    let (d, k) = p.law();
    Ok(-d * k * (p.big_t - t).powf(k - 1.0))
}

/// Residual `mu' mu^{2-n/2} + (T-t)^l A_R` of the leading law.
pub fn mu0_ode_residual(p: &ModulationParams, t: f64) -> Result<f64> {
    let m = mu0(p, t)?;
    let dm = dmu0(p, t)?;
    Ok(dm * m.powf(2.0 - p.dim as f64 / 2.0) + (p.big_t - t).powi(p.l as i32) * p.a_r)
}

/// Increasing times with `T - t` geometric from `tau_max` down to `tau_min`.
pub fn backward_grid(big_t: f64, tau_min: f64, tau_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(tau_min > 0.0 && tau_max > tau_min && tau_max <= big_t && per_decade > 0) {
        return invalid("backward grid needs 0 < tau_min < tau_max <= T");
    }
    let m = ((tau_max / tau_min).log10() * per_decade as f64).ceil() as usize;
    Ok((0..=m).map(|k| big_t - tau_max * (tau_min / tau_max).powf(k as f64 / m as f64)).collect())
}

/// Solves `mu1' + (l+1)/(T-t) mu1 = F` backward from the last time, where `mu1 = 0`:
/// `mu1(t) = (T-t)^{l+1} int_{t_end}^t (T-s)^{-(l+1)} F(s) ds`.
///
/// Trapezoid rule in `ln(T-s)`. Rejects `F` growing faster than `(T-t)^{2l+1}` toward `T`.
pub fn mu1_ode_step(l: u32, f: &[f64], big_t: f64, times: &[f64]) -> Result<Vec<f64>> {
    let m = times.len();
    if m < 2 || f.len() != m {
        return invalid("mu1 integration needs matching samples on at least two times");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[m - 1] < big_t) {
        return invalid("times must increase and stay below T");
    }
    let lp1 = l as f64 + 1.0;
    let tau: Vec<f64> = times.iter().map(|t| big_t - t).collect();
    window_check(l, f, &tau)?;
    // g(ln tau) = tau^{-(l+1)} F tau
    let g: Vec<f64> = tau.iter().zip(f).map(|(t, v)| t.powf(-lp1) * v * t).collect();
    let mut out = vec![0.0; m];
    let mut acc = 0.0;
    for k in (0..m - 1).rev() {
        let h = tau[k].ln() - tau[k + 1].ln();
        // ds = -d tau, integrating from t_end back to t_k
        acc -= 0.5 * h * (g[k] + g[k + 1]);
        out[k] = tau[k].powf(lp1) * acc;
    }
    Ok(out)
}

fn window_check(l: u32, f: &[f64], tau: &[f64]) -> Result<()> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, v) in tau.iter().zip(f) {
        if *v != 0.0 {
            xs.push(t.ln());
            ys.push(v.abs().ln() - (2.0 * l as f64 + 1.0) * t.ln());
        }
    }
    if xs.len() < 3 {
        return Ok(());
    }
    let fit = linear_fit(&xs, &ys);
    if fit.slope < -0.05 {
        return Err(BblError::WindowViolated(format!(
            "source grows like (T-t)^({:.3}) toward T, faster than (T-t)^{}",
            2.0 * l as f64 + 1.0 + fit.slope,
            2 * l + 1
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModTrajectory {
    pub times: Vec<f64>,
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    /// `xi - q~` along the axis direction.
    pub xi: Vec<f64>,
    /// Derivative of `mu0 + mu1`.
    pub dmu: Vec<f64>,
}

/// Trajectory on the grid `times` driven by sampled sources for `mu1` and `xi`.
///
/// `xi' = f_xi` with `xi = q~` at the last time. The ansatz window is enforced.
pub fn build_trajectory(p: &ModulationParams, times: &[f64], f_mu: &[f64], f_xi: &[f64]) -> Result<ModTrajectory> {
    let mu1 = mu1_ode_step(p.l, f_mu, p.big_t, times)?;
    let m = times.len();
    if f_xi.len() != m {
        return invalid("xi source must be sampled on the trajectory times");
    }
    let mut xi = vec![0.0; m];
    for k in (0..m - 1).rev() {
        xi[k] = xi[k + 1] - 0.5 * (times[k + 1] - times[k]) * (f_xi[k] + f_xi[k + 1]);
    }
    let lp1 = p.l as f64 + 1.0;
    let mut mu0v = Vec::with_capacity(m);
    let mut dmu = Vec::with_capacity(m);
    for (k, &t) in times.iter().enumerate() {
        let tau = p.big_t - t;
        mu0v.push(mu0(p, t)?);
        dmu.push(dmu0(p, t)? + f_mu[k] - lp1 / tau * mu1[k]);
    }
    let traj = ModTrajectory { times: times.to_vec(), mu0: mu0v, mu1, xi, dmu };
    traj.check_window(p)?;
    Ok(traj)
}

impl ModTrajectory {
    /// Positivity of `mu` and the ansatz window with constant `C_mu`.
    pub fn check_window(&self, p: &ModulationParams) -> Result<()> {
        let c = p.c_mu;
        let k = 2.0 * p.l as f64 + 2.0;
        for i in 0..self.times.len() {
            let tau = p.big_t - self.times[i];
            let mu = self.mu0[i] + self.mu1[i];
            let bad = if !(mu > 0.0) {
                Some("scale is not positive")
            } else if mu < tau.powf(k) / c || mu > c * tau.powf(k) {
                Some("scale leaves its window")
            } else if self.dmu[i].abs() > c * tau.powf(k - 1.0) {
                Some("scale derivative leaves its window")
            } else if self.xi[i].abs() > c * tau.powf(k) {
                Some("center drift leaves its window")
            } else {
                None
            };
            if let Some(msg) = bad {
                return Err(BblError::WindowViolated(format!("{msg} at t = {}", self.times[i])));
            }
        }
        Ok(())
    }

    /// CSV with columns `t,T_minus_t,mu0,mu1,xi_offset,dmu0,exponent`, where
    /// `exponent = d ln mu / d ln (T-t)` of the full scale.
    pub fn to_csv(&self, p: &ModulationParams) -> Result<String> {
        let mut out = String::from("t,T_minus_t,mu0,mu1,xi_offset,dmu0,exponent\n");
        for i in 0..self.times.len() {
            let t = self.times[i];
            let tau = p.big_t - t;
            let exponent = -self.dmu[i] * tau / (self.mu0[i] + self.mu1[i]);
            out.push_str(&format!("{t},{tau},{:e},{:e},{:e},{:e},{exponent}\n", self.mu0[i], self.mu1[i], self.xi[i], dmu0(p, t)?));
        }
        Ok(out)
    }
}

/// The two integrals of the orthogonality equation for `Z_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthResidual {
    pub interior: f64,
    pub boundary: f64,
}

impl OrthResidual {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
    pub fn scale(&self) -> f64 {
        self.interior.abs().max(self.boundary.abs())
    }
}

/// Boundary trace of the outer field at `(x_1, |x_perp|, t)`, in original variables.
pub type BoundaryTrace<'a> = &'a (dyn Fn(f64, f64, f64) -> f64 + Sync);

/// Residual of the orthogonality equation against `Z_j` for one bubble.
///
/// The bubble centre sits at `q~ + b.xi_offset e_1`; `rates` holds `(mu', xi')`
/// with `xi'` along `e_1`. For `2 <= j <= n-1` both integrals vanish by parity.
#[allow(clippy::too_many_arguments)]
pub fn orthogonality_residual(
    j: usize,
    n: usize,
    b: BubbleParams,
    rates: (f64, f64),
    psi: Option<BoundaryTrace>,
    big_t: f64,
    t: f64,
    r_cut: f64,
    tol: &Tolerances,
) -> Result<OrthResidual> {
    if j == 0 || j > n {
        return invalid(format!("kernel index {j} outside 1..={n}"));
    }
    if !(t < big_t) {
        return Err(BblError::PastBlowup { t, big_t });
    }
    if j > 1 && j < n {
        return Ok(OrthResidual { interior: 0.0, boundary: 0.0 });
    }
    let nf = n as f64;
    let (dmu, dxi) = rates;
    let mu = b.mu;
    // grad~ U = Z_~, so the xi' term only meets Z_1
    let interior = if j == n { dmu * mu * kernel_mass(n, n, r_cut, tol)? } else { mu * dxi * kernel_mass(n, 1, r_cut, tol)? };
    let a = theta_coeffs(b.l, n)?;
    let tau = big_t - t;
    let d = b.xi_offset;
    let pref = nf / (nf - 2.0) * mu.powf(nf / 2.0 - 1.0);
    let boundary = pref * boundary_integral(
        n,
        r_cut,
        |r, c| {
            let x1 = mu * r * c + d;
            let xp = mu * r * (1.0 - c * c).max(0.0).sqrt();
            let s = x1 * x1 + xp * xp;
            let th: f64 = a.iter().enumerate().map(|(k, ak)| ak * s.powi(k as i32) * tau.powi(b.l as i32 - k as i32)).sum();
            let ps = psi.map_or(0.0, |f| f(x1, xp, t));
            let kf = kernel_factor(n, r * r, 0.0);
            let z = if j == n { 0.5 * kf * (1.0 - r * r) } else { -kf * r * c };
            (nf - 2.0) / (1.0 + r * r) * (ps + th) * z
        },
        tol,
    )?;
    Ok(OrthResidual { interior, boundary })
}

/// Derivative of the `Z_1` boundary integral in the centre offset, at zero offset.
pub fn orthogonality_slope_xi(n: usize, b: BubbleParams, big_t: f64, t: f64, r_cut: f64, tol: &Tolerances) -> Result<f64> {
    let nf = n as f64;
    let a = theta_coeffs(b.l, n)?;
    let tau = big_t - t;
    let mu = b.mu;
    let pref = nf / (nf - 2.0) * mu.powf(nf / 2.0 - 1.0);
    let v = boundary_integral(
        n,
        r_cut,
        |r, c| {
            let s = mu * mu * r * r;
            let ds: f64 = a.iter().enumerate().skip(1).map(|(k, ak)| k as f64 * ak * s.powi(k as i32 - 1) * tau.powi(b.l as i32 - k as i32)).sum();
            // d/d(offset) Theta = 2 x_1 dTheta/d|x|^2 with x_1 = mu r cos(phi)
            let dth = 2.0 * mu * r * c * ds;
            let kf = kernel_factor(n, r * r, 0.0);
            (nf - 2.0) / (1.0 + r * r) * dth * (-kf * r * c)
        },
        tol,
    )?;
    Ok(pref * v)
}

/// `int eta(|y|/(4R)) Z_j^2` over the half-space.
pub fn kernel_mass_cut(n: usize, j: usize, r_cut: f64, tol: &Tolerances) -> Result<f64> {
    if j == 0 || j > n {
        return invalid(format!("kernel index {j} outside 1..={n}"));
    }
    kernel_mass(n, j, r_cut, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn boundary_power_matches_beta_reduction() {
        let v = boundary_profile_power(5, &tol()).unwrap();
        let exact = 3f64.powf(2.5) * 2.0 * PI * PI * (2.0 / 3.0);
        assert!((v - exact).abs() <= 1e-6 * exact, "{v} {exact}");
    }

    #[test]
    fn kernel_mass_matches_profile_identity() {
        // for the cutoff-free boundary moment, int p U^{p-1} Z_n = -(n-2)/2 int U^p
        let m = boundary_moment(5, 1e6, &tol()).unwrap();
        let u = boundary_profile_power(5, &tol()).unwrap();
        assert!((m + 1.5 * u).abs() < 1e-4 * u, "{m} {u}");
    }

    #[test]
    fn scale_constant_converges_at_rate_one() {
        let limit = compute_ar_limit(5, &tol()).unwrap();
        let rs = [8.0, 16.0, 32.0, 64.0];
        let defects: Vec<f64> = rs.iter().map(|&r| (compute_ar(r, 5, &tol()).unwrap() - limit).abs()).collect();
        let fit = linear_fit(&rs.iter().map(|r: &f64| r.ln()).collect::<Vec<_>>(), &defects.iter().map(|d| d.ln()).collect::<Vec<_>>());
        assert!(-fit.slope >= 0.8 && -fit.slope <= 1.2, "slope {}", fit.slope);
        for r in rs {
            assert!(compute_ar(r, 5, &tol()).unwrap() > 0.0);
        }
        assert!(compute_ar(0.5, 5, &tol()).is_err());
    }

    #[test]
    fn leading_law_and_residual() {
        for l in 0..3 {
            let p = ModulationParams::new(l, 0.01, None, 5, &tol()).unwrap();
            let (d, k) = p.law();
            assert_eq!(k, 2.0 * l as f64 + 2.0);
            assert!((d - (p.a_r / (2.0 * (l as f64 + 1.0))).powi(2)).abs() < 1e-14 * d);
            let times = backward_grid(p.big_t, 1e-2 * p.big_t, p.big_t, 64).unwrap();
            let mut prev = f64::INFINITY;
            for &t in &times {
                assert!(mu0_ode_residual(&p, t).unwrap().abs() <= 1e-10);
                let m = mu0(&p, t).unwrap();
                assert!(m > 0.0 && m < prev);
                prev = m;
                let tau = p.big_t - t;
                assert!(9.0 / p.c_mu * tau.powf(k) <= m && m <= p.c_mu / 9.0 * tau.powf(k));
                assert!(dmu0(&p, t).unwrap().abs() <= p.c_mu / 9.0 * tau.powf(k - 1.0));
            }
            assert!(mu0(&p, p.big_t).is_err());
        }
        assert!(ModulationParams::new(0, 0.01, None, 6, &tol()).is_err());
    }

    #[test]
    fn mu1_zero_source() {
        let times = backward_grid(0.01, 1e-5, 0.01, 64).unwrap();
        let out = mu1_ode_step(1, &vec![0.0; times.len()], 0.01, &times).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mu1_power_source() {
        let big_t = 0.01;
        for l in 0..3u32 {
            let times = backward_grid(big_t, 1e-6, big_t, 64).unwrap();
            let f: Vec<f64> = times.iter().map(|t| (big_t - t).powi(2 * l as i32 + 1)).collect();
            let out = mu1_ode_step(l, &f, big_t, &times).unwrap();
            let s0 = 1e-6f64;
            let lp1 = l as f64 + 1.0;
            for (t, v) in times.iter().zip(&out) {
                let tau = big_t - t;
                let exact = tau.powf(lp1) * (s0.powf(lp1) - tau.powf(lp1)) / lp1;
                assert!((v - exact).abs() <= 1e-3 * tau.powf(2.0 * lp1), "{l} {tau} {v} {exact}");
            }
            // far from the terminal time the solution is -(T-t)^{2l+2}/(l+1)
            let tau = big_t - times[0];
            assert!((out[0] + tau.powf(2.0 * lp1) / lp1).abs() < 1e-3 * tau.powf(2.0 * lp1));
        }
    }

    #[test]
    fn mu1_second_order_in_grid() {
        let big_t = 0.01;
        let run = |per: usize| {
            let times = backward_grid(big_t, 1e-4, big_t, per).unwrap();
            let f: Vec<f64> = times.iter().map(|t| (big_t - t).powi(3) * (1.0 + (big_t - t).sqrt())).collect();
            mu1_ode_step(1, &f, big_t, &times).unwrap()[0]
        };
        let (a, b, c) = (run(16), run(32), run(64));
        let ratio = (a - b) / (b - c);
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn mu1_bound_with_small_source() {
        let big_t = 0.01;
        let delta: f64 = 1e-3;
        for l in 0..3u32 {
            let times = backward_grid(big_t, 1e-6, big_t, 64).unwrap();
            let kf = (l as f64 + 1.0) * delta.powf(1.0 / 3.0);
            let f: Vec<f64> = times.iter().map(|t| kf * (big_t - t).powi(2 * l as i32 + 1) * (3.0 * t).cos()).collect();
            let out = mu1_ode_step(l, &f, big_t, &times).unwrap();
            for (t, v) in times.iter().zip(&out) {
                assert!(v.abs() <= delta.powf(1.0 / 3.0) * (big_t - t).powi(2 * l as i32 + 2) * (1.0 + 1e-3));
            }
        }
    }

    #[test]
    fn mu1_rejects_fast_sources() {
        let big_t = 0.01;
        let times = backward_grid(big_t, 1e-6, big_t, 64).unwrap();
        let f: Vec<f64> = times.iter().map(|t| (big_t - t).powf(0.5)).collect();
        assert!(matches!(mu1_ode_step(1, &f, big_t, &times), Err(BblError::WindowViolated(_))));
    }

    #[test]
    fn trajectory_stays_in_window() {
        let p = ModulationParams::new(1, 0.01, None, 5, &tol()).unwrap();
        let times = backward_grid(p.big_t, 1e-5, p.big_t, 64).unwrap();
        let f: Vec<f64> = times.iter().map(|t| 1e-2 * (p.big_t - t).powi(3)).collect();
        let traj = build_trajectory(&p, &times, &f, &f).unwrap();
        assert!(traj.to_csv(&p).unwrap().starts_with("t,T_minus_t,mu0,mu1,xi_offset,dmu0,exponent\n"));
        let big: Vec<f64> = times.iter().map(|t| 1e6 * (p.big_t - t).powi(3)).collect();
        assert!(matches!(build_trajectory(&p, &times, &big, &f), Err(BblError::WindowViolated(_))));
    }

    #[test]
    fn orthogonality_holds_for_leading_law() {
        let p = ModulationParams::new(0, 1e-3, Some(8.0), 5, &tol()).unwrap();
        for &t in &[0.0, 5e-4, 9.9e-4] {
            let b = BubbleParams::centered(mu0(&p, t).unwrap(), 0).unwrap();
            let res = orthogonality_residual(5, 5, b, (dmu0(&p, t).unwrap(), 0.0), None, p.big_t, t, p.r_cut, &tol()).unwrap();
            assert!(res.total().abs() <= 1e-8 * res.scale(), "{res:?}");
        }
    }

    #[test]
    fn tangential_residuals_vanish_at_anchor() {
        let b = BubbleParams::centered(1e-3, 1).unwrap();
        for j in 1..5 {
            let res = orthogonality_residual(j, 5, b, (0.1, 0.0), None, 0.01, 0.0, 8.0, &tol()).unwrap();
            assert!(res.total().abs() < 1e-14, "{j} {res:?}");
        }
    }

    #[test]
    fn center_perturbation_is_linear() {
        let (big_t, t, r_cut) = (0.01, 0.005, 8.0);
        let mu = 0.02;
        let slope = orthogonality_slope_xi(5, BubbleParams::centered(mu, 1).unwrap(), big_t, t, r_cut, &tol()).unwrap();
        let eps = 1e-4;
        let at = |e: f64| {
            let b = BubbleParams::new(mu, e, 0.0, 1).unwrap();
            orthogonality_residual(1, 5, b, (0.0, 0.0), None, big_t, t, r_cut, &tol()).unwrap().total()
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        assert!(slope != 0.0);
        assert!((fd - slope).abs() <= 0.05 * slope.abs(), "{fd} {slope}");
        assert!((at(2.0 * eps) / at(eps) - 2.0).abs() < 0.05);
    }
}
