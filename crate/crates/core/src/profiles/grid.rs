use crate::base::Tolerances;
use crate::error::{invalid, BblError, Result};
use crate::numerics::quad::{gauss_legendre, geometric_breaks};
use crate::numerics::sphere_area;

/// Tensor Gauss-Legendre rule on the quarter plane `{r >= 0, xn >= 0}` in
/// polar form `(rho, theta)`, `r = rho sin(theta)`, `xn = rho cos(theta)`.
///
/// Weights include the `|S^{n-2}| r^{n-2}` factor, so `sum w f` is the
/// integral over the half-space of a field that is radial in `x~`.
/// A power-law tail past `rho_max` is fitted from the last two shells.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub r_max: f64,
    pub xn_max: f64,
    /// `(r, xn, weight)` triples, shell by shell.
    pub nodes: Vec<(f64, f64, f64)>,
    /// Boundary rule `(r, weight)` for integrals over `R^{n-1}`.
    pub boundary: Vec<(f64, f64)>,
    n_theta: usize,
    shell_rho: Vec<f64>,
    shell_w: Vec<f64>,
    /// Allowed tail fraction.
    pub tail_rel: f64,
}

impl QuadratureGrid {
    /// Grid with geometric radial panels `h0, h0 q, ...` up to `rho_max`.
    pub fn polar(dim: usize, rho_max: f64, h0: f64, ratio: f64, m_rad: usize, n_theta: usize, tail_rel: f64) -> Result<Self> {
        if dim < 3 {
            return invalid("dimension must be at least 3");
        }
        if !(rho_max > h0 && h0 > 0.0 && ratio >= 1.0 && m_rad > 0 && n_theta > 0) {
            return invalid("bad quadrature grid parameters");
        }
        let breaks = geometric_breaks(h0, ratio, rho_max);
        let (gx, gw) = gauss_legendre(m_rad);
        let (tx, tw) = gauss_legendre(n_theta);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let theta: Vec<(f64, f64)> = tx.iter().zip(&tw).map(|(x, w)| ((x + 1.0) * half_pi / 2.0, w * half_pi / 2.0)).collect();
        let area = sphere_area(dim - 1);
        let k = (dim - 2) as i32;
        let mut nodes = Vec::new();
        let mut boundary = Vec::new();
        let mut shell_rho = Vec::new();
        let mut shell_w = Vec::new();
        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            for (x, w) in gx.iter().zip(&gw) {
                let rho = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let wr = 0.5 * (b - a) * w;
                shell_rho.push(rho);
                shell_w.push(wr);
                boundary.push((rho, wr * area * rho.powi(k)));
                for &(th, wt) in &theta {
                    let r = rho * th.sin();
                    nodes.push((r, rho * th.cos(), wr * wt * area * r.powi(k) * rho));
                }
            }
        }
        Ok(QuadratureGrid { dim, r_max: rho_max, xn_max: rho_max, nodes, boundary, n_theta, shell_rho, shell_w, tail_rel })
    }

    /// Default grid for fields with algebraic decay.
    pub fn algebraic(dim: usize, tol: &Tolerances) -> Result<Self> {
        Self::polar(dim, 1.0e4, 0.02, 1.25, 16, 40, tol.quad_rel)
    }

    /// Smaller grid for fields with Gaussian decay.
    pub fn gaussian(dim: usize, tol: &Tolerances) -> Result<Self> {
        Self::polar(dim, 40.0, 0.02, 1.15, 12, 32, tol.quad_rel)
    }

    fn tail(&self, rho: &[f64], g: &[f64], total: f64) -> Result<f64> {
        let m = rho.len();
        let (ra, rb, ga, gb) = (rho[m - 2], rho[m - 1], g[m - 2], g[m - 1]);
        if gb == 0.0 || ga == 0.0 {
            return Ok(0.0);
        }
        if ga.signum() != gb.signum() {
            return Err(BblError::GridTooSmall("integrand changes sign in the last shell".into()));
        }
        let k = -(gb / ga).ln() / (rb / ra).ln();
        if k <= 1.0 {
            return Err(BblError::GridTooSmall(format!("tail decays like rho^-{k:.3}, not integrable")));
        }
        let t = gb * rb * (rb / self.r_max).powf(k - 1.0) / (k - 1.0);
        if t.abs() > self.tail_rel * total.abs().max(f64::MIN_POSITIVE) {
            return Err(BblError::GridTooSmall(format!("modeled tail {t:.3e} exceeds tolerance of integral {total:.3e}")));
        }
        Ok(t)
    }

    /// Half-space integral of `f(r, xn)` with tail correction.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut shells = Vec::with_capacity(self.shell_rho.len());
        let mut total = 0.0;
        for chunk in self.nodes.chunks(self.n_theta) {
            let s: f64 = chunk.iter().map(|&(r, xn, w)| w * f(r, xn)).sum();
            total += s;
            shells.push(s);
        }
        // shell density per unit rho for the tail model
        let dens: Vec<f64> = shells.iter().zip(&self.shell_w).map(|(s, w)| s / w).collect();
        let t = self.tail(&self.shell_rho, &dens, total)?;
        Ok(total + t)
    }

    /// Boundary integral over `R^{n-1}` of `f(r)` with tail correction.
    pub fn integrate_boundary<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut total = 0.0;
        let mut dens = Vec::with_capacity(self.boundary.len());
        for (&(rho, w), wr) in self.boundary.iter().zip(&self.shell_w) {
            let v = w * f(rho);
            total += v;
            dens.push(v / wr);
        }
        let t = self.tail(&self.shell_rho, &dens, total)?;
        Ok(total + t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let g = QuadratureGrid::gaussian(5, &Tolerances::default()).unwrap();
        // half of the full-space Gaussian integral pi^{5/2}
        let v = g.integrate(|r, xn| (-(r * r + xn * xn)).exp()).unwrap();
        assert!((v - 0.5 * std::f64::consts::PI.powf(2.5)).abs() < 1e-10);
        let b = g.integrate_boundary(|r| (-r * r).exp()).unwrap();
        assert!((b - std::f64::consts::PI.powi(2)).abs() < 1e-10);
    }

    #[test]
    fn algebraic_tail_is_corrected() {
        let g = QuadratureGrid::algebraic(5, &Tolerances::default()).unwrap();
        // int_{R^4} (1+r^2)^{-4} = |S^3| int r^3 (1+r^2)^{-4} = 2 pi^2 / 12
        let b = g.integrate_boundary(|r| (1.0 + r * r).powi(-4)).unwrap();
        assert!((b - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-11);
    }

    #[test]
    fn slow_decay_is_rejected() {
        let g = QuadratureGrid::gaussian(5, &Tolerances::default()).unwrap();
        assert!(matches!(g.integrate_boundary(|r| (1.0 + r * r).powf(-2.2)), Err(BblError::GridTooSmall(_))));
    }

    #[test]
    fn weights_positive_and_inside() {
        let g = QuadratureGrid::gaussian(4, &Tolerances::default()).unwrap();
        assert!(g.nodes.iter().all(|&(r, xn, w)| w > 0.0 && r >= 0.0 && xn >= 0.0 && r <= g.r_max && xn <= g.xn_max));
    }
}
