use crate::base::{inner_coords, BubbleParams, CylPoint, Tolerances};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Value and cylindrical gradient of `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEval {
    pub value: f64,
    pub grad_r: f64,
    pub grad_xn: f64,
}

#[inline]
fn base_d(r2: f64, xn: f64) -> f64 {
    r2 + (1.0 + xn) * (1.0 + xn)
}

/// `U(x) = (n-2)^{(n-2)/2} [|x~|^2 + (1+x_n)^2]^{-(n-2)/2}`.
pub fn eval_u(x: CylPoint) -> f64 {
    let k = (x.dim as f64 - 2.0) / 2.0;
    (x.dim as f64 - 2.0).powf(k) * base_d(x.r * x.r, x.xn).powf(-k)
}

pub fn eval_u_full(x: CylPoint) -> ProfileEval {
    let n = x.dim as f64;
    let d = base_d(x.r * x.r, x.xn);
    let c = (n - 2.0).powf(n / 2.0) * d.powf(-n / 2.0);
    ProfileEval { value: eval_u(x), grad_r: -c * x.r, grad_xn: -c * (1.0 + x.xn) }
}

/// Bubble `mu^{-(n-2)/2} U((x - (xi,0))/mu)`.
pub fn eval_u_scaled(b: BubbleParams, x: CylPoint) -> Result<f64> {
    let y = inner_coords(x, b)?;
    Ok(b.mu.powf(-(x.dim as f64 - 2.0) / 2.0) * eval_u(y))
}

/// `U` at a full point `(x~, x_n)` with `x~` in `R^{n-1}`.
pub fn u_vec(xt: &[f64], xn: f64) -> f64 {
    let n = xt.len() as f64 + 1.0;
    let r2: f64 = xt.iter().map(|v| v * v).sum();
    let k = (n - 2.0) / 2.0;
    (n - 2.0).powf(k) * base_d(r2, xn).powf(-k)
}

/// Full gradient of `U`: tangential components then the normal one.
pub fn grad_u_vec(xt: &[f64], xn: f64) -> Vec<f64> {
    let n = xt.len() as f64 + 1.0;
    let r2: f64 = xt.iter().map(|v| v * v).sum();
    let c = (n - 2.0).powf(n / 2.0) * base_d(r2, xn).powf(-n / 2.0);
    let mut g: Vec<f64> = xt.iter().map(|v| -c * v).collect();
    g.push(-c * (1.0 + xn));
    g
}

/// `Z_j` at a full point, `1 <= j <= n`.
pub fn eval_z_vec(j: usize, xt: &[f64], xn: f64) -> Result<f64> {
    let n = xt.len() + 1;
    if j == 0 || j > n {
        return invalid(format!("kernel index {j} outside 1..={n}"));
    }
    let nf = n as f64;
    let r2: f64 = xt.iter().map(|v| v * v).sum();
    let c = (nf - 2.0).powf(nf / 2.0) * base_d(r2, xn).powf(-nf / 2.0);
    Ok(if j < n { -c * xt[j - 1] } else { 0.5 * c * (1.0 - r2 - xn * xn) })
}

/// `d/dx_n Z_j` at a full point, closed form.
pub fn z_dn_vec(j: usize, xt: &[f64], xn: f64) -> Result<f64> {
    let n = xt.len() + 1;
    if j == 0 || j > n {
        return invalid(format!("kernel index {j} outside 1..={n}"));
    }
    let nf = n as f64;
    let r2: f64 = xt.iter().map(|v| v * v).sum();
    let d = base_d(r2, xn);
    let c = (nf - 2.0).powf(nf / 2.0);
    Ok(if j < n {
        c * nf * (1.0 + xn) * xt[j - 1] * d.powf(-nf / 2.0 - 1.0)
    } else {
        0.5 * c * (-nf * (1.0 + xn) * d.powf(-nf / 2.0 - 1.0) * (1.0 - r2 - xn * xn) - 2.0 * xn * d.powf(-nf / 2.0))
    })
}

/// `Z_j` in the axis plane `x~ = r e_1`.
pub fn eval_z(j: usize, x: CylPoint) -> Result<f64> {
    let mut xt = vec![0.0; x.dim - 1];
    xt[0] = x.r;
    eval_z_vec(j, &xt, x.xn)
}

/// Generic unit direction used to lift cylindrical samples to full points,
/// so that every `Z_j` with `j < n` is exercised.
pub const GENERIC_DIRECTION: [f64; 8] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];

fn lift(x: CylPoint) -> Vec<f64> {
    let m = x.dim - 1;
    let w: Vec<f64> = (0..m).map(|i| GENERIC_DIRECTION[i % 8] + (i / 8) as f64).collect();
    let nw = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter().map(|v| x.r * v / nw).collect()
}

/// Residuals of the kernel equations at the given samples.
///
/// Samples with `xn > 0` feed the interior Laplacian, computed with the
/// fourth-order five-point stencil per coordinate at step `tol.fd2_step()`.
/// Samples with `xn == 0` feed the boundary relation
/// `-d_n Z_j = (n/(n-2)) U^{2/(n-2)} Z_j`, both sides in closed form.
pub fn kernel_residuals(j: usize, samples: &[CylPoint], tol: &Tolerances) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return invalid("kernel_residuals needs at least one sample");
    }
    let mut imax: f64 = 0.0;
    let mut bmax: f64 = 0.0;
    let h = tol.fd2_step();
    for &x in samples {
        let n = x.dim;
        let nf = n as f64;
        let xt = lift(x);
        if x.xn > 0.0 {
            let f0 = eval_z_vec(j, &xt, x.xn)?;
            let mut lap = 0.0;
            for k in 0..n {
                let mut vals = [0.0; 4];
                for (idx, s) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
                    let mut p = xt.clone();
                    let mut pn = x.xn;
                    if k < n - 1 {
                        p[k] += s * h;
                    } else {
                        pn += s * h;
                    }
                    vals[idx] = eval_z_vec(j, &p, pn)?;
                }
                lap += (-vals[0] + 16.0 * vals[1] - 30.0 * f0 + 16.0 * vals[2] - vals[3]) / (12.0 * h * h);
            }
            imax = imax.max(lap.abs());
        } else {
            let z = eval_z_vec(j, &xt, 0.0)?;
            let lhs = -z_dn_vec(j, &xt, 0.0)?;
            let rhs = nf / (nf - 2.0) * u_vec(&xt, 0.0).powf(2.0 / (nf - 2.0)) * z;
            bmax = bmax.max((lhs - rhs).abs());
        }
    }
    Ok((imax, bmax))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((eval_u(CylPoint::at(0.0, 0.0, 5)) - 27f64.sqrt()).abs() < 1e-14);
        assert!((eval_u(CylPoint::at(0.0, 1.0, 5)) - 27f64.sqrt() / 8.0).abs() < 1e-14);
        assert!((eval_z(5, CylPoint::at(0.0, 0.0, 5)).unwrap() - 0.5 * 3f64.powf(2.5)).abs() < 1e-13);
        assert!(eval_z(5, CylPoint::at(0.6, 0.8, 5)).unwrap().abs() < 1e-15);
        let z1 = eval_z(1, CylPoint::at(1.0, 0.0, 5)).unwrap();
        assert!((z1 + 3f64.powf(2.5) * 2f64.powf(-2.5)).abs() < 1e-13);
        assert!(eval_z(6, CylPoint::at(0.0, 0.0, 5)).is_err());
        assert!(eval_z(0, CylPoint::at(0.0, 0.0, 5)).is_err());
    }

    #[test]
    fn scaled_bubble() {
        let x = CylPoint::at(0.3, 0.2, 5);
        let b = BubbleParams::centered(1.0, 0).unwrap();
        assert_eq!(eval_u_scaled(b, x).unwrap(), eval_u(x));
        let o = CylPoint::at(0.0, 0.0, 5);
        let a = eval_u_scaled(BubbleParams::centered(0.5, 0).unwrap(), o).unwrap();
        let c = eval_u_scaled(BubbleParams::centered(0.25, 0).unwrap(), o).unwrap();
        assert!((c / a - 2f64.powf(1.5)).abs() < 1e-13);
        let mu = 0.37;
        let v = eval_u_scaled(BubbleParams::centered(mu, 0).unwrap(), o).unwrap();
        assert!((v - 27f64.sqrt() * mu.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_differences() {
        let h = 1e-6;
        for &(r, xn) in &[(0.3, 0.2), (2.0, 1.5), (0.0, 0.7)] {
            let g = eval_u_full(CylPoint::at(r, xn, 5));
            let dr = (eval_u(CylPoint::at(r + h, xn, 5)) - eval_u(CylPoint::at((r - h).abs(), xn, 5))) / (2.0 * h);
            let dn = (eval_u(CylPoint::at(r, xn + h, 5)) - eval_u(CylPoint::at(r, xn - h, 5))) / (2.0 * h);
            if r > 0.0 {
                assert!((g.grad_r - dr).abs() < 1e-8);
            }
            assert!((g.grad_xn - dn).abs() < 1e-8);
        }
    }

    #[test]
    fn z_normal_derivative_matches_differences() {
        let xt = [0.3, -0.2, 0.5, 0.1];
        let h = 1e-6;
        for j in 1..=5 {
            let d = z_dn_vec(j, &xt, 0.4).unwrap();
            let fd = (eval_z_vec(j, &xt, 0.4 + h).unwrap() - eval_z_vec(j, &xt, 0.4 - h).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7, "j={j}");
        }
    }

    #[test]
    fn scaled_bubble_is_harmonic() {
        // second differences of the dilated profile in the axis plane
        let b = BubbleParams::new(0.6, 0.0, 0.0, 0).unwrap();
        let h = 1e-3;
        for &(r, xn) in &[(0.5, 0.3), (1.2, 0.9), (0.2, 2.0)] {
            let f = |r: f64, xn: f64| eval_u_scaled(b, CylPoint::at(r, xn, 5)).unwrap();
            let d2 = |a: f64, b0: f64, c: f64, d: f64, e: f64| (-a + 16.0 * b0 - 30.0 * c + 16.0 * d - e) / (12.0 * h * h);
            let c = f(r, xn);
            let urr = d2(f(r - 2.0 * h, xn), f(r - h, xn), c, f(r + h, xn), f(r + 2.0 * h, xn));
            let unn = d2(f(r, xn - 2.0 * h), f(r, xn - h), c, f(r, xn + h), f(r, xn + 2.0 * h));
            let ur = (f(r - 2.0 * h, xn) - 8.0 * f(r - h, xn) + 8.0 * f(r + h, xn) - f(r + 2.0 * h, xn)) / (12.0 * h);
            let lap = urr + 3.0 / r * ur + unn;
            assert!(lap.abs() < 1e-6, "{lap}");
        }
    }

    #[test]
    fn axis_point_residuals_vanish() {
        let tol = Tolerances::default();
        for j in 1..=5 {
            let (i, b) = kernel_residuals(j, &[CylPoint::at(0.0, 0.0, 5)], &tol).unwrap();
            assert_eq!(i, 0.0);
            assert!(b < 1e-12);
        }
        assert!(kernel_residuals(1, &[], &tol).is_err());
    }

    #[test]
    fn z_n_changes_sign_on_unit_sphere() {
        for k in 0..50 {
            let th = k as f64 / 49.0 * std::f64::consts::FRAC_PI_2;
            for (rho, sgn) in [(0.9, 1.0), (1.1, -1.0)] {
                let v = eval_z(5, CylPoint::at(rho * th.sin(), rho * th.cos(), 5)).unwrap();
                assert!(v * sgn > 0.0);
            }
        }
    }
}
