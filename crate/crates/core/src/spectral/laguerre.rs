use crate::base::{CylPoint, TimeWindow};
use crate::error::{invalid, Result};
use crate::numerics::poly::{dyadic, q_to_f64, RatPoly, Q};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Unnormalized Laguerre polynomial `r^{-nu} e^r (d/dr)^l (r^{nu+l} e^{-r})`,
/// equal to `l! L_l^{nu}(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaguerrePoly {
    pub l: u32,
    pub nu: f64,
    /// Monomial coefficients `c_0..c_l`.
    pub coeffs: Vec<f64>,
    #[serde(skip)]
    pub exact: Option<RatPoly>,
}

impl LaguerrePoly {
    pub fn eval(&self, r: f64) -> f64 {
        crate::numerics::poly::horner(&self.coeffs, r)
    }
}

const EXACT_MAX_DEGREE: u32 = 16;

/// Leibniz expansion of the Rodrigues form:
/// `c_k = (-1)^k C(l,k) prod_{j=k+1}^{l} (nu + j)`.
pub fn laguerre_mod(l: u32, nu: f64) -> Result<LaguerrePoly> {
    if !(nu > -1.0) {
        return invalid(format!("Laguerre parameter {nu} must exceed -1"));
    }
    let exact = match dyadic(nu) {
        Some(q) if l <= EXACT_MAX_DEGREE => {
            let mut c = Vec::with_capacity(l as usize + 1);
            for k in 0..=l {
                let mut v = Q::from_integer(binom(l, k) as i128);
                for j in k + 1..=l {
                    v *= q + Q::from_integer(j as i128);
                }
                c.push(if k % 2 == 1 { -v } else { v });
            }
            Some(RatPoly::new(c))
        }
        _ => None,
    };
    let coeffs = match &exact {
        Some(p) => {
            let mut c = p.coeffs_f64();
            c.resize(l as usize + 1, 0.0);
            c
        }
        None => (0..=l)
            .map(|k| {
                let mut v = binom(l, k) as f64;
                for j in k + 1..=l {
                    v *= nu + j as f64;
                }
                if k % 2 == 1 { -v } else { v }
            })
            .collect(),
    };
    Ok(LaguerrePoly { l, nu, coeffs, exact })
}

fn binom(n: u32, k: u32) -> u64 {
    let mut r: u64 = 1;
    for i in 0..k as u64 {
        r = r * (n as u64 - i) / (i + 1);
    }
    r
}

/// Coefficients `a_k` of `Theta_l = sum_k a_k |x|^{2k} (T-t)^{l-k}`.
pub fn theta_coeffs(l: u32, dim: usize) -> Result<Vec<f64>> {
    let lp = laguerre_mod(l, (dim as f64 - 2.0) / 2.0)?;
    if let Some(p) = &lp.exact {
        let c = p.coeffs();
        let c0 = c[0];
        let mut out = Vec::with_capacity(c.len());
        let mut four = Q::one();
        for ck in c {
            out.push(q_to_f64(&(-*ck / c0 / four)));
            four *= Q::from_integer(4);
        }
        out.resize(l as usize + 1, 0.0);
        return Ok(out);
    }
    let c0 = lp.coeffs[0];
    Ok(lp.coeffs.iter().enumerate().map(|(k, ck)| -ck / c0 / 4f64.powi(k as i32)).collect())
}

/// `Theta_l(x,t) = -(T-t)^l L_l(|x|^2 / (4(T-t))) / L_l(0)`.
pub fn theta(l: u32, x: CylPoint, w: TimeWindow) -> Result<f64> {
    let a = theta_coeffs(l, x.dim)?;
    let tau = w.tau();
    let r2 = x.norm2();
    Ok(a.iter().enumerate().map(|(k, ak)| ak * r2.powi(k as i32) * tau.powi(l as i32 - k as i32)).sum())
}

/// Heat and Neumann residuals of `Theta_l` at the samples, from exact
/// polynomial derivatives evaluated in floating point.
///
/// With `R = |x|^2`, the Laplacian of `g(R)` is `4R g'' + 2n g'` and the
/// normal derivative is `2 xn g'`.
pub fn theta_heat_residual(l: u32, samples: &[(CylPoint, TimeWindow)]) -> Result<(f64, f64)> {
    let mut imax: f64 = 0.0;
    let mut bmax: f64 = 0.0;
    for &(x, w) in samples {
        let a = theta_coeffs(l, x.dim)?;
        let n = x.dim as f64;
        let tau = w.tau();
        let r2 = x.norm2();
        let li = l as i32;
        let mut dt = 0.0;
        let mut lap = 0.0;
        let mut dr = 0.0;
        for (k, ak) in a.iter().enumerate() {
            let k = k as i32;
            if li - k >= 1 {
                // d/dt = -d/dtau
                dt -= ak * (li - k) as f64 * r2.powi(k) * tau.powi(li - k - 1);
            }
            if k >= 1 {
                let g1 = ak * k as f64 * r2.powi(k - 1) * tau.powi(li - k);
                dr += g1;
                lap += 2.0 * n * g1;
            }
            if k >= 2 {
                lap += 4.0 * ak * (k * (k - 1)) as f64 * r2.powi(k - 1) * tau.powi(li - k);
            }
        }
        let scale = 1.0 + dt.abs().max(lap.abs());
        imax = imax.max((dt - lap).abs() / scale);
        if x.xn == 0.0 {
            bmax = bmax.max((2.0 * x.xn * dr).abs());
        }
    }
    Ok((imax, bmax))
}

/// Whether the heat residual of `Theta_l` vanishes in exact rational arithmetic.
pub fn theta_heat_identity_exact(l: u32, dim: usize) -> bool {
    let lp = match laguerre_mod(l, (dim as f64 - 2.0) / 2.0) {
        Ok(p) => p,
        Err(_) => return false,
    };
    let Some(p) = lp.exact else { return false };
    let c = p.coeffs();
    let n = Q::from_integer(dim as i128);
    // coefficient of R^k tau^{l-k-1} in -d_tau Theta - (4R d_R^2 + 2n d_R) Theta, up to -1/c_0
    let mut four = vec![Q::one()];
    for _ in 0..=l {
        let last = *four.last().expect("non-empty");
        four.push(last * Q::from_integer(4));
    }
    let a = |k: usize| if k <= l as usize { c[k] / four[k] } else { Q::zero() };
    (0..l as usize).all(|k| {
        let kk = Q::from_integer(k as i128 + 1);
        let lhs = a(k) * Q::from_integer((l as i128) - k as i128);
        let rhs = a(k + 1) * (Q::from_integer(4) * kk * Q::from_integer(k as i128) + Q::from_integer(2) * n * kk);
        lhs + rhs == Q::zero()
    })
}
