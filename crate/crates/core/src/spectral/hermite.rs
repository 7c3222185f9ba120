use crate::error::{invalid, Result};
use crate::numerics::poly::{deriv_f64, horner, RatPoly};
use crate::numerics::quad::{gauss_half_gaussian, gauss_hermite};
use serde::{Deserialize, Serialize};

/// Multi-index `alpha` in `N^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }
    pub fn eigenvalue(&self) -> f64 {
        self.order() as f64 / 2.0
    }
    /// Even in the normal variable, so the normal derivative vanishes on the boundary.
    pub fn neumann_admissible(&self) -> bool {
        self.0.last().is_some_and(|a| a % 2 == 0)
    }
}

/// `H~_alpha(s) = H_alpha(s/2)` with `H_alpha` the physicists' Hermite polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteTilde {
    pub alpha: u32,
    pub coeffs: Vec<f64>,
}

impl HermiteTilde {
    pub fn eval(&self, s: f64) -> f64 {
        horner(&self.coeffs, s)
    }
    pub fn derivative(&self) -> Vec<f64> {
        deriv_f64(&self.coeffs)
    }
    /// `int_R H~_alpha^2 e^{-s^2/4} ds = 2^{alpha+1} alpha! sqrt(pi)`.
    pub fn norm_sq(&self) -> f64 {
        let fact: f64 = (1..=self.alpha).map(|v| v as f64).product();
        2f64.powi(self.alpha as i32 + 1) * fact * std::f64::consts::PI.sqrt()
    }
}

fn hermite_exact(alpha: u32) -> RatPoly {
    let mut prev = RatPoly::one();
    if alpha == 0 {
        return prev;
    }
    let mut cur = RatPoly::x();
    for a in 1..alpha {
        let next = RatPoly::x().mul(&cur).sub(&prev.scale((2 * a as i128).into()));
        prev = cur;
        cur = next;
    }
    cur
}

/// Recurrence `H~_{a+1}(s) = s H~_a(s) - 2a H~_{a-1}(s)`, exact integers up
/// to degree 16, floating point beyond.
pub fn hermite_tilde(alpha: u32) -> HermiteTilde {
    if alpha <= 16 {
        let mut c = hermite_exact(alpha).coeffs_f64();
        c.resize(alpha as usize + 1, 0.0);
        return HermiteTilde { alpha, coeffs: c };
    }
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    for a in 1..alpha {
        let mut next = vec![0.0; a as usize + 2];
        for (k, v) in cur.iter().enumerate() {
            next[k + 1] += v;
        }
        for (k, v) in prev.iter().enumerate() {
            next[k] -= 2.0 * a as f64 * v;
        }
        prev = cur;
        cur = next;
    }
    HermiteTilde { alpha, coeffs: cur }
}

/// Neumann eigenfunction of `-A_z` on the half-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenFunction {
    pub multi: MultiIndex,
    pub eigenvalue: f64,
}

impl EigenFunction {
    pub fn new(multi: MultiIndex) -> Self {
        let eigenvalue = multi.eigenvalue();
        EigenFunction { multi, eigenvalue }
    }

    pub fn factors(&self) -> Vec<HermiteTilde> {
        self.multi.0.iter().map(|&a| hermite_tilde(a)).collect()
    }

    /// Squared `L^2_rho` norm over the half-space `{z_n > 0}`.
    pub fn norm_sq_half(&self) -> f64 {
        self.factors().iter().map(|h| h.norm_sq()).product::<f64>() / 2.0
    }

    /// Unnormalized product `prod_j H~_{alpha_j}(z_j)`.
    pub fn eval_raw(&self, z: &[f64]) -> f64 {
        self.multi.0.iter().zip(z).map(|(&a, &zj)| hermite_tilde(a).eval(zj)).product()
    }

    /// Value of the unit-norm eigenfunction.
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.eval_raw(z) / self.norm_sq_half().sqrt()
    }
}

/// `max |(-A_z - |alpha|/2) prod H~_{alpha_j}(z_j)|` over the samples.
pub fn az_eigen_residual(multi: &MultiIndex, samples: &[Vec<f64>]) -> Result<f64> {
    let hs: Vec<HermiteTilde> = multi.0.iter().map(|&a| hermite_tilde(a)).collect();
    let d1: Vec<Vec<f64>> = hs.iter().map(|h| h.derivative()).collect();
    let d2: Vec<Vec<f64>> = d1.iter().map(|d| deriv_f64(d)).collect();
    let lam = multi.eigenvalue();
    let mut worst: f64 = 0.0;
    for z in samples {
        if z.len() != hs.len() {
            return invalid("sample dimension does not match the multi-index");
        }
        let vals: Vec<f64> = hs.iter().zip(z).map(|(h, &s)| h.eval(s)).collect();
        let prod: f64 = vals.iter().product();
        let mut az = 0.0;
        for j in 0..hs.len() {
            let rest: f64 = vals.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| v).product();
            az += (horner(&d2[j], z[j]) - 0.5 * z[j] * horner(&d1[j], z[j])) * rest;
        }
        worst = worst.max((-az - lam * prod).abs());
    }
    Ok(worst)
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of Neumann eigenfunctions, with multiplicity, whose eigenvalue is at most `c`.
pub fn eig_count_neumann(c: f64, n: usize) -> Result<u64> {
    if n < 2 {
        return invalid("dimension must be at least 2");
    }
    if c < 0.0 {
        return Ok(0);
    }
    let dmax = (2.0 * c + 1e-12).floor() as u64;
    let mut total = 0;
    for d in 0..=dmax {
        // alpha_n = an even, the remaining n-1 entries sum to d - an
        for an in (0..=d).step_by(2) {
            total += binom(d - an + n as u64 - 2, n as u64 - 2);
        }
    }
    Ok(total)
}

/// The first `count` Neumann eigenfunctions in the fixed order:
/// eigenvalue ascending, ties by lexicographic order of `alpha`.
pub fn neumann_eigenfunctions(count: usize, n: usize) -> Vec<EigenFunction> {
    let mut out = Vec::with_capacity(count);
    let mut d: u32 = 0;
    while out.len() < count {
        let mut level = Vec::new();
        let mut cur = vec![0u32; n];
        compositions(d, 0, &mut cur, &mut level);
        level.retain(|m: &MultiIndex| m.neumann_admissible());
        level.sort();
        for m in level {
            if out.len() == count {
                break;
            }
            out.push(EigenFunction::new(m));
        }
        d += 1;
    }
    out
}

fn compositions(rem: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos == cur.len() - 1 {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in 0..=rem {
        cur[pos] = v;
        compositions(rem - v, pos + 1, cur, out);
    }
}

/// Integration domain for the Gaussian inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Full,
    /// `{z_n > 0}`
    Half,
}

const MAX_RULE: usize = 40;

/// `int f g e^{-|z|^2/4} dz` by tensor Gauss rules for the weight
/// `e^{-s^2/4}`, exact when `f g` is a polynomial of degree at most
/// `degree` in each variable.
pub fn inner_rho(
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    domain: Domain,
    degree: usize,
) -> Result<f64> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    let m = degree / 2 + 1;
    if m > MAX_RULE {
        return invalid(format!("degree {degree} exceeds the Gauss rule capacity"));
    }
    let (hx, hw) = gauss_hermite(m);
    let full: Vec<(f64, f64)> = hx.iter().zip(&hw).map(|(x, w)| (2.0 * x, 2.0 * w)).collect();
    let half: Vec<(f64, f64)> = {
        let (x, w) = gauss_half_gaussian(m);
        x.into_iter().zip(w).collect()
    };
    let rules: Vec<&[(f64, f64)]> =
        (0..dim).map(|j| if j == dim - 1 && domain == Domain::Half { &half[..] } else { &full[..] }).collect();
    let mut idx = vec![0usize; dim];
    let mut z = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for j in 0..dim {
            let (x, wj) = rules[j][idx[j]];
            z[j] = x;
            w *= wj;
        }
        total += w * f(&z) * g(&z);
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < rules[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == dim {
                return Ok(total);
            }
        }
    }
}
