//! Heat-evolved monomial bumps whose derivative matrix at a few boundary
//! points is inverted, giving functions with prescribed Taylor data.

use super::dist;
use crate::base::{eta, Tolerances};
use crate::error::{invalid, BblError, Result};
use crate::numerics::quad::{gauss_hermite, integrate};
use crate::numerics::gamma;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

/// Cross-point entries are dropped when `(sep - 2d)^2 / (4 t)` exceeds this.
const CROSS_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentSet {
    pub dim: usize,
    /// Tangential coordinates of the boundary points.
    pub points: Vec<Vec<f64>>,
    pub order: u32,
    pub d: f64,
    pub base_time: f64,
    /// Multi-indices `m` with `|m| <= order` and even `m_n`.
    pub indices: Vec<Vec<u32>>,
    /// `matrix[(j,k)][(i,m)] = D^k g_{p_i,m}(p_j, base_time)`, blocks ordered by point.
    pub matrix: Vec<Vec<f64>>,
    /// Inverse of `matrix`; column `(i,m)` gives `V_{p_i,m}` in terms of the bumps.
    pub coeffs: Vec<Vec<f64>>,
}

/// Multi-indices in `N^n` with total degree `<= order`, by degree then lexicographically.
/// With `even_last`, only those with even last entry.
pub fn multi_indices(n: usize, order: u32, even_last: bool) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in (0..=left).rev() {
            cur.push(v);
            rec(n, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 0..=order {
        rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    }
    out.retain(|m| !even_last || m[n - 1] % 2 == 0);
    out
}

/// Coefficients of the probabilists' Hermite polynomial `He_k`.
fn hermite(k: u32) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..k as usize {
        let mut next = vec![0.0; j + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= j as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn he_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// `E[v^a eta(sigma |v| / d)]` for a standard normal `v` in `R^n`, via sphere
/// moments and one radial integral.
struct GaussMoments {
    n: usize,
    radial: Vec<f64>,
}

impl GaussMoments {
    fn new(n: usize, c: f64, max_deg: usize, tol: &Tolerances) -> Result<Self> {
        let mut radial = Vec::with_capacity(max_deg + 1);
        for deg in 0..=max_deg {
            let q = (deg + n - 1) as f64;
            // eta = 1 on [0, c], the bridge on [c, 2c]
            let core = 2f64.powf((q - 1.0) / 2.0) * gamma((q + 1.0) / 2.0) * gamma_lr((q + 1.0) / 2.0, c * c / 2.0);
            let bridge = integrate(|r| r.powf(q) * (-r * r / 2.0).exp() * eta(r / c), c, 2.0 * c, 1e-300, tol.quad_rel * 1e-4)?.value;
            radial.push(core + bridge);
        }
        Ok(Self { n, radial })
    }

    fn moment(&self, a: &[u32]) -> f64 {
        if a.iter().any(|v| v % 2 == 1) {
            return 0.0;
        }
        let deg: u32 = a.iter().sum();
        let sphere = 2.0 * a.iter().map(|&v| gamma((v as f64 + 1.0) / 2.0)).product::<f64>() / gamma((deg as f64 + self.n as f64) / 2.0);
        sphere * self.radial[deg as usize] / (2.0 * std::f64::consts::PI).powf(self.n as f64 / 2.0)
    }
}

/// `D^k g_m(0, t)` for the bump centered at the evaluation point, in closed form.
fn same_point_entry(k: &[u32], m: &[u32], sigma: f64, mom: &GaussMoments) -> f64 {
    let n = k.len();
    let hs: Vec<Vec<f64>> = k.iter().map(|&kj| hermite(kj)).collect();
    // expand prod_j He_{k_j}(v_j) v_j^{m_j} and take Gaussian moments term by term
    let mut acc = 0.0;
    let mut idx = vec![0usize; n];
    let mut a = vec![0u32; n];
    loop {
        let mut coef = 1.0;
        for j in 0..n {
            coef *= hs[j][idx[j]];
            a[j] = idx[j] as u32 + m[j];
        }
        if coef != 0.0 {
            acc += coef * mom.moment(&a);
        }
        let mut j = 0;
        loop {
            if j == n {
                let km: i32 = m.iter().sum::<u32>() as i32 - k.iter().sum::<u32>() as i32;
                let mf: f64 = m.iter().map(|&v| factorial(v)).product();
                return sigma.powi(km) / mf * acc;
            }
            idx[j] += 1;
            if idx[j] < hs[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Builds the derivative matrix at `base_time`, checks strict diagonal
/// dominance and inverts it.
pub fn build_adjustments(points: &[Vec<f64>], order: u32, d: f64, base_time: f64, tol: &Tolerances) -> Result<AdjustmentSet> {
    if points.is_empty() {
        return invalid("need at least one point");
    }
    let dim = points[0].len() + 1;
    if dim < 2 || points.iter().any(|p| p.len() + 1 != dim) {
        return invalid("points must share a dimension");
    }
    if !(d > 0.0 && base_time > 0.0) {
        return invalid("d and base_time must be positive");
    }
    let mut sep = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            sep = sep.min(dist(a, b));
        }
    }
    if sep <= 4.0 * d {
        return invalid(format!("point separation {sep} must exceed 4d = {}", 4.0 * d));
    }
    if sep.is_finite() && (sep - 2.0 * d).powi(2) / (4.0 * base_time) < CROSS_EXPONENT {
        return invalid(format!(
            "base_time {base_time} too large: bumps at distinct points overlap beyond e^-{CROSS_EXPONENT} (need t <= {:.3e})",
            (sep - 2.0 * d).powi(2) / (4.0 * CROSS_EXPONENT)
        ));
    }
    let indices = multi_indices(dim, order, true);
    let sigma = (2.0 * base_time).sqrt();
    let mom = GaussMoments::new(dim, d / sigma, 2 * order as usize, tol)?;
    let b = indices.len();
    let block: Vec<Vec<f64>> = indices.iter().map(|k| indices.iter().map(|m| same_point_entry(k, m, sigma, &mom)).collect()).collect();
    let size = b * points.len();
    let mut mat = DMatrix::<f64>::zeros(size, size);
    for p in 0..points.len() {
        for r in 0..b {
            for c in 0..b {
                mat[(p * b + r, p * b + c)] = block[r][c];
            }
        }
    }
    for r in 0..size {
        let off: f64 = (0..size).filter(|&c| c != r).map(|c| mat[(r, c)].abs()).sum();
        if !(mat[(r, r)].abs() > off) {
            return Err(BblError::NotDiagonallyDominant(format!("row {r}: |diag| = {:.3e}, off-diagonal sum {off:.3e}", mat[(r, r)].abs())));
        }
    }
    let inv = mat.clone().try_inverse().ok_or_else(|| BblError::LinearAlgebra("derivative matrix is singular".into()))?;
    let to_rows = |m: &DMatrix<f64>| (0..size).map(|r| (0..size).map(|c| m[(r, c)]).collect()).collect();
    Ok(AdjustmentSet { dim, points: points.to_vec(), order, d, base_time, indices, matrix: to_rows(&mat), coeffs: to_rows(&inv) })
}

/// Gauss-Hermite rule for a standard normal, made exactly symmetric.
fn normal_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_hermite(m);
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let s = std::f64::consts::PI.sqrt();
    for i in 0..m.div_ceil(2) {
        let j = m - 1 - i;
        let a = 0.5 * (pairs[j].0 - pairs[i].0);
        let wt = 0.5 * (pairs[i].1 + pairs[j].1) / s;
        nodes[i] = -a * std::f64::consts::SQRT_2;
        nodes[j] = a * std::f64::consts::SQRT_2;
        weights[i] = wt;
        weights[j] = wt;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

impl AdjustmentSet {
    /// Column labels `(point, m)`.
    pub fn columns(&self) -> Vec<(usize, Vec<u32>)> {
        (0..self.points.len()).flat_map(|p| self.indices.iter().map(move |m| (p, m.clone()))).collect()
    }

    fn bump(&self, m: &[u32], w: &[f64]) -> f64 {
        let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let e = eta(r / self.d);
        if e == 0.0 {
            return 0.0;
        }
        e * w.iter().zip(m).map(|(v, &k)| v.powi(k as i32) / factorial(k)).product::<f64>()
    }

    /// `D^k g_col(x, t)` for every requested `k` and every column, by tensor
    /// Gauss-Hermite quadrature with the derivatives carried by the kernel.
    pub fn bump_derivatives(&self, x: &[f64], t: f64, ks: &[Vec<u32>], nodes: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.dim;
        if x.len() != n || ks.iter().any(|k| k.len() != n) {
            return invalid("point and derivative orders must have the space dimension");
        }
        if !(t > 0.0) || nodes == 0 {
            return invalid("need t > 0 and at least one node");
        }
        let sigma = (2.0 * t).sqrt();
        let (v, w) = normal_rule(nodes);
        let cols = self.columns();
        let mut out = vec![vec![0.0; cols.len()]; ks.len()];
        let hs: Vec<Vec<Vec<f64>>> = ks.iter().map(|k| k.iter().map(|&kj| hermite(kj)).collect()).collect();
        let reach = 2.0 * self.d + sigma * v[nodes - 1] * (n as f64).sqrt();
        let near: Vec<usize> = (0..self.points.len())
            .filter(|&i| {
                let mut p = self.points[i].clone();
                p.push(0.0);
                dist(x, &p) < reach
            })
            .collect();
        let total = nodes.pow(n as u32);
        let mut idx = vec![0usize; n];
        let mut wv = vec![0.0; n];
        let mut vals = vec![0.0; cols.len()];
        for _ in 0..total {
            let weight: f64 = idx.iter().map(|&a| w[a]).product();
            let mut any = false;
            vals.iter_mut().for_each(|v| *v = 0.0);
            for &i in &near {
                for j in 0..n {
                    let pj = if j < n - 1 { self.points[i][j] } else { 0.0 };
                    wv[j] = x[j] - pj - sigma * v[idx[j]];
                }
                for (c, (pi, m)) in cols.iter().enumerate() {
                    if *pi == i {
                        vals[c] = self.bump(m, &wv);
                        any |= vals[c] != 0.0;
                    }
                }
            }
            if any {
                for (kk, h) in hs.iter().enumerate() {
                    let mut f = weight;
                    for j in 0..n {
                        f *= he_eval(&h[j], v[idx[j]]);
                    }
                    if f != 0.0 {
                        for (o, val) in out[kk].iter_mut().zip(&vals) {
                            *o += f * val;
                        }
                    }
                }
            }
            for j in 0..n {
                idx[j] += 1;
                if idx[j] < nodes {
                    break;
                }
                idx[j] = 0;
            }
        }
        for (kk, k) in ks.iter().enumerate() {
            let deg: u32 = k.iter().sum();
            let s = if deg % 2 == 0 { 1.0 } else { -1.0 } * sigma.powi(-(deg as i32));
            out[kk].iter_mut().for_each(|o| *o *= s);
        }
        Ok(out)
    }

    /// `D^k V_col(x, t)` for every requested `k` and every column.
    pub fn derivatives(&self, x: &[f64], t: f64, ks: &[Vec<u32>], nodes: usize) -> Result<Vec<Vec<f64>>> {
        let g = self.bump_derivatives(x, t, ks, nodes)?;
        let size = self.coeffs.len();
        Ok(g.iter().map(|row| (0..size).map(|c| (0..size).map(|r| row[r] * self.coeffs[r][c]).sum()).collect()).collect())
    }

    /// Largest `|D^k V_{p,m}(p', base_time) - delta|` over all `|k| <= order`,
    /// computed by quadrature independently of the closed-form matrix.
    pub fn kronecker_defect(&self, nodes: usize) -> Result<f64> {
        let ks = multi_indices(self.dim, self.order, false);
        let cols = self.columns();
        let mut worst: f64 = 0.0;
        for (j, p) in self.points.iter().enumerate() {
            let mut x = p.clone();
            x.push(0.0);
            let dv = self.derivatives(&x, self.base_time, &ks, nodes)?;
            for (kk, k) in ks.iter().enumerate() {
                for (c, (i, m)) in cols.iter().enumerate() {
                    let target = if *i == j && m == k { 1.0 } else { 0.0 };
                    worst = worst.max((dv[kk][c] - target).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Largest `|D^k V(x~, 0, t)|` over `k` with odd normal order, relative to
    /// the size of the quadrature terms.
    pub fn odd_normal_defect(&self, xs: &[Vec<f64>], t: f64, nodes: usize) -> Result<f64> {
        let mut ks = multi_indices(self.dim, self.order + 1, false);
        ks.retain(|k| k[self.dim - 1] % 2 == 1);
        let mut worst: f64 = 0.0;
        for xt in xs {
            let mut x = xt.clone();
            x.push(0.0);
            let dv = self.derivatives(&x, t, &ks, nodes)?;
            for row in &dv {
                for v in row {
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Total mass scale `sum |matrix|`, used to read defects relative to the entries.
    pub fn scale(&self) -> f64 {
        self.matrix.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_sets() {
        assert_eq!(multi_indices(5, 2, true).len(), 16);
        assert_eq!(multi_indices(5, 2, false).len(), 21);
        assert_eq!(multi_indices(3, 0, true), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn hermite_polynomials() {
        assert_eq!(hermite(3), vec![0.0, -3.0, 0.0, 1.0]);
        assert_eq!(hermite(4), vec![3.0, 0.0, -6.0, 0.0, 1.0]);
    }

    #[test]
    fn single_point_order_zero() {
        let tol = Tolerances::default();
        let a = build_adjustments(&[vec![0.3, -0.1, 0.0, 0.2]], 0, 0.1, 1e-4, &tol).unwrap();
        assert_eq!(a.matrix.len(), 1);
        assert!((a.matrix[0][0] - 1.0).abs() < 1e-6);
        let v = a.derivatives(&[0.3, -0.1, 0.0, 0.2, 0.0], 1e-4, &[vec![0; 5]], 10).unwrap();
        assert!((v[0][0] - 1.0).abs() < 1e-6, "{}", v[0][0]);
    }

    #[test]
    fn matrix_tends_to_identity() {
        let tol = Tolerances::default();
        let p = vec![vec![0.0, 0.0, 0.0, 0.0]];
        let mut prev = f64::INFINITY;
        for t in [1e-3, 1e-4, 1e-5, 1e-6] {
            let a = build_adjustments(&p, 2, 0.4, t, &tol).unwrap();
            let mut dev: f64 = 0.0;
            for (r, row) in a.matrix.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    dev = dev.max((v - if r == c { 1.0 } else { 0.0 }).abs());
                }
            }
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-5, "{prev}");
    }

    #[test]
    fn closed_form_heat_of_quadratic() {
        // away from the cutoff, e^{t Delta} x_1^2 / 2 = x_1^2 / 2 + t
        let tol = Tolerances::default();
        let t = 1e-4;
        let a = build_adjustments(&[vec![0.0; 4]], 2, 0.2, t, &tol).unwrap();
        let col = a.indices.iter().position(|m| m == &vec![2, 0, 0, 0, 0]).unwrap();
        let row0 = a.indices.iter().position(|m| m == &vec![0; 5]).unwrap();
        assert!((a.matrix[row0][col] - t).abs() < 1e-12);
    }

    #[test]
    fn kronecker_property_three_points() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<Vec<f64>> = (0..3).map(|k| (0..4).map(|j| if j == 0 { k as f64 } else { rng.random_range(-0.3..0.3) }).collect()).collect();
        let d = 0.1;
        let a = build_adjustments(&pts, 2, d, d * d / 100.0, &tol).unwrap();
        let defect = a.kronecker_defect(8).unwrap();
        assert!(defect < 1e-6, "{defect}");
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|j| pts[0][j] + rng.random_range(-0.15..0.15)).collect()).collect();
        let odd = a.odd_normal_defect(&xs, a.base_time, 6).unwrap();
        assert!(odd < 1e-9, "{odd}");
    }

    #[test]
    fn rejects_large_time_and_close_points() {
        let tol = Tolerances::default();
        let pts = vec![vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]];
        assert!(build_adjustments(&pts, 1, 0.1, 0.05, &tol).is_err());
        assert!(build_adjustments(&pts, 1, 0.3, 1e-4, &tol).is_err());
        // a single point has no overlap guard, only diagonal dominance
        assert!(matches!(build_adjustments(&[vec![0.0; 4]], 2, 0.1, 1.0, &tol), Err(BblError::NotDiagonallyDominant(_))));
    }
}
