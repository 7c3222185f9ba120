use super::hermite::{eig_count_neumann, hermite_tilde, neumann_eigenfunctions, EigenFunction};
use crate::base::{eta, Tolerances};
use crate::error::{invalid, BblError, Result};
use crate::numerics::gamma;
use crate::numerics::quad::{composite_gl, integrate_pts};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Cut-off dual basis `e~_i = eta(|z|/M) sum_l mix_{il} e_l` with
/// `(e~_i, e_j)_rho = delta_{ij}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizedBasis {
    pub count: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub dim: usize,
    pub functions: Vec<EigenFunction>,
    pub gram: Vec<Vec<f64>>,
    pub mix: Vec<Vec<f64>>,
    /// `max |mix G' - I|` with `G'` recomputed by an independent radial rule.
    pub biorth_defect: f64,
}

impl LocalizedBasis {
    pub fn eval(&self, i: usize, z: &[f64]) -> f64 {
        let rho = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c = eta(rho / self.m);
        if c == 0.0 {
            return 0.0;
        }
        c * self.functions.iter().zip(&self.mix[i]).map(|(f, a)| a * f.eval(z)).sum::<f64>()
    }
}

const M_START: f64 = 8.0;
const M_CAP: f64 = 1024.0;

/// Number of eigenfunctions with eigenvalue at most `ceil(p l) + 1`, the
/// basis size needed for a bubble of caloric order `l`.
pub fn basis_size_for_order(l: u32, dim: usize) -> Result<u64> {
    let p = dim as f64 / (dim as f64 - 2.0);
    eig_count_neumann((p * l as f64).ceil() + 1.0, dim)
}

fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Gram matrix `(e_i eta(./M), e_l)_rho` on the half-space.
///
/// Each product `e_i e_l` is a sum of monomials `z^beta`; in polar form the
/// angular factor is `prod Gamma((beta_j+1)/2) / Gamma((|beta|+n)/2)` for
/// even `beta` and the radial factor is `rad[|beta|]`.
fn gram(funcs: &[EigenFunction], dim: usize, rad: &[f64]) -> DMatrix<f64> {
    let k = funcs.len();
    let norms: Vec<f64> = funcs.iter().map(|f| f.norm_sq_half()).collect();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for l in i..k {
            let mut q = vec![1.0];
            for j in 0..dim {
                let p = conv(&hermite_tilde(funcs[i].multi.0[j]).coeffs, &hermite_tilde(funcs[l].multi.0[j]).coeffs);
                let w: Vec<f64> =
                    p.iter().enumerate().map(|(d, c)| if d % 2 == 0 { c * gamma((d as f64 + 1.0) / 2.0) } else { 0.0 }).collect();
                q = conv(&q, &w);
            }
            let v: f64 = q.iter().enumerate().map(|(d, c)| c * rad[d] / gamma((d + dim) as f64 / 2.0)).sum();
            let v = v / (norms[i] * norms[l]).sqrt();
            g[(i, l)] = v;
            g[(l, i)] = v;
        }
    }
    g
}

fn radial_end(m: f64, dmax: usize, dim: usize) -> f64 {
    // past this radius r^{d+n-1} e^{-r^2/4} is below e^{-600} of its peak
    (2.0 * m).min((2.0 * (dmax + dim) as f64).sqrt() + 50.0)
}

fn radial_adaptive(d: usize, dim: usize, m: f64, dmax: usize) -> Result<f64> {
    let end = radial_end(m, dmax, dim);
    let mut pts = vec![0.0];
    for b in [m, 2.0 * m] {
        if b < end {
            pts.push(b);
        }
    }
    pts.push(end);
    let e = (d + dim - 1) as i32;
    let f = |r: f64| r.powi(e) * (-r * r / 4.0).exp() * eta(r / m);
    Ok(integrate_pts(f, &pts, 0.0, 1e-14, 4000)?.value)
}

fn radial_gl(d: usize, dim: usize, m: f64, dmax: usize) -> f64 {
    let end = radial_end(m, dmax, dim);
    let steps = (end / 0.5).ceil() as usize;
    let breaks: Vec<f64> = (0..=steps).map(|i| end * i as f64 / steps as f64).collect();
    let (x, w) = composite_gl(&breaks, 24);
    let e = (d + dim - 1) as i32;
    x.iter().zip(&w).map(|(r, wi)| wi * r.powi(e) * (-r * r / 4.0).exp() * eta(r / m)).sum()
}

fn strictly_dominant(g: &DMatrix<f64>) -> bool {
    (0..g.nrows()).all(|i| {
        let off: f64 = (0..g.ncols()).filter(|&l| l != i).map(|l| g[(i, l)].abs()).sum();
        g[(i, i)].abs() > off
    })
}

/// Builds `n_max + 1` localized dual functions. `M` starts at 8 and doubles
/// until the Gram matrix is strictly diagonally dominant.
pub fn build_localized_basis(n_max: usize, dim: usize, tol: &Tolerances) -> Result<LocalizedBasis> {
    if dim < 2 {
        return invalid("dimension must be at least 2");
    }
    let funcs = neumann_eigenfunctions(n_max + 1, dim);
    let dmax = 2 * funcs.iter().map(|f| f.multi.order() as usize).max().unwrap_or(0);
    let mut m = M_START;
    loop {
        let rad: Vec<f64> = (0..=dmax).map(|d| radial_adaptive(d, dim, m, dmax)).collect::<Result<_>>()?;
        let g = gram(&funcs, dim, &rad);
        if strictly_dominant(&g) {
            let inv = g.clone().try_inverse().ok_or_else(|| BblError::LinearAlgebra("singular Gram matrix".into()))?;
            let mix = (&inv + inv.transpose()) * 0.5;
            let rad2: Vec<f64> = (0..=dmax).map(|d| radial_gl(d, dim, m, dmax)).collect();
            let g2 = gram(&funcs, dim, &rad2);
            let defect = (&mix * &g2 - DMatrix::identity(funcs.len(), funcs.len())).abs().max();
            if defect > tol.eig_tol {
                return Err(BblError::LinearAlgebra(format!("biorthogonality defect {defect:.3e} above tolerance")));
            }
            let rows = |a: &DMatrix<f64>| (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
            return Ok(LocalizedBasis {
                count: funcs.len(),
                m,
                dim,
                functions: funcs,
                gram: rows(&g),
                mix: rows(&mix),
                biorth_defect: defect,
            });
        }
        m *= 2.0;
        if m > M_CAP {
            return Err(BblError::NotDiagonallyDominant(format!("no diagonal dominance up to M = {M_CAP}")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inner_rho, Domain};

    #[test]
    fn single_function() {
        let b = build_localized_basis(0, 5, &Tolerances::default()).unwrap();
        assert_eq!(b.count, 1);
        assert!((b.mix[0][0] * b.gram[0][0] - 1.0).abs() < 1e-14);
        assert!((b.gram[0][0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn uncut_gram_is_identity() {
        let funcs = neumann_eigenfunctions(12, 3);
        let rad: Vec<f64> = (0..=8).map(|d| 2f64.powi(d as i32 + 2) * gamma((d + 3) as f64 / 2.0)).collect();
        let g = gram(&funcs, 3, &rad);
        assert!((g - DMatrix::identity(12, 12)).abs().max() < 1e-12);
    }

    #[test]
    fn gram_matches_tensor_quadrature() {
        // compare one cut entry against brute-force Gauss quadrature of the uncut product
        let funcs = neumann_eigenfunctions(6, 3);
        let rad: Vec<f64> = (0..=4).map(|d| radial_gl(d, 3, 1.0e3, 4)).collect();
        let g = gram(&funcs, 3, &rad);
        for i in 0..6 {
            for l in 0..6 {
                let q = inner_rho(&|z| funcs[i].eval(z), &|z| funcs[l].eval(z), 3, Domain::Half, 6).unwrap();
                assert!((g[(i, l)] - q).abs() < 1e-10, "{i} {l}");
            }
        }
    }

    #[test]
    fn biorthogonal_for_first_order_bubble() {
        let n = basis_size_for_order(1, 5).unwrap() as usize;
        let b = build_localized_basis(n, 5, &Tolerances::default()).unwrap();
        assert_eq!(b.count, n + 1);
        assert!(b.biorth_defect < 1e-9);
        for i in 0..b.count {
            for l in 0..b.count {
                assert!((b.mix[i][l] - b.mix[l][i]).abs() < 1e-12);
            }
        }
        assert_eq!(b.eval(0, &[20.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
    }
}
