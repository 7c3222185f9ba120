//! Gauss–Kronrod adaptive integration and fixed Gauss rules.

use crate::error::{BblError, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::BinaryHeap;
use std::cmp::Ordering;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// One 15-point Kronrod step on `[a, b]`: returns (kronrod value, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let val = rk * h;
    let err = ((rk - rg) * h).abs();
    (val, err)
}

#[derive(Debug)]
struct Seg {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}
impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.partial_cmp(&o.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration over consecutive breakpoints.
///
/// Bisects the segment with the largest error until the total error drops
/// below `max(abs, rel*|I|)` or `max_seg` segments are in use.
pub fn integrate_pts<F: FnMut(f64) -> f64>(
    mut f: F,
    pts: &[f64],
    abs: f64,
    rel: f64,
    max_seg: usize,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for w in pts.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        err += e;
        heap.push(Seg { a: w[0], b: w[1], val: v, err: e });
    }
    while err > abs.max(rel * total.abs()) {
        if heap.len() >= max_seg {
            return Err(BblError::Quadrature(format!(
                "error {err:.3e} above target after {} segments",
                heap.len()
            )));
        }
        let s = heap.pop().expect("non-empty");
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a && m < s.b) {
            heap.push(s);
            break;
        }
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        evals += 30;
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Seg { a: s.a, b: m, val: v1, err: e1 });
        heap.push(Seg { a: m, b: s.b, val: v2, err: e2 });
    }
    // re-sum in a fixed order to damp drift from incremental updates
    let mut segs: Vec<Seg> = heap.into_vec();
    segs.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let value: f64 = segs.iter().map(|s| s.val).sum();
    let error: f64 = segs.iter().map(|s| s.err).sum();
    if !value.is_finite() {
        return Err(BblError::Quadrature("non-finite integrand".into()));
    }
    Ok(QuadResult { value, error, evals })
}

/// Adaptive integration over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, abs: f64, rel: f64) -> Result<QuadResult> {
    integrate_pts(f, &[a, b], abs, rel, 2000)
}

/// Adaptive integration over `[a, inf)` via `x = a + u/(1-u)`.
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, abs: f64, rel: f64) -> Result<QuadResult> {
    let g = |u: f64| {
        let d = 1.0 - u;
        let x = a + u / d;
        let v = f(x) / (d * d);
        if v.is_finite() { v } else { 0.0 }
    };
    integrate_pts(g, &[0.0, 0.5, 0.9, 0.99, 1.0], abs, rel, 4000)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..(m + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = mf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gl_interval(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| v * h).collect())
}

/// Golub–Welsch: nodes and weights from a Jacobi matrix (`alpha`, `beta`)
/// and the total mass `mu0`.
pub fn golub_welsch(alpha: &[f64], beta: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let m = alpha.len();
    let mut j = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        j[(i, i)] = alpha[i];
        if i + 1 < m {
            let b = beta[i + 1].sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    pairs.into_iter().unzip()
}

/// Gauss–Hermite rule for the weight `exp(-x^2)` on the real line.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    let alpha = vec![0.0; m];
    let beta: Vec<f64> = (0..m).map(|k| k as f64 / 2.0).collect();
    golub_welsch(&alpha, &beta, std::f64::consts::PI.sqrt())
}

/// Gauss rule for the weight `exp(-s^2/4)` on `[0, inf)`.
///
/// Recurrence coefficients come from the Stieltjes procedure applied to a
/// fine discretization of the measure.
pub fn gauss_half_gaussian(m: usize) -> (Vec<f64>, Vec<f64>) {
    // discretize on [0, 40] with 80 panels of 20 points
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let (gx, gw) = gauss_legendre(20);
    let panels = 80;
    let l = 40.0;
    for p in 0..panels {
        let a = l * p as f64 / panels as f64;
        let b = l * (p + 1) as f64 / panels as f64;
        for k in 0..gx.len() {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * gx[k];
            xs.push(x);
            ws.push(0.5 * (b - a) * gw[k] * (-x * x / 4.0).exp());
        }
    }
    let mu0: f64 = ws.iter().sum();
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; m];
    let mut p_prev = vec![0.0; xs.len()];
    let mut p_cur = vec![1.0; xs.len()];
    let mut norm_prev = 1.0;
    for k in 0..m {
        let norm: f64 = p_cur.iter().zip(&ws).map(|(p, w)| p * p * w).sum();
        let xnorm: f64 = p_cur.iter().zip(&ws).zip(&xs).map(|((p, w), x)| x * p * p * w).sum();
        alpha[k] = xnorm / norm;
        beta[k] = if k == 0 { mu0 } else { norm / norm_prev };
        let mut p_next = vec![0.0; xs.len()];
        for i in 0..xs.len() {
            p_next[i] = (xs[i] - alpha[k]) * p_cur[i] - if k == 0 { 0.0 } else { beta[k] * p_prev[i] };
        }
        p_prev = p_cur;
        p_cur = p_next;
        norm_prev = norm;
    }
    golub_welsch(&alpha, &beta, mu0)
}

/// Graded panel breakpoints on `[0, l]`: first panel `h0`, geometric growth.
pub fn geometric_breaks(h0: f64, ratio: f64, l: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut h = h0;
    let mut x = 0.0;
    while x + h < l {
        x += h;
        b.push(x);
        h *= ratio;
    }
    b.push(l);
    b
}

/// Composite Gauss–Legendre rule over breakpoints.
pub fn composite_gl(breaks: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(m);
    let mut xs = Vec::with_capacity(m * breaks.len());
    let mut ws = Vec::with_capacity(m * breaks.len());
    for w in breaks.windows(2) {
        let c = 0.5 * (w[0] + w[1]);
        let h = 0.5 * (w[1] - w[0]);
        for k in 0..m {
            xs.push(c + h * gx[k]);
            ws.push(h * gw[k]);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn gk_infinite_gaussian() {
        let r = integrate_to_inf(|x| (-x * x).exp(), 0.0, 1e-14, 1e-12).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gl_weights_sum() {
        for m in [1, 2, 7, 20, 64] {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let i4: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(4) * w).sum();
            if m >= 3 {
                assert!((i4 - 0.4).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(12);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn half_gaussian_moments() {
        // int_0^inf s^k e^{-s^2/4} ds = 2^k Gamma((k+1)/2)
        let (x, w) = gauss_half_gaussian(10);
        for k in 0..19 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(k) * w).sum();
            let exact = 2f64.powi(k) * super::super::gamma((k as f64 + 1.0) / 2.0);
            assert!((q - exact).abs() <= 1e-11 * exact, "k={k} {q} {exact}");
        }
    }
}
