//! Negative eigenpair of `-Delta f = lambda f` in the half-space with
//! `-d_n f = p U^{p-1} f` on the boundary, plus trace-inequality checks.

use crate::base::Tolerances;
use crate::error::{invalid, BblError, Result};
use crate::numerics::fit::linear_fit;
use crate::numerics::sphere_area;
use crate::profiles::{rayleigh_q, sharp_trace_constant, CylField, CylFunction, ProfileField, QuadratureGrid};
use serde::{Deserialize, Serialize};

/// Graded tensor grid on `[0, r_max] x [0, r_max]` in `(r, xn)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenGrid {
    pub r_nodes: Vec<f64>,
    pub xn_nodes: Vec<f64>,
}

fn graded_axis(r_max: f64, h0: f64, ratio: f64, h_max: f64) -> Vec<f64> {
    let mut x = vec![0.0];
    let mut h = h0;
    while *x.last().unwrap() < r_max {
        let next = x.last().unwrap() + h;
        x.push(next.min(r_max));
        h = (h * ratio).min(h_max);
    }
    // fold a sliver of a last cell into its neighbour
    let m = x.len();
    if m > 2 && x[m - 1] - x[m - 2] < 0.3 * (x[m - 2] - x[m - 3]) {
        x.remove(m - 2);
    }
    x
}

impl EigenGrid {
    /// Spacing `h0` at the origin growing by `ratio` up to `h_max`.
    pub fn graded(r_max: f64, h0: f64, ratio: f64, h_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && h0 > 0.0 && ratio >= 1.0 && h_max >= h0 && h0 < r_max) {
            return invalid("bad graded grid parameters");
        }
        let a = graded_axis(r_max, h0, ratio, h_max);
        Ok(Self { r_nodes: a.clone(), xn_nodes: a })
    }

    /// Default grid with truncation radius `r_max`.
    pub fn standard(r_max: f64) -> Result<Self> {
        Self::graded(r_max, 0.04, 1.1, 0.4)
    }

    /// Every cell split in two.
    pub fn refined(&self) -> Self {
        let split = |v: &[f64]| {
            let mut out = Vec::with_capacity(2 * v.len());
            for w in v.windows(2) {
                out.push(w[0]);
                out.push(0.5 * (w[0] + w[1]));
            }
            out.push(*v.last().unwrap());
            out
        };
        Self { r_nodes: split(&self.r_nodes), xn_nodes: split(&self.xn_nodes) }
    }

    pub fn r_max(&self) -> f64 {
        *self.r_nodes.last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub dim: usize,
    pub lambda0: f64,
    /// Distance to the next discrete eigenvalue.
    pub gap: f64,
    /// `Z_0`, positive, unit `L^2` norm over the half-space.
    pub field: CylField,
    pub decay_rate: f64,
    pub iterations: usize,
}

/// Symmetric banded matrix stored by rows of its lower band.
struct Band {
    n: usize,
    bw: usize,
    a: Vec<f64>,
}

impl Band {
    fn new(n: usize, bw: usize) -> Self {
        Self { n, bw, a: vec![0.0; n * (bw + 1)] }
    }
    /// Entry `(i, j)` with `j <= i <= j + bw`.
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (self.bw + 1) + (i - j)]
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.bw + 1) + (i - j)]
    }
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let v = self.get(i, j);
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }
    /// In-place Cholesky; fails if the matrix is not positive definite.
    fn cholesky(mut self) -> Option<Self> {
        let bw = self.bw;
        for j in 0..self.n {
            let lo = j.saturating_sub(bw);
            let mut d = self.get(j, j);
            for k in lo..j {
                d -= self.get(j, k).powi(2);
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            *self.at(j, j) = d;
            for i in j + 1..(j + bw + 1).min(self.n) {
                let lo_i = i.saturating_sub(bw);
                let mut s = self.get(i, j);
                for k in lo_i.max(lo)..j {
                    s -= self.get(i, k) * self.get(j, k);
                }
                *self.at(i, j) = s / d;
            }
        }
        Some(self)
    }
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.get(i, k) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + self.bw + 1).min(self.n) {
                s -= self.get(k, i) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }
}

/// Lumped finite-volume discretization with weight `r^{n-2}`.
struct Discrete {
    nr: usize,
    nn: usize,
    stiff: Band,
    mass: Vec<f64>,
}

fn dual_weights(x: &[f64], moment: i32) -> Vec<f64> {
    // int over the dual cell of x^moment
    let prim = |a: f64, b: f64| (b.powi(moment + 1) - a.powi(moment + 1)) / (moment + 1) as f64;
    let m = x.len();
    (0..m)
        .map(|i| {
            let lo = if i == 0 { x[0] } else { 0.5 * (x[i - 1] + x[i]) };
            let hi = if i == m - 1 { x[m - 1] } else { 0.5 * (x[i] + x[i + 1]) };
            prim(lo, hi)
        })
        .collect()
}

fn assemble(dim: usize, grid: &EigenGrid) -> Discrete {
    let w = dim as i32 - 2;
    let r = &grid.r_nodes;
    let z = &grid.xn_nodes;
    // the far nodes carry the Dirichlet condition and are dropped
    let nr = r.len() - 1;
    let nn = z.len() - 1;
    let mr = dual_weights(r, w);
    let mn = dual_weights(z, 0);
    let idx = |i: usize, k: usize| i * nn + k;
    let n = nr * nn;
    let mut stiff = Band::new(n, nn);
    let mut mass = vec![0.0; n];
    let nf = dim as f64;
    for i in 0..nr {
        let cell_r = (r[i + 1].powi(w + 1) - r[i].powi(w + 1)) / (w + 1) as f64 / (r[i + 1] - r[i]).powi(2);
        for k in 0..nn {
            let a = idx(i, k);
            mass[a] = mr[i] * mn[k];
            let cr = cell_r * mn[k];
            *stiff.at(a, a) += cr;
            if i + 1 < nr {
                let b = idx(i + 1, k);
                *stiff.at(b, b) += cr;
                *stiff.at(b, a) -= cr;
            }
            let cn = mr[i] / (z[k + 1] - z[k]).powi(2) * (z[k + 1] - z[k]);
            *stiff.at(a, a) += cn;
            if k + 1 < nn {
                let b = idx(i, k + 1);
                *stiff.at(b, b) += cn;
                *stiff.at(b, a) -= cn;
            }
        }
        // boundary potential p U^{p-1} = n / (1 + r^2)
        *stiff.at(idx(i, 0), idx(i, 0)) -= nf / (1.0 + r[i] * r[i]) * mr[i];
    }
    Discrete { nr, nn, stiff, mass }
}

fn dot_m(m: &[f64], x: &[f64], y: &[f64]) -> f64 {
    m.iter().zip(x).zip(y).map(|((a, b), c)| a * b * c).sum()
}

struct Iter {
    lambda: f64,
    vec: Vec<f64>,
    steps: usize,
}

/// Shifted inverse iteration, optionally keeping `M`-orthogonal to `deflate`.
fn inverse_iteration(d: &Discrete, shift: f64, deflate: Option<&[f64]>, tol: f64, polish: usize, max_steps: usize) -> Result<Iter> {
    let mut shifted = Band { n: d.stiff.n, bw: d.stiff.bw, a: d.stiff.a.clone() };
    for (i, m) in d.mass.iter().enumerate() {
        *shifted.at(i, i) -= shift * m;
    }
    let chol = shifted
        .cholesky()
        .ok_or_else(|| BblError::Eigen(format!("shift {shift} is not below the spectrum")))?;
    let n = d.mass.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0).collect();
    let project = |x: &mut Vec<f64>| {
        if let Some(v) = deflate {
            let c = dot_m(&d.mass, x, v) / dot_m(&d.mass, v, v);
            for (a, b) in x.iter_mut().zip(v) {
                *a -= c * b;
            }
        }
    };
    project(&mut x);
    let mut lambda = f64::NAN;
    let mut settled = 0;
    for step in 1..=max_steps {
        let rhs: Vec<f64> = x.iter().zip(&d.mass).map(|(a, m)| a * m).collect();
        let mut y = chol.solve(&rhs);
        project(&mut y);
        let norm = dot_m(&d.mass, &y, &y).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(BblError::Eigen("iteration collapsed".into()));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let ky = d.stiff.mul(&y);
        let next: f64 = y.iter().zip(&ky).map(|(a, b)| a * b).sum();
        x = y;
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            settled += 1;
            // extra sweeps clean the far field, where the vector is tiny
            if settled > polish {
                return Ok(Iter { lambda: next, vec: x, steps: step });
            }
        }
        lambda = next;
    }
    Err(BblError::Eigen(format!("inverse iteration did not converge in {max_steps} steps")))
}

/// Smallest eigenpair of the discretized problem and the gap to the next one.
pub fn solve_lambda0(dim: usize, grid: &EigenGrid, tol: &Tolerances) -> Result<EigenResult> {
    if dim < 3 {
        return invalid("dimension must be at least 3");
    }
    if grid.r_nodes.len() < 4 || grid.xn_nodes.len() < 4 {
        return Err(BblError::GridTooSmall("eigen grid needs at least 4 nodes per axis".into()));
    }
    let d = assemble(dim, grid);
    // the 1D Robin problem with the peak potential bounds the spectrum from below
    let v0 = dim as f64;
    let rough = inverse_iteration(&d, -v0 * v0 - 1.0, None, 1e-6, 0, 2000)?;
    let shift = rough.lambda - 0.05 * rough.lambda.abs().max(0.1);
    let first = inverse_iteration(&d, shift, None, tol.eig_tol, 40, 500)?;
    let lambda0 = first.lambda;
    if lambda0 >= 0.0 {
        return Err(BblError::Eigen(format!("no negative eigenvalue, smallest is {lambda0}")));
    }
    let second = inverse_iteration(&d, shift, Some(&first.vec), 1e-4, 0, 400)?;
    let lambda1 = second.lambda;
    // a second mode below -1% |lambda0| means the discretization is broken
    if lambda1 < -0.01 * lambda0.abs() {
        return Err(BblError::Eigen(format!("two negative eigenvalues {lambda0} and {lambda1}")));
    }
    let mut z = first.vec;
    let sign = if z.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / sphere_area(dim - 1).sqrt();
    z.iter_mut().for_each(|v| *v *= scale);
    let (nr, nn) = (d.nr, d.nn);
    let mut values = vec![0.0; grid.r_nodes.len() * grid.xn_nodes.len()];
    for i in 0..nr {
        for k in 0..nn {
            values[i * grid.xn_nodes.len() + k] = z[i * nn + k];
        }
    }
    let field = CylField::new(dim, grid.r_nodes.clone(), grid.xn_nodes.clone(), values, None)?;
    let mut res = EigenResult {
        dim,
        lambda0,
        gap: lambda1 - lambda0,
        field,
        decay_rate: 0.0,
        iterations: rough.steps + first.steps + second.steps,
    };
    res.decay_rate = decay_rates(&res)?.0;
    Ok(res)
}

impl EigenResult {
    /// `true` when every non-Dirichlet node is strictly positive.
    pub fn is_positive(&self) -> bool {
        let f = &self.field;
        let m = f.xn_nodes.len();
        (0..f.r_nodes.len() - 1).all(|i| (0..m - 1).all(|k| f.get(i, k) > 0.0))
    }

    /// Discrete `L^2` norm over the half-space.
    pub fn l2_norm(&self) -> f64 {
        let f = &self.field;
        let mr = dual_weights(&f.r_nodes, self.dim as i32 - 2);
        let mn = dual_weights(&f.xn_nodes, 0);
        let mut s = 0.0;
        for (i, a) in mr.iter().enumerate() {
            for (k, b) in mn.iter().enumerate() {
                s += a * b * f.get(i, k).powi(2);
            }
        }
        (s * sphere_area(self.dim - 1)).sqrt()
    }

    /// Lumped `L^2` inner product with a closed-form field.
    pub fn inner(&self, g: &dyn CylFunction) -> f64 {
        let f = &self.field;
        let mr = dual_weights(&f.r_nodes, self.dim as i32 - 2);
        let mn = dual_weights(&f.xn_nodes, 0);
        let mut s = 0.0;
        for (i, a) in mr.iter().enumerate() {
            for (k, b) in mn.iter().enumerate() {
                s += a * b * f.get(i, k) * g.value(f.r_nodes[i], f.xn_nodes[k]);
            }
        }
        s * sphere_area(self.dim - 1)
    }

    /// Raw CSV rows `r,xn,value`.
    pub fn to_csv(&self) -> String {
        let f = &self.field;
        let mut out = String::from("r,xn,value\n");
        for (i, r) in f.r_nodes.iter().enumerate() {
            for (k, z) in f.xn_nodes.iter().enumerate() {
                out.push_str(&format!("{r},{z},{:e}\n", f.get(i, k)));
            }
        }
        out
    }
}

/// Fitted decay rates of `log(Z rho^{(n-1)/2})` along the two axes and the
/// diagonal, on `rho` in `[0.2, 0.6] r_max`. Returns `(min, max)`.
fn decay_rates(res: &EigenResult) -> Result<(f64, f64)> {
    let f = &res.field;
    let r_max = f.r_nodes.last().copied().unwrap_or(0.0).min(f.xn_nodes.last().copied().unwrap_or(0.0));
    let (lo, hi) = (0.2 * r_max, 0.6 * r_max);
    let half = (res.dim as f64 - 1.0) / 2.0;
    let rays: [(f64, f64); 3] = [(1.0, 0.0), (0.0, 1.0), (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)];
    let mut rates = Vec::new();
    for (cr, cn) in rays {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for j in 0..=40 {
            let rho = lo + (hi - lo) * j as f64 / 40.0;
            let v = f.value(cr * rho, cn * rho);
            if !(v > 1e-280) {
                return Err(BblError::Eigen(format!("field at rho={rho:.2} is below the floating-point floor")));
            }
            xs.push(rho);
            ys.push(v.ln() + half * rho.ln());
        }
        let fit = linear_fit(&xs, &ys);
        rates.push(-fit.slope);
    }
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Slowest fitted rate over the tested rays.
    pub rate: f64,
    /// Fastest fitted rate.
    pub max_rate: f64,
    /// `nu_fraction * sqrt(-lambda0)`.
    pub required: f64,
    pub passed: bool,
}

/// Decay-rate check against `nu_fraction * sqrt(-lambda0)`.
pub fn decay_check(res: &EigenResult, nu_fraction: f64) -> Result<DecayReport> {
    if !(nu_fraction > 0.0 && nu_fraction < 1.0) {
        return invalid("nu_fraction must lie in (0, 1)");
    }
    if !(res.lambda0 < 0.0) {
        return invalid("decay check needs a negative eigenvalue");
    }
    let (rate, max_rate) = decay_rates(res)?;
    let required = nu_fraction * (-res.lambda0).sqrt();
    Ok(DecayReport { rate, max_rate, required, passed: rate >= required })
}

/// `(int_bdry u^2 rho, (n+4)/4 ||u||^2_{H^1_rho})` with `rho = exp(-|x|^2/4)`.
pub fn trace_rho_check(u: &dyn CylFunction, grid: &QuadratureGrid) -> Result<(f64, f64)> {
    let n = grid.dim as f64;
    let lhs = grid.integrate_boundary(|r| u.value(r, 0.0).powi(2) * (-r * r / 4.0).exp())?;
    let h1 = grid.integrate(|r, xn| {
        let v = u.value(r, xn);
        let (a, b) = u.grad(r, xn);
        (v * v + a * a + b * b) * (-(r * r + xn * xn) / 4.0).exp()
    })?;
    Ok((lhs, (n + 4.0) / 4.0 * h1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscobarReport {
    pub q_of_u: f64,
    pub sharp_constant: f64,
    pub rel_gap: f64,
}

/// Trace quotient of `U` against the sharp constant.
pub fn escobar_check(dim: usize, tol: &Tolerances) -> Result<EscobarReport> {
    if dim < 3 {
        return invalid("dimension must be at least 3");
    }
    let grid = QuadratureGrid::algebraic(dim, tol)?;
    let q_of_u = rayleigh_q(&ProfileField { dim }, &grid)?;
    let sharp_constant = sharp_trace_constant(dim);
    Ok(EscobarReport { q_of_u, sharp_constant, rel_gap: (q_of_u - sharp_constant).abs() / sharp_constant })
}
