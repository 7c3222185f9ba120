use super::steady::eval_u_full;
use crate::base::CylPoint;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Scalar field on the half-space, radial in `x~`.
pub trait CylFunction: Sync {
    fn value(&self, r: f64, xn: f64) -> f64;

    /// `(d_r f, d_xn f)`; central differences unless overridden.
    fn grad(&self, r: f64, xn: f64) -> (f64, f64) {
        let h = 1e-5 * (1.0 + r.max(xn));
        let gr = if r > h {
            (self.value(r + h, xn) - self.value(r - h, xn)) / (2.0 * h)
        } else {
            (self.value(r + h, xn) - self.value(r, xn)) / h
        };
        let gn = if xn > h {
            (self.value(r, xn + h) - self.value(r, xn - h)) / (2.0 * h)
        } else {
            (self.value(r, xn + h) - self.value(r, xn)) / h
        };
        (gr, gn)
    }
}

/// The steady profile `U` in dimension `dim`.
#[derive(Debug, Clone, Copy)]
pub struct ProfileField {
    pub dim: usize,
}

impl CylFunction for ProfileField {
    fn value(&self, r: f64, xn: f64) -> f64 {
        eval_u_full(CylPoint::at(r, xn, self.dim)).value
    }
    fn grad(&self, r: f64, xn: f64) -> (f64, f64) {
        let e = eval_u_full(CylPoint::at(r, xn, self.dim));
        (e.grad_r, e.grad_xn)
    }
}

/// Field given by closures for value and gradient.
pub struct FnField<V, G> {
    pub value: V,
    pub grad: G,
}

impl<V, G> CylFunction for FnField<V, G>
where
    V: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> (f64, f64) + Sync,
{
    fn value(&self, r: f64, xn: f64) -> f64 {
        (self.value)(r, xn)
    }
    fn grad(&self, r: f64, xn: f64) -> (f64, f64) {
        (self.grad)(r, xn)
    }
}

/// `c f`.
pub struct Scaled<'a> {
    pub factor: f64,
    pub inner: &'a dyn CylFunction,
}

impl CylFunction for Scaled<'_> {
    fn value(&self, r: f64, xn: f64) -> f64 {
        self.factor * self.inner.value(r, xn)
    }
    fn grad(&self, r: f64, xn: f64) -> (f64, f64) {
        let (a, b) = self.inner.grad(r, xn);
        (self.factor * a, self.factor * b)
    }
}

/// Field sampled on a tensor `(r, xn)` grid, bilinear in between and zero
/// outside the sampled box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylField {
    pub dim: usize,
    pub r_nodes: Vec<f64>,
    pub xn_nodes: Vec<f64>,
    /// Row-major in `r`: `values[i * xn_nodes.len() + j]`.
    pub values: Vec<f64>,
    pub time: Option<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn locate(nodes: &[f64], x: f64) -> Option<(usize, f64)> {
    let m = nodes.len();
    if m < 2 || x < nodes[0] || x > nodes[m - 1] {
        return None;
    }
    let i = nodes.partition_point(|&v| v <= x).clamp(1, m - 1) - 1;
    Some((i, (x - nodes[i]) / (nodes[i + 1] - nodes[i])))
}

impl CylField {
    pub fn new(dim: usize, r_nodes: Vec<f64>, xn_nodes: Vec<f64>, values: Vec<f64>, time: Option<f64>) -> Result<Self> {
        if dim < 3 {
            return invalid("dimension must be at least 3");
        }
        if r_nodes.len() < 2 || xn_nodes.len() < 2 || !strictly_increasing(&r_nodes) || !strictly_increasing(&xn_nodes) {
            return invalid("grid nodes must be strictly increasing with at least two per axis");
        }
        if r_nodes[0] < 0.0 || xn_nodes[0] < 0.0 {
            return invalid("grid nodes must lie in the closed half-space");
        }
        if values.len() != r_nodes.len() * xn_nodes.len() {
            return invalid("value count does not match grid");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite field value");
        }
        Ok(CylField { dim, r_nodes, xn_nodes, values, time })
    }

    /// Sample a function on the given grid.
    pub fn sample(f: &dyn CylFunction, dim: usize, r_nodes: Vec<f64>, xn_nodes: Vec<f64>, time: Option<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(r_nodes.len() * xn_nodes.len());
        for &r in &r_nodes {
            for &xn in &xn_nodes {
                values.push(f.value(r, xn));
            }
        }
        Self::new(dim, r_nodes, xn_nodes, values, time)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.xn_nodes.len() + j]
    }

    fn cell(&self, r: f64, xn: f64) -> Option<(usize, usize, f64, f64)> {
        let (i, a) = locate(&self.r_nodes, r)?;
        let (j, b) = locate(&self.xn_nodes, xn)?;
        Some((i, j, a, b))
    }
}

impl CylFunction for CylField {
    fn value(&self, r: f64, xn: f64) -> f64 {
        match self.cell(r, xn) {
            None => 0.0,
            Some((i, j, a, b)) => {
                (1.0 - a) * (1.0 - b) * self.get(i, j)
                    + a * (1.0 - b) * self.get(i + 1, j)
                    + (1.0 - a) * b * self.get(i, j + 1)
                    + a * b * self.get(i + 1, j + 1)
            }
        }
    }

    fn grad(&self, r: f64, xn: f64) -> (f64, f64) {
        match self.cell(r, xn) {
            None => (0.0, 0.0),
            Some((i, j, a, b)) => {
                let hr = self.r_nodes[i + 1] - self.r_nodes[i];
                let hn = self.xn_nodes[j + 1] - self.xn_nodes[j];
                let gr = ((1.0 - b) * (self.get(i + 1, j) - self.get(i, j)) + b * (self.get(i + 1, j + 1) - self.get(i, j + 1))) / hr;
                let gn = ((1.0 - a) * (self.get(i, j + 1) - self.get(i, j)) + a * (self.get(i + 1, j + 1) - self.get(i + 1, j))) / hn;
                (gr, gn)
            }
        }
    }
}
