use super::{dist, AnsatzConfig};
use crate::error::{invalid, Result};

/// Sample of a field on the inner ball: `|y|`, value, optional `|grad f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSample {
    pub y: f64,
    pub value: f64,
    pub grad: Option<f64>,
}

/// Sample of an outer field at a full point.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSample {
    pub x: Vec<f64>,
    pub value: f64,
}

fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// Discrete inner norm `sup (R^2 tau^{4l+3} <y>^{-5/2})^{-1} (|f| + <y>|grad f|)`.
/// The gradient term enters only for samples that carry it.
pub fn norm_in(samples: &[InnerSample], l: u32, r_cut: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && r_cut > 0.0) {
        return invalid("inner norm needs tau > 0 and R > 0");
    }
    let base = r_cut * r_cut * tau.powi(4 * l as i32 + 3);
    let mut sup: f64 = 0.0;
    for s in samples {
        let b = bracket(s.y);
        let q = s.value.abs() + s.grad.map_or(0.0, |g| b * g.abs());
        sup = sup.max(q * b.powf(2.5) / base);
    }
    Ok(sup)
}

/// Weight of the outer space at `x`: inside a parabolic ball around an anchor
/// `tau^l <z>^{2l+2}`, and `<x>^{-2}` away from all of them.
pub fn outer_weight(cfg: &AnsatzConfig, x: &[f64], tau: f64) -> f64 {
    let n = cfg.dim;
    let sq = tau.sqrt();
    let mut w = 0.0;
    let mut inside_any = false;
    for b in &cfg.bubbles {
        let lf = b.l as f64;
        let mut d = dist(&x[..n - 1], &b.q).powi(2);
        d += x[n - 1] * x[n - 1];
        let z = d.sqrt() / sq;
        if z <= tau.powf(-lf / (2.0 * lf + 2.0)) {
            inside_any = true;
            w += tau.powf(lf) * bracket(z).powf(2.0 * lf + 2.0);
        }
    }
    if !inside_any {
        let xn: f64 = x.iter().map(|v| v * v).sum::<f64>();
        w += 1.0 / (1.0 + xn);
    }
    w
}

/// Discrete outer norm `sup |f| / weight`.
pub fn norm_x(samples: &[OuterSample], cfg: &AnsatzConfig, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return invalid("outer norm needs tau > 0");
    }
    let mut sup: f64 = 0.0;
    for s in samples {
        if s.x.len() != cfg.dim {
            return invalid("sample point has the wrong dimension");
        }
        sup = sup.max(s.value.abs() / outer_weight(cfg, &s.x, tau));
    }
    Ok(sup)
}
