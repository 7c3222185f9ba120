//! Multi-bubble approximate solution, its error operators and source terms.
//!
//! Points are full vectors `x = (x~, x_n)` of length `n`, tangential
//! components first. Anchors live on the boundary plane and are stored by
//! their tangential coordinates.

mod adjust;
mod norms;
mod shape;

pub use adjust::{build_adjustments, multi_indices, AdjustmentSet};
pub use norms::{norm_in, norm_x, InnerSample, OuterSample};
pub use shape::{residual_shape_check, RegionSup, ShapeReport, ShapeRow};

use crate::base::{eta, RadialCutoff, Tolerances};
use crate::error::{invalid, BblError, Result};
use crate::modulation::{dmu0, mu0, ModulationParams};
use crate::profiles::{eval_z_vec, grad_u_vec, u_vec};
use crate::spectral::theta_coeffs;
use serde::{Deserialize, Serialize};

/// One bubble: boundary anchor `q~` and caloric order `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub q: Vec<f64>,
    pub l: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub dim: usize,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub bubbles: Vec<Anchor>,
    /// Cutoff scale; the bubble is cut at `2 delta`, the caloric term at `delta`.
    pub delta: f64,
    /// Inner cutoff radius in the bubble variable.
    #[serde(rename = "R")]
    pub r_cut: f64,
    pub include_phi: bool,
    pub include_psi: bool,
}

/// Default cutoff scale for a lone bubble, where no separation fixes it.
pub const SINGLE_BUBBLE_DELTA: f64 = 1.0 / 32.0;

impl AnsatzConfig {
    /// `delta` defaults to the minimum anchor separation over 32 and may not exceed it;
    /// `r_cut` defaults to `|ln T|`.
    pub fn new(dim: usize, big_t: f64, bubbles: Vec<Anchor>, delta: Option<f64>, r_cut: Option<f64>) -> Result<Self> {
        if dim < 3 {
            return invalid("dimension must be at least 3");
        }
        if !(big_t > 0.0) {
            return invalid("blow-up time must be positive");
        }
        for b in &bubbles {
            if b.q.len() != dim - 1 || b.q.iter().any(|v| !v.is_finite()) {
                return invalid(format!("anchor must have {} finite tangential coordinates", dim - 1));
            }
        }
        let mut sep = f64::INFINITY;
        for (i, a) in bubbles.iter().enumerate() {
            for b in &bubbles[i + 1..] {
                sep = sep.min(dist(&a.q, &b.q));
            }
        }
        if sep == 0.0 {
            return invalid("anchors must be distinct");
        }
        let cap = if sep.is_finite() { sep / 32.0 } else { f64::INFINITY };
        let delta = match delta {
            Some(d) if !(d > 0.0) => return invalid("delta must be positive"),
            Some(d) if d > cap * (1.0 + 1e-12) => {
                return invalid(format!("anchors too close: delta {d} exceeds separation/32 = {cap}"));
            }
            Some(d) => d,
            None if cap.is_finite() => cap,
            None => SINGLE_BUBBLE_DELTA,
        };
        let r_cut = r_cut.unwrap_or(big_t.ln().abs());
        if !(r_cut > 0.0) {
            return invalid("inner cutoff radius must be positive (T = 1 gives |ln T| = 0)");
        }
        Ok(Self { dim, big_t, bubbles, delta, r_cut, include_phi: false, include_psi: false })
    }

    pub fn single(dim: usize, big_t: f64, l: u32) -> Result<Self> {
        Self::new(dim, big_t, vec![Anchor { q: vec![0.0; dim - 1], l }], None, None)
    }

    fn gamma(&self) -> f64 {
        (self.dim as f64 - 2.0) / 2.0
    }

    fn p(&self) -> f64 {
        self.dim as f64 / (self.dim as f64 - 2.0)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Modulation values of one bubble at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub mu: f64,
    pub dmu: f64,
    /// Tangential center.
    pub xi: Vec<f64>,
    pub dxi: Vec<f64>,
}

pub trait ModulationPath: Sync {
    fn state(&self, i: usize, t: f64) -> Result<PathState>;
}

/// `mu = mu_0`, `xi = q~`: the bare path.
#[derive(Debug, Clone)]
pub struct LeadingPath {
    pub params: Vec<ModulationParams>,
    anchors: Vec<Vec<f64>>,
}

impl LeadingPath {
    pub fn new(cfg: &AnsatzConfig, tol: &Tolerances) -> Result<Self> {
        let mut params = Vec::with_capacity(cfg.bubbles.len());
        for b in &cfg.bubbles {
            // bubbles sharing an order share the scale constant
            match params.iter().find(|p: &&ModulationParams| p.l == b.l) {
                Some(p) => params.push(*p),
                None => params.push(ModulationParams::new(b.l, cfg.big_t, Some(cfg.r_cut), cfg.dim, tol)?),
            }
        }
        Ok(Self { params, anchors: cfg.bubbles.iter().map(|b| b.q.clone()).collect() })
    }
}

impl ModulationPath for LeadingPath {
    fn state(&self, i: usize, t: f64) -> Result<PathState> {
        let p = self.params.get(i).ok_or_else(|| BblError::InvalidArgument(format!("no bubble {i}")))?;
        let q = &self.anchors[i];
        Ok(PathState { mu: mu0(p, t)?, dmu: dmu0(p, t)?, xi: q.clone(), dxi: vec![0.0; q.len()] })
    }
}

/// Path given by a closure.
pub struct FnPath<F>(pub F);

impl<F> ModulationPath for FnPath<F>
where
    F: Fn(usize, f64) -> Result<PathState> + Sync,
{
    fn state(&self, i: usize, t: f64) -> Result<PathState> {
        (self.0)(i, t)
    }
}

/// Scalar field of `(point, t)`. Derivatives default to central differences,
/// which may sample slightly across `x_n = 0`.
pub trait SpaceTimeField: Sync {
    fn value(&self, x: &[f64], t: f64) -> f64;

    fn grad(&self, x: &[f64], t: f64) -> Vec<f64> {
        let h = 1e-5 * (1.0 + norm(x));
        let mut p = x.to_vec();
        (0..x.len())
            .map(|j| {
                p[j] = x[j] + h;
                let a = self.value(&p, t);
                p[j] = x[j] - h;
                let b = self.value(&p, t);
                p[j] = x[j];
                (a - b) / (2.0 * h)
            })
            .collect()
    }

    fn dt(&self, x: &[f64], t: f64) -> f64 {
        let h = 1e-5 * (1.0 + t.abs());
        (self.value(x, t + h) - self.value(x, t - h)) / (2.0 * h)
    }

    fn laplacian(&self, x: &[f64], t: f64) -> f64 {
        let h = 1e-3 * (1.0 + norm(x));
        let c = self.value(x, t);
        let mut p = x.to_vec();
        let mut s = 0.0;
        for j in 0..x.len() {
            p[j] = x[j] + h;
            s += self.value(&p, t);
            p[j] = x[j] - h;
            s += self.value(&p, t);
            p[j] = x[j];
        }
        (s - 2.0 * x.len() as f64 * c) / (h * h)
    }
}

/// Inner corrections `phi_i(y, t)` and the outer field `psi(x, t)`.
/// Only used when the matching config flag is set.
#[derive(Clone, Default)]
pub struct Corrections<'a> {
    pub phi: Vec<Option<&'a dyn SpaceTimeField>>,
    pub psi: Option<&'a dyn SpaceTimeField>,
}

impl Corrections<'_> {
    pub fn none() -> Self {
        Self::default()
    }
}

/// Source terms of the inner and outer problems at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SourceEval {
    pub H1: f64,
    pub H2: f64,
    pub G1: f64,
    pub G2: f64,
}

/// Per-bubble pieces of the interior error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct E1Bubble {
    /// Heat error of the uncut bubble.
    pub bubble: f64,
    pub eta2: f64,
    pub eta_r: f64,
    pub cut_u: f64,
    pub cut_theta: f64,
    /// `mu^{-(n+2)/2} eta_R (-mu^2 d_t phi + Delta_y phi)`.
    pub inner_op: f64,
    /// Commutator terms of the inner correction with its cutoff and the moving frame.
    pub lambda: f64,
}

impl E1Bubble {
    pub fn total(&self) -> f64 {
        self.bubble * self.eta2 + self.cut_u + self.cut_theta + self.inner_op + self.lambda
    }

    /// This bubble's share of the outer interior source.
    pub fn g1(&self) -> f64 {
        self.lambda + self.bubble * (self.eta2 - self.eta_r) + self.cut_u + self.cut_theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E1Parts {
    pub bubbles: Vec<E1Bubble>,
    pub psi_heat: f64,
}

impl E1Parts {
    pub fn total(&self) -> f64 {
        self.bubbles.iter().map(E1Bubble::total).sum::<f64>() + self.psi_heat
    }
}

/// Outer boundary source split into bubble shares and the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSplit {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g2_rest: f64,
    pub nonlinear: f64,
}

impl OuterSplit {
    pub fn g1_total(&self) -> f64 {
        self.g1.iter().sum()
    }
    pub fn g2_total(&self) -> f64 {
        self.g2.iter().sum::<f64>() + self.g2_rest
    }
}

/// Cutoffs and values of one bubble at one point.
struct Piece {
    st: PathState,
    /// `x - (q~, 0)`.
    d: Vec<f64>,
    rho: f64,
    y: Vec<f64>,
    eta2: f64,
    eta1: f64,
    eta4: f64,
    eta_r: f64,
    active: bool,
    bubble: f64,
    theta: f64,
    /// `mu^{-(n-2)/2} phi eta_R`.
    inner: f64,
}

/// Boundary values of one bubble.
struct BdPiece {
    bubble: f64,
    eta2: f64,
    eta1: f64,
    eta4: f64,
    eta_r: f64,
    theta: f64,
    inner: f64,
    /// `mu^{-n/2} eta_R d_{y_n} phi`.
    dn_inner: f64,
}

/// Evaluator for a configuration, a modulation path and optional corrections.
pub struct Ansatz<'a> {
    pub cfg: &'a AnsatzConfig,
    path: &'a dyn ModulationPath,
    corr: Corrections<'a>,
    theta: Vec<Vec<f64>>,
}

impl<'a> Ansatz<'a> {
    pub fn new(cfg: &'a AnsatzConfig, path: &'a dyn ModulationPath, corr: Corrections<'a>) -> Result<Self> {
        let theta = cfg.bubbles.iter().map(|b| theta_coeffs(b.l, cfg.dim)).collect::<Result<Vec<_>>>()?;
        Ok(Self { cfg, path, corr, theta })
    }

    fn phi(&self, i: usize) -> Option<&'a dyn SpaceTimeField> {
        if self.cfg.include_phi {
            self.corr.phi.get(i).copied().flatten()
        } else {
            None
        }
    }

    fn psi(&self) -> Option<&'a dyn SpaceTimeField> {
        if self.cfg.include_psi {
            self.corr.psi
        } else {
            None
        }
    }

    fn check(&self, x: &[f64], t: f64) -> Result<()> {
        if x.len() != self.cfg.dim {
            return invalid(format!("point must have {} coordinates", self.cfg.dim));
        }
        if !(t < self.cfg.big_t) {
            return Err(BblError::PastBlowup { t, big_t: self.cfg.big_t });
        }
        Ok(())
    }

    fn tau(&self, t: f64) -> f64 {
        self.cfg.big_t - t
    }

    /// `(Theta, grad coefficient)` with `grad Theta = coefficient * d`.
    fn theta_at(&self, i: usize, rho2: f64, tau: f64) -> (f64, f64) {
        let a = &self.theta[i];
        let l = a.len() as i32 - 1;
        let mut v = 0.0;
        let mut g = 0.0;
        for (k, ak) in a.iter().enumerate() {
            let k = k as i32;
            v += ak * rho2.powi(k) * tau.powi(l - k);
            if k > 0 {
                g += ak * 2.0 * k as f64 * rho2.powi(k - 1) * tau.powi(l - k);
            }
        }
        (v, g)
    }

    fn piece(&self, i: usize, x: &[f64], t: f64) -> Result<Piece> {
        let n = self.cfg.dim;
        let st = self.path.state(i, t)?;
        if !(st.mu > 0.0) || st.xi.len() != n - 1 {
            return invalid(format!("bad modulation state for bubble {i}"));
        }
        let q = &self.cfg.bubbles[i].q;
        let mut d = x.to_vec();
        let mut y = x.to_vec();
        for j in 0..n - 1 {
            d[j] -= q[j];
            y[j] = (x[j] - st.xi[j]) / st.mu;
        }
        y[n - 1] = x[n - 1] / st.mu;
        let rho = norm(&d);
        let delta = self.cfg.delta;
        let eta2 = eta(rho / (2.0 * delta));
        let eta1 = eta(rho / delta);
        let eta4 = eta(rho / (4.0 * delta));
        let eta_r = eta(norm(&y) / self.cfg.r_cut);
        let phi = self.phi(i);
        let active = eta4 > 0.0 || (phi.is_some() && eta_r > 0.0);
        let mut pc = Piece { st, d, rho, y, eta2, eta1, eta4, eta_r, active, bubble: 0.0, theta: 0.0, inner: 0.0 };
        if !active {
            return Ok(pc);
        }
        let g = self.cfg.gamma();
        pc.bubble = pc.st.mu.powf(-g) * u_vec(&pc.y[..n - 1], pc.y[n - 1]);
        pc.theta = self.theta_at(i, rho * rho, self.tau(t)).0;
        if let Some(f) = phi {
            if eta_r > 0.0 {
                pc.inner = pc.st.mu.powf(-g) * f.value(&pc.y, t) * eta_r;
            }
        }
        Ok(pc)
    }

    fn raw_value(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut u = self.psi().map_or(0.0, |f| f.value(x, t));
        for i in 0..self.cfg.bubbles.len() {
            let pc = self.piece(i, x, t)?;
            if pc.active {
                u += pc.bubble * pc.eta2 + pc.theta * pc.eta1 + pc.inner;
            }
        }
        Ok(u)
    }

    /// The approximate solution at `x`, `x_n >= 0`.
    pub fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check(x, t)?;
        if x[self.cfg.dim - 1] < 0.0 {
            return invalid("point must lie in the closed half-space");
        }
        self.raw_value(x, t)
    }

    /// Interior error `-d_t u + Delta u`, assembled term by term.
    pub fn e1_parts(&self, x: &[f64], t: f64) -> Result<E1Parts> {
        self.check(x, t)?;
        let n = self.cfg.dim;
        let nf = n as f64;
        let g = self.cfg.gamma();
        let delta = self.cfg.delta;
        let tau = self.tau(t);
        let mut out = Vec::with_capacity(self.cfg.bubbles.len());
        for i in 0..self.cfg.bubbles.len() {
            let pc = self.piece(i, x, t)?;
            let mut b = E1Bubble { eta2: pc.eta2, eta_r: pc.eta_r, ..Default::default() };
            let (mu, dmu) = (pc.st.mu, pc.st.dmu);
            let (yt, yn) = (&pc.y[..n - 1], pc.y[n - 1]);
            let gu = grad_u_vec(yt, yn);
            b.bubble = dmu * mu.powf(-nf / 2.0) * eval_z_vec(n, yt, yn)? + mu.powf(-nf / 2.0) * dot(&pc.st.dxi, &gu[..n - 1]);
            if pc.eta2 > 0.0 || pc.eta1 > 0.0 {
                let c2 = RadialCutoff::new(2.0 * delta, n);
                let c1 = RadialCutoff::new(delta, n);
                let unit: Vec<f64> = if pc.rho > 0.0 { pc.d.iter().map(|v| v / pc.rho).collect() } else { vec![0.0; n] };
                let gscale = mu.powf(-g - 1.0);
                let du = dot(&gu, &unit) * gscale;
                b.cut_u = 2.0 * du * c2.d_rho(pc.rho) + pc.bubble * c2.laplacian(pc.rho);
                let (th, thg) = self.theta_at(i, pc.rho * pc.rho, tau);
                b.cut_theta = 2.0 * thg * pc.rho * c1.d_rho(pc.rho) + th * c1.laplacian(pc.rho);
            }
            if let Some(f) = self.phi(i) {
                let ym = norm(&pc.y);
                let cr = RadialCutoff::new(self.cfg.r_cut, n);
                let er = cr.value(ym);
                let er_grad: Vec<f64> = if ym > 0.0 { pc.y.iter().map(|v| cr.d_rho(ym) * v / ym).collect() } else { vec![0.0; n] };
                let er_lap = cr.laplacian(ym);
                if er > 0.0 || er_lap != 0.0 {
                    let v = f.value(&pc.y, t);
                    let gr = f.grad(&pc.y, t);
                    let ft = f.dt(&pc.y, t);
                    let lap = f.laplacian(&pc.y, t);
                    b.inner_op = mu.powf(-g - 2.0) * er * (-mu * mu * ft + lap);
                    let mut drift = 0.0;
                    for j in 0..n {
                        let vel = pc.y[j] * dmu + if j < n - 1 { pc.st.dxi[j] } else { 0.0 };
                        drift += (gr[j] * er + v * er_grad[j]) * vel;
                    }
                    b.lambda = mu.powf(-g - 2.0) * (2.0 * dot(&gr, &er_grad) + v * er_lap)
                        + g * dmu * mu.powf(-g - 1.0) * v * er
                        + mu.powf(-g - 1.0) * drift;
                }
            }
            out.push(b);
        }
        let psi_heat = self.psi().map_or(0.0, |f| -f.dt(x, t) + f.laplacian(x, t));
        Ok(E1Parts { bubbles: out, psi_heat })
    }

    pub fn error_e1(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.e1_parts(x, t)?.total())
    }

    /// `-d_t u + Delta u` by central differences of [`Ansatz::value`].
    pub fn error_e1_fd(&self, x: &[f64], t: f64, h: f64, ht: f64) -> Result<f64> {
        self.check(x, t + ht)?;
        let c = self.raw_value(x, t)?;
        let dt = (self.raw_value(x, t + ht)? - self.raw_value(x, t - ht)?) / (2.0 * ht);
        let mut p = x.to_vec();
        let mut lap = 0.0;
        for j in 0..x.len() {
            p[j] = x[j] + h;
            let a = self.raw_value(&p, t)?;
            p[j] = x[j] - h;
            let b = self.raw_value(&p, t)?;
            p[j] = x[j];
            lap += (a - 2.0 * c + b) / (h * h);
        }
        Ok(-dt + lap)
    }

    fn bd_piece(&self, i: usize, xt: &[f64], t: f64) -> Result<BdPiece> {
        let n = self.cfg.dim;
        let mut x = xt.to_vec();
        x.push(0.0);
        let pc = self.piece(i, &x, t)?;
        let mut dn_inner = 0.0;
        if let Some(f) = self.phi(i) {
            if pc.eta_r > 0.0 {
                dn_inner = pc.st.mu.powf(-(n as f64) / 2.0) * pc.eta_r * f.grad(&pc.y, t)[n - 1];
            }
        }
        Ok(BdPiece {
            bubble: pc.bubble,
            eta2: pc.eta2,
            eta1: pc.eta1,
            eta4: pc.eta4,
            eta_r: pc.eta_r,
            theta: pc.theta,
            inner: pc.inner,
            dn_inner,
        })
    }

    fn check_bd(&self, xt: &[f64], t: f64) -> Result<()> {
        if xt.len() != self.cfg.dim - 1 {
            return invalid(format!("boundary point must have {} coordinates", self.cfg.dim - 1));
        }
        if !(t < self.cfg.big_t) {
            return Err(BblError::PastBlowup { t, big_t: self.cfg.big_t });
        }
        Ok(())
    }

    /// Pieces, `psi` and the nonlinear remainder at a boundary point.
    fn boundary(&self, xt: &[f64], t: f64) -> Result<(Vec<BdPiece>, f64, f64)> {
        self.check_bd(xt, t)?;
        let ps: Vec<BdPiece> = (0..self.cfg.bubbles.len()).map(|i| self.bd_piece(i, xt, t)).collect::<Result<_>>()?;
        let mut x = xt.to_vec();
        x.push(0.0);
        let psi = self.psi().map_or(0.0, |f| f.value(&x, t));
        let nl = self.nonlinear(&ps, psi);
        Ok((ps, psi, nl))
    }

    /// `N = |u|^{p-1}u - sum a_i^p - sum p a_i^{p-1} w_i` with `a_i = U_i eta_{2 delta}`,
    /// expanded about the dominant bubble to avoid cancellation.
    fn nonlinear(&self, ps: &[BdPiece], psi: f64) -> f64 {
        let p = self.cfg.p();
        let a: Vec<f64> = ps.iter().map(|b| b.bubble * b.eta2).collect();
        let w: Vec<f64> = ps.iter().map(|b| b.theta * b.eta1 + b.inner + psi).collect();
        let star = (0..a.len()).max_by(|&i, &j| a[i].total_cmp(&a[j]));
        let Some(s) = star.filter(|&s| a[s] > 0.0) else {
            let u: f64 = ps.iter().map(|b| b.theta * b.eta1 + b.inner).sum::<f64>() + psi;
            return signed_pow(u, p);
        };
        let others: f64 = (0..a.len()).filter(|&j| j != s).map(|j| a[j] + ps[j].theta * ps[j].eta1 + ps[j].inner).sum();
        let rest = w[s] + others;
        let mut nl = taylor_remainder(a[s], rest, p) + p * a[s].powf(p - 1.0) * others;
        for j in (0..a.len()).filter(|&j| j != s) {
            nl -= a[j].powf(p) + p * a[j].powf(p - 1.0) * w[j];
        }
        nl
    }

    /// Boundary error `d_n u + |u|^{p-1} u` at `(x~, 0)`.
    pub fn error_e2(&self, xt: &[f64], t: f64) -> Result<f64> {
        let (ps, psi, nl) = self.boundary(xt, t)?;
        let p = self.cfg.p();
        let mut e = nl;
        for b in &ps {
            let w = b.theta * b.eta1 + b.inner + psi;
            e += b.bubble.powf(p) * (b.eta2.powf(p) - b.eta2) + p * (b.bubble * b.eta2).powf(p - 1.0) * w + b.dn_inner;
        }
        if let Some(f) = self.psi() {
            let mut x = xt.to_vec();
            x.push(0.0);
            e += f.grad(&x, t)[self.cfg.dim - 1];
        }
        Ok(e)
    }

    /// Boundary error from a one-sided second-order difference of [`Ansatz::value`].
    pub fn error_e2_fd(&self, xt: &[f64], t: f64, h: f64) -> Result<f64> {
        self.check_bd(xt, t)?;
        let mut x = xt.to_vec();
        x.push(0.0);
        let n = self.cfg.dim;
        let u0 = self.raw_value(&x, t)?;
        x[n - 1] = h;
        let u1 = self.raw_value(&x, t)?;
        x[n - 1] = 2.0 * h;
        let u2 = self.raw_value(&x, t)?;
        Ok((-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h) + signed_pow(u0, self.cfg.p()))
    }

    /// Inner sources of bubble `i` at inner point `y`; `H2` reads only `y~`.
    pub fn inner_sources(&self, i: usize, y: &[f64], t: f64) -> Result<(f64, f64)> {
        self.check(y, t)?;
        if i >= self.cfg.bubbles.len() {
            return invalid(format!("no bubble {i}"));
        }
        let n = self.cfg.dim;
        let nf = n as f64;
        let st = self.path.state(i, t)?;
        let (yt, yn) = (&y[..n - 1], y[n - 1]);
        let gu = grad_u_vec(yt, yn);
        let cut = eta(norm(y) / (4.0 * self.cfg.r_cut));
        let h1 = if cut > 0.0 { cut * (st.dmu * st.mu * eval_z_vec(n, yt, yn)? + st.mu * dot(&st.dxi, &gu[..n - 1])) } else { 0.0 };
        let cut_t = eta(norm(yt) / (4.0 * self.cfg.r_cut));
        let mut h2 = 0.0;
        if cut_t > 0.0 {
            let p = self.cfg.p();
            let mut x: Vec<f64> = (0..n - 1).map(|j| st.mu * yt[j] + st.xi[j]).collect();
            let rho2 = dist(&x, &self.cfg.bubbles[i].q).powi(2);
            let theta = self.theta_at(i, rho2, self.tau(t)).0;
            x.push(0.0);
            let psi = self.psi().map_or(0.0, |f| f.value(&x, t));
            h2 = p * st.mu.powf(nf / 2.0 - 1.0) * u_vec(yt, 0.0).powf(p - 1.0) * cut_t * (theta + psi);
        }
        Ok((h1, h2))
    }

    /// Outer interior source at `x` and its per-bubble shares.
    pub fn outer_g1(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.e1_parts(x, t)?.bubbles.iter().map(E1Bubble::g1).collect())
    }

    fn g2_bracket(&self, b: &BdPiece, psi: f64) -> f64 {
        let p = self.cfg.p();
        let u = b.bubble;
        let e2p = b.eta2.powf(p - 1.0);
        u.powf(p) * (b.eta2.powf(p) - b.eta2)
            + p * u.powf(p - 1.0) * ((b.eta1 - b.eta_r) * b.theta + (e2p - b.eta_r) * psi + (e2p - 1.0) * b.inner)
    }

    /// Outer boundary source at `(x~, 0)` split into bubble shares and remainder.
    /// Returns `(shares, remainder, N)`.
    pub fn outer_g2(&self, xt: &[f64], t: f64) -> Result<(Vec<f64>, f64, f64)> {
        let (ps, psi, nl) = self.boundary(xt, t)?;
        let mut shares = Vec::with_capacity(ps.len());
        let mut covered = 0.0;
        for b in &ps {
            shares.push(b.eta4 * nl + self.g2_bracket(b, psi));
            covered += b.eta4;
        }
        Ok((shares, (1.0 - covered) * nl, nl))
    }

    /// Outer boundary source in its unsplit form.
    pub fn outer_g2_direct(&self, xt: &[f64], t: f64) -> Result<f64> {
        let (ps, psi, nl) = self.boundary(xt, t)?;
        Ok(nl + ps.iter().map(|b| self.g2_bracket(b, psi)).sum::<f64>())
    }

    /// Both outer sources; `x` is taken at the boundary for `G2`.
    pub fn outer_split(&self, x: &[f64], t: f64) -> Result<OuterSplit> {
        let g1 = self.outer_g1(x, t)?;
        let (g2, g2_rest, nonlinear) = self.outer_g2(&x[..self.cfg.dim - 1], t)?;
        Ok(OuterSplit { g1, g2, g2_rest, nonlinear })
    }

    /// `(G1, G2)` at `x`; `G2` uses the boundary point below `x`.
    pub fn outer_sources(&self, x: &[f64], t: f64) -> Result<(f64, f64)> {
        let s = self.outer_split(x, t)?;
        Ok((s.g1_total(), s.g2_total()))
    }

    /// All four sources, with bubble `i`'s inner variable taken from `x`.
    pub fn sources(&self, i: usize, x: &[f64], t: f64) -> Result<SourceEval> {
        self.check(x, t)?;
        let n = self.cfg.dim;
        let st = self.path.state(i, t)?;
        let y: Vec<f64> = (0..n).map(|j| if j < n - 1 { (x[j] - st.xi[j]) / st.mu } else { x[j] / st.mu }).collect();
        let (h1, h2) = self.inner_sources(i, &y, t)?;
        let (g1, g2) = self.outer_sources(x, t)?;
        Ok(SourceEval { H1: h1, H2: h2, G1: g1, G2: g2 })
    }
}

/// `|u|^{p-1} u`.
pub(crate) fn signed_pow(u: f64, p: f64) -> f64 {
    u.abs().powf(p - 1.0) * u
}

/// `|a+r|^{p-1}(a+r) - a^p - p a^{p-1} r` for `a >= 0`, by series when `|r| << a`.
fn taylor_remainder(a: f64, r: f64, p: f64) -> f64 {
    if a > 0.0 && r.abs() <= 0.1 * a {
        let s = r / a;
        let mut c = p * (p - 1.0) / 2.0;
        let mut sk = s * s;
        let mut sum = 0.0;
        let mut k = 2.0;
        loop {
            let term = c * sk;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() || k > 60.0 {
                break;
            }
            c *= (p - k) / (k + 1.0);
            sk *= s;
            k += 1.0;
        }
        a.powf(p) * sum
    } else {
        signed_pow(a + r, p) - a.powf(p) - p * a.powf(p - 1.0) * r
    }
}

/// Spec-shaped entry point: evaluate the ansatz once.
pub fn eval_ansatz(cfg: &AnsatzConfig, x: &[f64], t: f64, path: &dyn ModulationPath, corr: Corrections<'_>) -> Result<f64> {
    Ansatz::new(cfg, path, corr)?.value(x, t)
}
