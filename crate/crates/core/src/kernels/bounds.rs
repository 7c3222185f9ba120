use super::duhamel::tangential_kernel;
use crate::error::{invalid, BblError, Result};
use crate::numerics::quad::integrate_pts;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    /// Boundary convolution with a general Gaussian rate, annular source.
    BeyondNeumann,
    /// Neumann boundary operator, annular power source.
    NeumannSelfsim,
    /// Neumann boundary operator, Gaussian-damped source outside the parabolic ball.
    NeumannOutside,
    /// Whole-space operator, annular power source.
    RhsSelfsim,
}

impl FamilyId {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyId::BeyondNeumann => "beyond_neumann",
            FamilyId::NeumannSelfsim => "neumann_selfsim",
            FamilyId::NeumannOutside => "neumann_outside",
            FamilyId::RhsSelfsim => "rhs_selfsim",
        }
    }
}

/// Source family with named parameters. Radii are `l1(s) = l1_coef s^p1`
/// and `l2(s) = l2_coef s^p2`; the time factor is `s^a`.
///
/// Recognized keys: `a, b, p1, p2, l1_coef, l2_coef, ell, kappa, c_star,
/// c0, eps, t0, t_max, x_scale, region` (`region`: 0 all, 1 inside `l2`, 2 outside `l2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFamily {
    pub family_id: FamilyId,
    pub params: BTreeMap<String, f64>,
}

impl BoundFamily {
    pub fn new(family_id: FamilyId, params: &[(&str, f64)]) -> Self {
        BoundFamily { family_id, params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    fn get(&self, k: &str, default: f64) -> f64 {
        self.params.get(k).copied().unwrap_or(default)
    }

    /// Copy with `t0`, `t_max` and `x_scale` doubled.
    pub fn doubled_ranges(&self) -> Self {
        let mut f = self.clone();
        let t0 = self.get("t0", 1.0);
        f.params.insert("t0".into(), 2.0 * t0);
        f.params.insert("t_max".into(), 2.0 * self.get("t_max", 8.0 * t0.max(1.0)));
        f.params.insert("x_scale".into(), 2.0 * self.get("x_scale", 3.0));
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub family: String,
    pub sample_index: usize,
    pub x_r: f64,
    pub x_n: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub sup_ratio: f64,
    pub samples: Vec<BoundSample>,
}

impl BoundReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(s).map_err(|e| BblError::Io(e.to_string()))?;
        }
        wr.flush().map_err(|e| BblError::Io(e.to_string()))
    }
}

struct Resolved {
    id: FamilyId,
    n: usize,
    a: f64,
    b: f64,
    p1: f64,
    p2: f64,
    l1c: f64,
    l2c: f64,
    ell: f64,
    kappa: f64,
    c_star: f64,
    c0: f64,
    eps: f64,
    t0: f64,
    t_max: f64,
    x_scale: f64,
    region: u8,
}

impl Resolved {
    fn l1(&self, s: f64) -> f64 {
        self.l1c * s.powf(self.p1)
    }
    fn l2(&self, s: f64) -> f64 {
        self.l2c * s.powf(self.p2)
    }
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn resolve(f: &BoundFamily, n: usize) -> Result<Resolved> {
    let t0 = f.get("t0", 1.0);
    let r = Resolved {
        id: f.family_id,
        n,
        a: f.get("a", 0.0),
        b: f.get("b", 0.0),
        p1: f.get("p1", 0.5),
        p2: f.get("p2", 0.5),
        l1c: f.get("l1_coef", 0.0),
        l2c: f.get("l2_coef", 1.0),
        ell: f.get("ell", 1.0),
        kappa: f.get("kappa", 0.1),
        c_star: f.get("c_star", 1.0),
        c0: f.get("c0", 0.25),
        eps: f.get("eps", 0.5),
        t0,
        t_max: f.get("t_max", 8.0 * t0.max(1.0)),
        x_scale: f.get("x_scale", 3.0),
        region: f.get("region", 0.0) as u8,
    };
    if n < 3 {
        return invalid("dimension must exceed 2");
    }
    if !(r.t_max > r.t0) || r.x_scale <= 0.0 || r.region > 2 {
        return invalid("bad sampling ranges");
    }
    let annular = r.id != FamilyId::NeumannOutside;
    if annular {
        if r.l1c < 0.0 || r.l2c < 0.0 || r.p2 > 0.5 {
            return invalid("radii must satisfy 0 <= l1 <= l2 <= C* s^{1/2}");
        }
        // l1 <= l2 and l2 <= C* sqrt(s) on [t0, t_max]
        for s in [r.t0.max(1e-12), r.t_max] {
            if r.l1(s) > r.l2(s) + 1e-15 || r.l2(s) > r.c_star * s.sqrt() + 1e-15 {
                return invalid("radii must satisfy 0 <= l1 <= l2 <= C* s^{1/2}");
            }
        }
    }
    let nf = n as f64;
    match r.id {
        FamilyId::BeyondNeumann => {
            if r.t0 < 0.0 || r.c0 <= 0.0 || !(r.eps > 0.0 && r.eps < 1.0) {
                return invalid("beyond_neumann needs t0 >= 0, C0 > 0, eps in (0,1)");
            }
        }
        FamilyId::NeumannSelfsim => {
            if r.t0 < 1.0 || r.b >= nf - 1.0 {
                return invalid("neumann_selfsim needs t0 >= 1 and b < n-1");
            }
            check_exponents(r.a, r.b, r.p2, 1.0, nf - 1.0, nf)?;
        }
        FamilyId::RhsSelfsim => {
            if r.t0 < 1.0 || r.b >= nf {
                return invalid("rhs_selfsim needs t0 >= 1 and b < n");
            }
            check_exponents(r.a, r.b, r.p2, 2.0, nf, nf)?;
        }
        FamilyId::NeumannOutside => {
            if r.t0 < 1.0 || r.ell <= 0.0 || !(r.kappa > 0.0 && r.kappa < 0.25) {
                return invalid("neumann_outside needs t0 >= 1, ell > 0, kappa in (0, 1/4)");
            }
            if 0.5 + r.a - r.b / 2.0 + 2.0 * r.kappa * nf < 0.0 {
                return invalid("neumann_outside needs 1/2 + a - b/2 + 2 kappa n >= 0");
            }
            let ok = if r.b >= -1.0 { r.kappa <= r.ell } else { r.kappa < r.ell };
            if !ok {
                return invalid("neumann_outside needs kappa below ell");
            }
        }
    }
    Ok(r)
}

fn check_exponents(a: f64, b: f64, p2: f64, near: f64, far: f64, n: f64) -> Result<()> {
    if (a + p2 * (far - b) + 1.0).abs() > 1e-12 {
        if p2 > 0.5 || a + p2 * (near - b) + n / 2.0 < 0.0 {
            return invalid("exponent condition a + p2 (k - b) + n/2 >= 0 violated");
        }
    } else if p2 >= 0.5 {
        return invalid("borderline exponent needs p2 < 1/2");
    }
    Ok(())
}

const WIDTH: f64 = 12.0;

/// Left-hand convolution at `(x_r, x_n, t)`.
fn lhs(p: &Resolved, xr: f64, xn: f64, t: f64) -> Result<f64> {
    let n = p.n;
    let m = n - 1;
    let full = p.id == FamilyId::RhsSelfsim;
    let (k, r0) = if full { (n, (xr * xr + xn * xn).sqrt()) } else { (m, xr) };
    let umax = (t - p.t0).sqrt();
    let mut err = None;
    let outer = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let s = t - u * u;
        let (pref, tau) = match p.id {
            FamilyId::BeyondNeumann => {
                let tau = u * u / (4.0 * p.c0);
                (2.0 * (PI / p.c0).powf(m as f64 / 2.0) * (-p.c0 * xn * xn / (u * u)).exp(), tau)
            }
            FamilyId::NeumannSelfsim | FamilyId::NeumannOutside => (2.0 / PI.sqrt() * (-xn * xn / (4.0 * u * u)).exp(), u * u),
            FamilyId::RhsSelfsim => (2.0 * u, u * u),
        };
        if pref == 0.0 {
            return 0.0;
        }
        let (lo, hi) = match p.id {
            FamilyId::NeumannOutside => (s.sqrt(), s.sqrt() * (1.0 + (60.0 / p.ell).sqrt())),
            _ => (p.l1(s), p.l2(s)),
        };
        let w = WIDTH * tau.sqrt();
        let (lo, hi) = (lo.max(r0 - w), hi.min(r0 + w));
        if !(hi > lo) {
            return 0.0;
        }
        let mut pts = vec![lo];
        if r0 > lo && r0 < hi {
            pts.push(r0);
        }
        pts.push(hi);
        let src = |rho: f64| match p.id {
            FamilyId::NeumannOutside => s.powf(p.a) * rho.powf(-p.b) * (-p.ell * rho * rho / s).exp(),
            _ => s.powf(p.a) * rho.powf(-p.b),
        };
        let g = |rho: f64| rho.powi(k as i32 - 1) * tangential_kernel(r0, rho, tau, k) * src(rho);
        match integrate_pts(g, &pts, 1e-300, 1e-9, 2000) {
            Ok(v) => pref * v.value,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    };
    let v = integrate_pts(outer, &[0.0, umax], 1e-300, 1e-7, 2000)?.value;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn ratio_l(p: &Resolved, t: f64) -> f64 {
    let (l1, l2) = (p.l1(t), p.l2(t));
    if l1 == 0.0 && l2 == 0.0 { 1.0 } else { l2 / l1 }
}

/// Right-hand bound at `(x_r, x_n, t)` with unit constant.
fn rhs(p: &Resolved, xr: f64, xn: f64, t: f64) -> Result<f64> {
    let nf = p.n as f64;
    let xabs = (xr * xr + xn * xn).sqrt();
    let (l1, l2) = (p.l1(t), p.l2(t));
    let b = p.b;
    let near = |e: f64| -> f64 {
        // common |x| <= l2 structure with exponent e = 1 (boundary) or 2 (whole space)
        if xabs <= l1 {
            if b < e {
                l2.powf(e - b)
            } else if b == e {
                bracket(ratio_l(p, t).ln())
            } else {
                l1.powf(e - b)
            }
        } else if b < e {
            l2.powf(e - b)
        } else if b == e {
            bracket((l2 / xabs).ln())
        } else {
            xabs.powf(e - b)
        }
    };
    Ok(match p.id {
        FamilyId::NeumannSelfsim => {
            t.powf(p.a)
                * if xabs <= l2 { near(1.0) } else { l2.powf(1.0 - b) * (-(xr * xr + (xn + 1.0).powi(2)) / (4.0 * t)).exp() }
        }
        FamilyId::RhsSelfsim => t.powf(p.a) * if xabs <= l2 { near(2.0) } else { l2.powf(2.0 - b) * (-xabs * xabs / (4.0 * t)).exp() },
        FamilyId::NeumannOutside => t.powf(p.a - b / 2.0 + 0.5) * (-p.kappa * xabs * xabs / t).exp(),
        FamilyId::BeyondNeumann => {
            let m1 = nf - 1.0;
            let lfac = |s: f64| -> f64 {
                let (a1, a2) = (p.l1(s), p.l2(s));
                if b < m1 {
                    a2.powf(m1 - b)
                } else if b == m1 {
                    let q = if a1 == 0.0 && a2 == 0.0 { 1.0 } else { a2 / a1 };
                    q.ln()
                } else {
                    a1.powf(m1 - b)
                }
            };
            let mid = p.t0.max(t / 2.0);
            let early = if mid > p.t0 {
                integrate_pts(|s: f64| s.powf(p.a) * lfac(s), &[p.t0, mid], 1e-300, 1e-10, 500)?.value
            } else {
                0.0
            };
            let cut = p.c_star * (1.0 + (1.0 - p.eps).sqrt()) / p.eps * t.sqrt();
            let spread = if xr <= cut { 1.0 } else { (-p.c0 * (1.0 - p.eps) * xr * xr / (t - p.t0)).exp() };
            let w1 = t.powf(-nf / 2.0) * (-p.c0 * xn * xn / (t - p.t0)).exp() * spread * early;
            let w2 = if xabs <= l1 {
                if b < 1.0 {
                    l2.powf(1.0 - b)
                } else if b == 1.0 {
                    bracket(ratio_l(p, t).ln())
                } else {
                    l1.powf(1.0 - b)
                }
            } else if xabs <= l2 {
                if b < 1.0 {
                    l2.powf(1.0 - b)
                } else if b == 1.0 {
                    bracket((l2 / xabs).ln())
                } else if b < m1 {
                    xabs.powf(1.0 - b)
                } else if b == m1 {
                    xabs.powf(2.0 - nf) * bracket((xabs / l1).ln())
                } else {
                    xabs.powf(2.0 - nf) * l1.powf(m1 - b)
                }
            } else {
                let lf = if b < m1 {
                    l2.powf(m1 - b)
                } else if b == m1 {
                    bracket(ratio_l(p, t).ln())
                } else {
                    l1.powf(m1 - b)
                };
                lf * if xabs <= p.c_star * t.sqrt() {
                    xabs.powf(2.0 - nf)
                } else {
                    xabs.powf(-2.0) * t.powf(2.0 - nf / 2.0) * (-2.0 * p.c0 * (xn * xn + 64.0 / 81.0 * xr * xr) / t).exp()
                }
            };
            // sup of v(t1) = t1^a over [max(t0, t/2), t]
            let vmax = mid.powf(p.a).max(t.powf(p.a));
            w1 + vmax * w2
        }
    })
}

/// Ratio of the convolution to the stated bound at random admissible
/// points; the supremum must be finite and stable under range doubling.
pub fn bound_ratio(fam: &BoundFamily, n: usize, sample_count: usize, seed: u64) -> Result<BoundReport> {
    let p = resolve(fam, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64, f64)> = (0..sample_count)
        .map(|_| {
            let t = p.t0 + (p.t_max - p.t0) * rng.random_range(0.05..1.0);
            let st = t.sqrt();
            let l2 = if p.id == FamilyId::NeumannOutside { st } else { p.l2(t) };
            let rad = match p.region {
                1 => l2 * rng.random_range(0.0..1.0),
                2 => l2 * (1.0 + 1e-9) + p.x_scale * st * rng.random_range(0.0..1.0),
                _ => p.x_scale * st * rng.random_range(0.0..1.0),
            };
            let phi = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
            (rad * phi.sin(), rad * phi.cos(), t)
        })
        .collect();
    let samples: Vec<BoundSample> = pts
        .par_iter()
        .enumerate()
        .map(|(i, &(xr, xn, t))| {
            let l = lhs(&p, xr, xn, t)?;
            let r = rhs(&p, xr, xn, t)?;
            let ratio = if l == 0.0 { 0.0 } else if r > 0.0 { l / r } else { f64::INFINITY };
            Ok(BoundSample { family: p.id.name().into(), sample_index: i, x_r: xr, x_n: xn, t, lhs: l, rhs: r, ratio })
        })
        .collect::<Result<_>>()?;
    let sup_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(BoundReport { sup_ratio, samples })
}
