//! Sup ratios of the single-bubble outer sources against their pointwise
//! bounds, window by window in `T - t`.

use super::{Ansatz, AnsatzConfig, Corrections, LeadingPath, ModulationPath};
use crate::base::Tolerances;
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeRow {
    pub t: f64,
    pub r: f64,
    pub xn: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    #[serde(rename = "G1")]
    pub g1: f64,
    #[serde(rename = "G2")]
    pub g2: f64,
    pub bound: f64,
    pub ratio: f64,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSup {
    pub name: String,
    /// Sup ratio per window; `None` where the region is empty.
    pub per_window: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub windows: Vec<(f64, f64)>,
    pub regions: Vec<RegionSup>,
    /// Largest factor between sup ratios of neighbouring windows.
    pub max_change: f64,
    #[serde(skip)]
    pub rows: Vec<ShapeRow>,
}

impl ShapeReport {
    pub fn passed(&self) -> bool {
        self.max_change < 2.0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,r,xn,E1,E2,G1,G2,bound,ratio,region\n");
        let f = |v: f64| if v.is_nan() { String::new() } else { format!("{v:.12e}") };
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                f(r.t),
                f(r.r),
                f(r.xn),
                f(r.e1),
                f(r.e2),
                f(r.g1),
                f(r.g2),
                f(r.bound),
                f(r.ratio),
                r.region
            );
        }
        s
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Region {
    G1Core,
    G1Mid,
    G2Core,
    G2Mid,
    G2Outer,
}

const REGIONS: [(Region, &str); 5] = [
    (Region::G1Core, "g1_core"),
    (Region::G1Mid, "g1_mid"),
    (Region::G2Core, "g2_core"),
    (Region::G2Mid, "g2_mid"),
    (Region::G2Outer, "g2_outer"),
];

fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

fn unit(rng: &mut ChaCha8Rng, m: usize, upper: bool) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            v.iter_mut().for_each(|a| *a /= r);
            if upper {
                v[m - 1] = v[m - 1].abs();
            }
            return v;
        }
    }
}

/// Bare single-bubble check in dimension 5: samples `samples` times per
/// region in each dyadic sub-window of `window = (tau_lo, tau_hi)`, with the
/// same relative sample positions in every window, and records the sup of
/// `|G| / bound` per region.
pub fn residual_shape_check(cfg: &AnsatzConfig, i: usize, samples: usize, window: (f64, f64), seed: u64, tol: &Tolerances) -> Result<ShapeReport> {
    if cfg.dim != 5 {
        return invalid("the pointwise bounds are stated for n = 5");
    }
    if cfg.bubbles.len() != 1 || i != 0 {
        return invalid("residual shape check takes exactly one bubble");
    }
    if cfg.include_phi || cfg.include_psi {
        return invalid("residual shape check runs on the bare ansatz");
    }
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi <= cfg.big_t) || samples == 0 {
        return invalid("window needs 0 < tau_lo < tau_hi <= T and samples > 0");
    }
    let path = LeadingPath::new(cfg, tol)?;
    let a = Ansatz::new(cfg, &path, Corrections::none())?;
    let l = cfg.bubbles[0].l as f64;
    let q = cfg.bubbles[0].q.clone();
    let (r_cut, delta, big_t) = (cfg.r_cut, cfg.delta, cfg.big_t);
    let delta0: f64 = 0.0;
    let nwin = (hi / lo).log2().ceil() as usize;
    let mut windows = Vec::with_capacity(nwin);
    let mut sups = vec![vec![None; nwin]; REGIONS.len()];
    let mut rows = Vec::new();
    for w in 0..nwin {
        let a_lo = lo * 2f64.powi(w as i32);
        let a_hi = (2.0 * a_lo).min(hi);
        windows.push((a_lo, a_hi));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let tau = a_lo * (a_hi / a_lo).powf(rng.random::<f64>());
            let t = big_t - tau;
            let mu = path.state(0, t)?.mu;
            let sq = tau.sqrt();
            let split = tau.powf(1.0 / (2.0 * l + 2.0));
            for (ri, &(region, name)) in REGIONS.iter().enumerate() {
                let frac: f64 = rng.random();
                let boundary = matches!(region, Region::G2Core | Region::G2Mid | Region::G2Outer);
                let dir = unit(&mut rng, if boundary { 4 } else { 5 }, true);
                let (r0, r1) = match region {
                    Region::G1Core => (0.5 * mu * r_cut, sq),
                    Region::G1Mid => (sq, 4.0 * delta),
                    Region::G2Core => (0.1 * mu, sq),
                    Region::G2Mid => (sq, split),
                    Region::G2Outer => (split.max(sq), 8.0 * delta),
                };
                if !(r1 > r0 * (1.0 + 1e-12)) {
                    continue;
                }
                let rho = r0 * (r1 / r0).powf(frac);
                let mut x: Vec<f64> = (0..4).map(|j| q[j] + rho * dir[j]).collect();
                x.push(if boundary { 0.0 } else { rho * dir[4] });
                let z = rho / sq;
                let y = rho / mu;
                let (val, bound, e1, e2) = if boundary {
                    let (shares, _, _) = a.outer_g2(&x[..4], t)?;
                    let b = match region {
                        Region::G2Core => r_cut.powf(-0.25) / mu * tau.powf(l) * bracket(y).powf(-1.75) + tau.powf(5.0 * l / 3.0),
                        Region::G2Mid => tau.powf(5.0 * l / 3.0) * z.powf(10.0 * (l + 1.0) / 3.0),
                        _ => tau.powf(5.0 * l / 3.0) * z.powf(10.0 * l / 3.0) + delta0.powf(5.0 / 3.0),
                    };
                    (shares[0], b, f64::NAN, a.error_e2(&x[..4], t)?)
                } else {
                    let parts = a.e1_parts(&x, t)?;
                    let b = match region {
                        Region::G1Core => {
                            let inner = if y <= 2.0 * r_cut { bracket(y).powf(-2.25) } else { 0.0 };
                            let outer = if y > r_cut { bracket(y).powf(-2.75) } else { 0.0 };
                            r_cut.powf(-0.25) * mu.powi(-2) * tau.powf(l) * (inner + outer)
                        }
                        _ => {
                            let ring = if z >= delta / sq && z <= 2.0 * delta / sq { 1.0 } else { 0.0 };
                            tau.powf(3.0 * l + 0.5) * z.powi(-3) + ring
                        }
                    };
                    (parts.bubbles[0].g1(), b, parts.total(), f64::NAN)
                };
                let ratio = val.abs() / bound;
                let s = &mut sups[ri][w];
                *s = Some(s.map_or(ratio, |v: f64| v.max(ratio)));
                let r_t = x[..4].iter().zip(&q).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
                let (g1, g2) = if boundary { (f64::NAN, val) } else { (val, f64::NAN) };
                rows.push(ShapeRow { t, r: r_t, xn: x[4], e1, e2, g1, g2, bound, ratio, region: name.to_string() });
            }
        }
    }
    let mut max_change: f64 = 1.0;
    for per in &sups {
        for w in per.windows(2) {
            // a zero sup means the region left the support of the cutoffs
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                if a > 0.0 && b > 0.0 {
                    max_change = max_change.max((a / b).max(b / a));
                } else if !(a.is_finite() && b.is_finite()) {
                    max_change = f64::INFINITY;
                }
            }
        }
    }
    let regions = REGIONS.iter().zip(sups).map(|(&(_, name), per_window)| RegionSup { name: name.to_string(), per_window }).collect();
    Ok(ShapeReport { windows, regions, max_change, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bare_configs() {
        let tol = Tolerances::default();
        let mut cfg = AnsatzConfig::single(5, 1e-3, 0).unwrap();
        cfg.include_psi = true;
        assert!(residual_shape_check(&cfg, 0, 10, (1e-5, 1e-3), 1, &tol).is_err());
        let cfg = AnsatzConfig::single(4, 1e-3, 0).unwrap();
        assert!(residual_shape_check(&cfg, 0, 10, (1e-5, 1e-3), 1, &tol).is_err());
    }

    #[test]
    fn ratios_are_stable_over_two_decades() {
        let tol = Tolerances::default();
        for l in [0u32, 1] {
            // delta large enough that the outer region stays inside the cutoffs
            let anchor = vec![super::super::Anchor { q: vec![0.0; 4], l }];
            let cfg = AnsatzConfig::new(5, 1e-2, anchor, Some(0.25), None).unwrap();
            let rep = residual_shape_check(&cfg, 0, 60, (1e-5, 1e-3), 7, &tol).unwrap();
            for r in &rep.regions {
                eprintln!("l={l} {} {:?}", r.name, r.per_window);
            }
            assert!(rep.passed(), "l={l}: change {}", rep.max_change);
            assert!(rep.rows.iter().all(|r| r.ratio.is_finite()));
        }
    }

    #[test]
    fn far_from_blowup_is_finite() {
        let tol = Tolerances::default();
        let cfg = AnsatzConfig::single(5, 1e-3, 1).unwrap();
        let rep = residual_shape_check(&cfg, 0, 20, (5e-4, 1e-3), 3, &tol).unwrap();
        assert!(rep.rows.iter().all(|r| r.ratio.is_finite()));
    }
}
