//! Invariant batteries behind `verify <suite>`.

use crate::ansatz::{build_adjustments, multi_indices, Anchor, Ansatz, AnsatzConfig, Corrections, FnPath, LeadingPath, ModulationPath, PathState};
use crate::base::{CylPoint, TimeWindow, Tolerances};
use crate::eigensolver::{escobar_check, trace_rho_check};
use crate::error::{invalid, Result};
use crate::kernels::{g_n, h_n, h_n_via_g, HeatKernelQuery};
use crate::numerics::quad::composite_gl;
use crate::numerics::sphere_area;
use crate::profiles::bumps::Bump;
use crate::profiles::{kernel_residuals, rayleigh_q, QuadratureGrid};
use crate::spectral::{az_eigen_residual, basis_size_for_order, build_localized_basis, eig_count_neumann, theta_heat_identity_exact, theta_heat_residual, MultiIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const SUITES: [&str; 5] = ["profiles", "caloric", "spectral", "kernels", "ansatz"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckRow {
    fn new(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { check: check.into(), residual, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

pub fn run_suite(suite: &str, seed: u64, tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        "profiles" => profiles(&mut rng, tol),
        "caloric" => caloric(&mut rng),
        "spectral" => spectral(&mut rng, tol),
        "kernels" => kernels(&mut rng),
        "ansatz" => ansatz(&mut rng, tol),
        _ => invalid(format!("unknown suite '{suite}', expected one of {}", SUITES.join(", "))),
    }
}

fn profiles(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let n = 5;
    let interior: Vec<CylPoint> = (0..500).map(|_| CylPoint::at(rng.random_range(0.0..5.0), rng.random_range(0.05..5.0), n)).collect();
    let boundary: Vec<CylPoint> = (0..500).map(|_| CylPoint::at(rng.random_range(0.0..5.0), 0.0, n)).collect();
    let mut rows = Vec::new();
    for j in 1..=n {
        rows.push(CheckRow::new(format!("Z{j} interior laplacian"), kernel_residuals(j, &interior, tol)?.0, 1e-6));
        rows.push(CheckRow::new(format!("Z{j} boundary relation"), kernel_residuals(j, &boundary, tol)?.1, 1e-10));
    }
    let esc = escobar_check(n, tol)?;
    rows.push(CheckRow::new("trace quotient of U vs sharp constant", esc.rel_gap, 1e-4));
    let grid = QuadratureGrid::algebraic(n, tol)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = rayleigh_q(&Bump::random_trace(rng, n), &grid)?;
        worst = worst.max((esc.q_of_u - q) / esc.q_of_u);
    }
    rows.push(CheckRow::new("random bumps above Q(U)", worst.max(0.0), 0.0));
    let grid = QuadratureGrid::gaussian(n, tol)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (lhs, rhs) = trace_rho_check(&Bump::random_weighted(rng), &grid)?;
        worst = worst.max((lhs - rhs) / rhs);
    }
    rows.push(CheckRow::new("weighted trace inequality", worst.max(0.0), 0.0));
    Ok(rows)
}

fn caloric(rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let n = 5;
    let samples: Vec<(CylPoint, TimeWindow)> = (0..1000)
        .map(|k| {
            let xn = if k % 4 == 0 { 0.0 } else { rng.random_range(0.0..3.0) };
            let x = CylPoint::at(rng.random_range(0.0..3.0), xn, n);
            (x, TimeWindow { big_t: 1.0, t: rng.random_range(0.0..0.99) })
        })
        .collect();
    let mut rows = Vec::new();
    for l in 0..=4u32 {
        let (heat, flux) = theta_heat_residual(l, &samples)?;
        rows.push(CheckRow::new(format!("Theta_{l} heat equation"), heat, 1e-9));
        rows.push(CheckRow::new(format!("Theta_{l} zero flux"), flux, 1e-9));
        let exact = if theta_heat_identity_exact(l, n) { 0.0 } else { 1.0 };
        rows.push(CheckRow::new(format!("Theta_{l} rational identity"), exact, 0.0));
    }
    Ok(rows)
}

/// Lattice count of `alpha in N^n` with even last entry and `|alpha| / 2 <= c`.
fn brute_count(c: f64, n: usize) -> u64 {
    let top = (2.0 * c).floor().max(-1.0) as i64;
    if top < 0 {
        return 0;
    }
    multi_indices(n, top as u32, true).len() as u64
}

fn spectral(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let n = 5;
    let samples: Vec<Vec<f64>> = (0..50).map(|_| (0..n).map(|_| rng.random_range(-2.5..2.5)).collect()).collect();
    let mut worst: f64 = 0.0;
    for m in multi_indices(n, 6, false) {
        worst = worst.max(az_eigen_residual(&MultiIndex(m), &samples)?);
    }
    let mut rows = vec![CheckRow::new("A_z eigen-residual, degree <= 6", worst, 1e-10)];
    let mut gap: u64 = 0;
    for twice in 0..=8 {
        let c = twice as f64 / 2.0;
        gap = gap.max(eig_count_neumann(c, n)?.abs_diff(brute_count(c, n)));
    }
    rows.push(CheckRow::new("eigenvalue count vs lattice, C <= 4", gap as f64, 0.0));
    let m_half = eig_count_neumann(0.5, n)? - eig_count_neumann(0.0, n)?;
    let m_one = eig_count_neumann(1.0, n)? - eig_count_neumann(0.5, n)?;
    rows.push(CheckRow::new("multiplicity 4 at 1/2", m_half.abs_diff(4) as f64, 0.0));
    rows.push(CheckRow::new("multiplicity 11 at 1", m_one.abs_diff(11) as f64, 0.0));
    for l in [0u32, 1] {
        let size = basis_size_for_order(l, n)? as usize;
        let b = build_localized_basis(size - 1, n, tol)?;
        rows.push(CheckRow::new(format!("localized biorthogonality, l = {l}"), b.biorth_defect, 1e-8));
    }
    Ok(rows)
}

fn kernels(rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let n = 5;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let sigma = rng.random_range(-1.0..3.0);
        let s = sigma + rng.random_range(0.05..4.0);
        let z = CylPoint::at(0.0, rng.random_range(0.0..3.0), n);
        let w = CylPoint::at(0.0, rng.random_range(0.0..3.0), n);
        let off = rng.random_range(0.0..2.0);
        let a = h_n(z, s, w, sigma, off, n)?;
        let b = h_n_via_g(z, s, w, sigma, off, n, rng.random_range(-1.0..1.0))?;
        if a > 1e-300 {
            worst = worst.max((a - b).abs() / a);
        }
    }
    let mut rows = vec![CheckRow::new("self-similar kernel vs rescaled G_n", worst, 1e-12)];
    let mut mass_gap: f64 = 0.0;
    for (xn, tau) in [(0.0f64, 0.3f64), (0.7, 0.3), (0.2, 1.0)] {
        let x = CylPoint::at(0.0, xn, n);
        let width = 12.0 * tau.sqrt();
        let br: Vec<f64> = (0..=40).map(|i| i as f64 * width / 40.0).collect();
        let nb: Vec<f64> = (0..=40).map(|i| i as f64 * (width + xn) / 40.0).collect();
        let (rx, rw) = composite_gl(&br, 10);
        let (nx, nw) = composite_gl(&nb, 10);
        let mut m = 0.0;
        for (r, wr) in rx.iter().zip(&rw) {
            for (zn, wn) in nx.iter().zip(&nw) {
                let q = HeatKernelQuery::new(x, tau, CylPoint::at(0.0, *zn, n), 0.0, *r)?;
                m += wr * wn * sphere_area(n - 1) * r.powi(n as i32 - 2) * g_n(&q, n)?;
            }
        }
        mass_gap = mass_gap.max((m - 1.0).abs());
    }
    rows.push(CheckRow::new("G_n unit mass", mass_gap, 1e-8));
    Ok(rows)
}

fn random_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        x[4] = x[4].abs();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            for j in 0..4 {
                x[j] = center[j] + radius * x[j];
            }
            x[4] *= radius;
            return x;
        }
    }
}

fn ansatz(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<CheckRow>> {
    const Q: [f64; 4] = [0.1, -0.2, 0.0, 0.3];
    let mut rows = Vec::new();
    let path = FnPath(|_: usize, t: f64| {
        Ok(PathState {
            mu: 0.15 + 0.05 * t,
            dmu: 0.05,
            xi: vec![Q[0] + 0.02 * t, Q[1] + 0.01 * t, Q[2], Q[3] - 0.01 * t],
            dxi: vec![0.02, 0.01, 0.0, -0.01],
        })
    });
    for l in [0u32, 1] {
        let cfg = AnsatzConfig::new(5, 1.0, vec![Anchor { q: Q.to_vec(), l }], Some(0.2), Some(2.0))?;
        let a = Ansatz::new(&cfg, &path, Corrections::none())?;
        let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
        let mut taken = 0;
        while taken < 200 {
            let x = random_point(rng, &Q, 0.9);
            let t = rng.random_range(0.0..0.5);
            // the cutoffs are C^2 only, so differences across a seam lose order
            let st = path.state(0, t)?;
            let rho = (0..5).map(|j| (x[j] - if j < 4 { Q[j] } else { 0.0 }).powi(2)).sum::<f64>().sqrt();
            let r = (0..5).map(|j| (x[j] - if j < 4 { st.xi[j] } else { 0.0 }).powi(2)).sum::<f64>().sqrt();
            let d = cfg.delta;
            let gap = 8e-3;
            if [d, 2.0 * d, 4.0 * d, 8.0 * d].iter().any(|s| (rho - s).abs() < gap) || [cfg.r_cut, 2.0 * cfg.r_cut].iter().any(|s| (r - st.mu * s).abs() < gap) {
                continue;
            }
            taken += 1;
            let parts = a.e1_parts(&x, t)?;
            let coarse = a.error_e1_fd(&x, t, 2e-3, 1e-4)?;
            let fine = a.error_e1_fd(&x, t, 1e-3, 1e-4)?;
            let fd = (4.0 * fine - coarse) / 3.0;
            let b = parts.bubbles[0];
            let scale = 1.0 + b.bubble.abs() + b.cut_u.abs() + b.cut_theta.abs() + b.inner_op.abs() + b.lambda.abs();
            e1 = e1.max((parts.total() - fd).abs() / scale);
            let u = a.value(&[x[0], x[1], x[2], x[3], 0.0], t)?;
            let diff = a.error_e2(&x[..4], t)? - a.error_e2_fd(&x[..4], t, 1e-4)?;
            e2 = e2.max(diff.abs() / (1.0 + u.abs().powf(5.0 / 3.0)));
        }
        rows.push(CheckRow::new(format!("interior error closed form vs differences, l = {l}"), e1, 1e-5));
        rows.push(CheckRow::new(format!("boundary error closed form vs differences, l = {l}"), e2, 1e-5));
    }
    let two = vec![Anchor { q: vec![0.0; 4], l: 0 }, Anchor { q: vec![3.2, 0.0, 0.0, 0.0], l: 1 }];
    let cfg = AnsatzConfig::new(5, 0.01, two, None, None)?;
    let lead = LeadingPath::new(&cfg, tol)?;
    let a = Ansatz::new(&cfg, &lead, Corrections::none())?;
    let mut split_gap: f64 = 0.0;
    for k in 0..500 {
        let c = if k % 2 == 0 { [0.0; 4] } else { [3.2, 0.0, 0.0, 0.0] };
        let x = random_point(rng, &c, 10.0 * cfg.delta);
        let t = rng.random_range(0.0..0.0099);
        let (shares, rest, _) = a.outer_g2(&x[..4], t)?;
        let direct = a.outer_g2_direct(&x[..4], t)?;
        let split: f64 = shares.iter().sum::<f64>() + rest;
        split_gap = split_gap.max((split - direct).abs() / direct.abs().max(1.0));
    }
    rows.push(CheckRow::new("boundary source split identity", split_gap, 1e-12));
    let pts: Vec<Vec<f64>> = (0..3).map(|k| (0..4).map(|j| if j == 0 { k as f64 } else { rng.random_range(-0.3..0.3) }).collect()).collect();
    let d = 0.1;
    let adj = build_adjustments(&pts, 2, d, d * d / 100.0, tol)?;
    rows.push(CheckRow::new("adjustment Kronecker property", adj.kronecker_defect(8)?, 1e-6));
    let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|j| pts[0][j] + rng.random_range(-0.15..0.15)).collect()).collect();
    rows.push(CheckRow::new("adjustment odd normal derivatives", adj.odd_normal_defect(&xs, adj.base_time, 6)?, 1e-9));
    Ok(rows)
}

/// Fixed-width table with one row per check.
pub fn format_table(rows: &[CheckRow]) -> String {
    let w = rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<w$}  {:>12}  {:>10}  result\n", "check", "max residual", "tolerance");
    for r in rows {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<w$}  {:>12.3e}  {:>10.1e}  {verdict}\n", r.check, r.residual, r.tolerance));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_count_small_cases() {
        assert_eq!(brute_count(-0.5, 5), 0);
        assert_eq!(brute_count(0.0, 5), 1);
        assert_eq!(brute_count(0.5, 5), 5);
        assert_eq!(brute_count(1.0, 5), 16);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("bogus", 1, &Tolerances::default()).is_err());
    }

    #[test]
    fn nan_residual_fails() {
        assert!(!CheckRow::new("x", f64::NAN, 1.0).passed());
        assert!(CheckRow::new("x", 0.0, 0.0).passed());
    }
}
