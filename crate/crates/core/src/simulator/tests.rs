use super::*;
use crate::numerics::ln_gamma;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Closed form of the constant through Beta-function continuation.
fn c_closed(alpha: f64, p: f64) -> f64 {
    let a = alpha / (p - 1.0);
    let g_neg = gamma(1.0 - alpha) / alpha;
    let ratio = (ln_gamma(a + alpha) - ln_gamma(a)).exp();
    (g_neg * ratio / (4f64.powf(alpha) * gamma(alpha))).powf(1.0 / (p - 1.0))
}

#[test]
fn constant_matches_closed_form() {
    for (alpha, p) in [(0.5, 5.0 / 3.0), (0.5, 3.0), (0.3, 2.0), (0.8, 1.5)] {
        let c = c_alpha_p(alpha, p, &tol()).unwrap();
        let e = c_closed(alpha, p);
        assert!((c - e).abs() < 1e-9 * e, "{alpha} {p}: {c} {e}");
    }
    let c = c_alpha_p(0.5, 5.0 / 3.0, &tol()).unwrap();
    let half = Tolerances { quad_abs: 0.5e-10, quad_rel: 0.5e-8, ..tol() };
    assert!((c - c_alpha_p(0.5, 5.0 / 3.0, &half).unwrap()).abs() < 1e-8);
    assert!(c_alpha_p(1.0, 2.0, &tol()).is_err());
}

#[test]
fn exact_solution_boundary_and_equations() {
    let spec = TypeISpec::critical(0.01, &tol()).unwrap();
    assert!((spec.exponent() + 0.75).abs() < 1e-15);
    let t = 0.004;
    let u0 = type1_exact(&spec, 0.0, t, &tol()).unwrap();
    let near = type1_exact(&spec, 1e-9, t, &tol()).unwrap();
    assert!((near - u0).abs() < 1e-6 * u0);
    // -d_n u = u^{5/3} at the boundary, one-sided second order
    let h = 1e-5;
    let (u1, u2) = (type1_exact(&spec, h, t, &tol()).unwrap(), type1_exact(&spec, 2.0 * h, t, &tol()).unwrap());
    let dn = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h);
    assert!((-dn - u0.powf(5.0 / 3.0)).abs() < 1e-4 * u0.powf(5.0 / 3.0), "{} {}", -dn, u0.powf(5.0 / 3.0));
    // u_t = u_nn inside
    for xn in [0.01, 0.05, 0.2] {
        let (hz, ht) = (1e-3 * xn, 1e-7);
        let f = |z: f64, s: f64| type1_exact(&spec, z, s, &tol()).unwrap();
        let ut = (f(xn, t + ht) - f(xn, t - ht)) / (2.0 * ht);
        let uzz = (f(xn + hz, t) - 2.0 * f(xn, t) + f(xn - hz, t)) / (hz * hz);
        assert!((ut - uzz).abs() < 1e-4 * ut.abs().max(uzz.abs()), "{xn}: {ut} {uzz}");
    }
}

#[test]
fn exact_solution_two_scale_size() {
    let spec = TypeISpec::critical(1.0, &tol()).unwrap();
    for t in [0.0, 0.9, 0.999, 0.99999] {
        for xn in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let u = type1_exact(&spec, xn, t, &tol()).unwrap();
            let m = ((1.0 - t) as f64).max(xn * xn).powf(-0.75);
            assert!(u / m > 0.1 && u / m < 10.0, "{t} {xn}: {}", u / m);
        }
    }
    assert!(type1_exact(&spec, 0.1, 1.0, &tol()).is_err());
}

#[test]
fn zero_stays_zero_and_odd_symmetry() {
    let g = CylGrid::new(5, 9, 11, 1.0, 1.0).unwrap();
    let s = SolverState::from_fn(g, 0.0, |_, _| 0.0).unwrap();
    let out = run(s, &RunConfig::default(), &StopRule { t_end: Some(0.05), sup_threshold: None }).unwrap();
    assert!(out.series.iter().all(|r| r.sup_u == 0.0 && r.mass_proxy == 0.0));
    assert_eq!(out.outcome, RunOutcome::ReachedEnd);
    assert!((out.state.t - 0.05).abs() < 1e-15);

    let bump = |r: f64, z: f64| 3.0 * (-(r * r + (z - 0.1) * (z - 0.1)) / 0.02).exp();
    let a = SolverState::from_fn(g, 0.0, bump).unwrap();
    let b = SolverState::from_fn(g, 0.0, |r, z| -bump(r, z)).unwrap();
    let stop = StopRule { t_end: Some(0.02), sup_threshold: None };
    let (oa, ob) = (run(a, &RunConfig::default(), &stop).unwrap(), run(b, &RunConfig::default(), &stop).unwrap());
    assert!(oa.state.u.values.iter().zip(&ob.state.u.values).all(|(x, y)| *x == -*y));
    assert_eq!(oa.series.len(), ob.series.len());
}

#[test]
fn step_limits_and_maximum_principle() {
    for (nr, nz) in [(5, 5), (40, 10), (3, 200), (129, 129)] {
        let g = CylGrid::new(5, nr, nz, 1.0, 0.7).unwrap();
        let dt = g.max_dt();
        let h = g.dr().min(g.dz());
        assert!(dt <= 0.4 * h * h / 2.0);
        assert!(g.max_principle_holds(dt));
        assert!(!g.max_principle_holds(3.0 * dt));
    }
    let g = CylGrid::new(5, 5, 5, 1.0, 1.0).unwrap();
    let mut s = SolverState::from_fn(g, 0.0, |_, _| 1.0).unwrap();
    s.dt = 2.0 * g.max_dt();
    assert!(step(&s).is_err());
    assert!(CylGrid::new(2, 5, 5, 1.0, 1.0).is_err());
}

#[test]
fn overflow_is_reported_and_state_kept() {
    let g = CylGrid::new(5, 3, 5, 1.0, 1.0).unwrap();
    let mut s = SolverState::from_fn(g, 0.0, |_, z| if z == 0.0 { 1e300 } else { 0.0 }).unwrap();
    s.dt = g.max_dt();
    let before = s.u.values.clone();
    assert!(matches!(s.advance(&mut Vec::new()), Err(BblError::BlowUp { .. })));
    assert_eq!(s.u.values, before);
    assert_eq!(s.step_count, 0);
}

/// Small even Gaussian: the boundary flux is negligible and the solution is
/// the free heat flow in five dimensions.
fn gaussian_error(n: usize) -> f64 {
    let (eps, s0, t_end) = (1e-9, 0.01, 0.01);
    let g = CylGrid::new(5, n, n, 1.0, 1.0).unwrap();
    let s = SolverState::from_fn(g, 0.0, |r, z| eps * (-(r * r + z * z) / (4.0 * s0)).exp()).unwrap();
    let cfg = RunConfig { output_interval: 1.0, growth: 0.0, ..RunConfig::default() };
    let out = run(s, &cfg, &StopRule { t_end: Some(t_end), sup_threshold: None }).unwrap();
    let st = out.state;
    let mut err: f64 = 0.0;
    for (i, r) in g.r_nodes().iter().enumerate().step_by((n - 1) / 8) {
        for (j, z) in g.xn_nodes().iter().enumerate().step_by((n - 1) / 8) {
            let s1 = s0 + t_end;
            let exact = eps * (s0 / s1).powf(2.5) * (-(r * r + z * z) / (4.0 * s1)).exp();
            err = err.max((st.u.get(i, j) - exact).abs() / eps);
        }
    }
    err
}

#[test]
fn linear_flow_converges_at_second_order() {
    let (e1, e2) = (gaussian_error(41), gaussian_error(81));
    assert!(e2 < 2e-3, "{e1} {e2}");
    assert!(e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn small_negative_data_decays() {
    let g = CylGrid::new(5, 21, 21, 1.0, 1.0).unwrap();
    let s = SolverState::from_fn(g, 0.0, |r, z| -1e-3 * (-(r * r + z * z) / 0.02).exp()).unwrap();
    let out = run(s, &RunConfig::default(), &StopRule { t_end: Some(0.2), sup_threshold: Some(1.0) }).unwrap();
    assert_eq!(out.outcome, RunOutcome::ReachedEnd);
    assert!(out.series.windows(2).all(|w| w[1].sup_u <= w[0].sup_u * (1.0 + 1e-12)));
    assert!(out.series.last().unwrap().sup_u < 0.5e-3);
}

fn synthetic(big_t: f64, b: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let t: Vec<f64> = (0..200).map(|k| big_t * (1.0 - 10f64.powf(-4.0 * k as f64 / 199.0))).collect();
    let s = t.iter().map(|v| scale * (big_t - v).powf(b)).collect();
    (t, s)
}

#[test]
fn fit_recovers_exact_power_laws() {
    for b in [-0.75, -3.0] {
        let (t, s) = synthetic(1.0, b, 2.0);
        let f = fit_rate(&t, &s, 0.5).unwrap();
        assert!((f.exponent - b).abs() < 1e-3, "{f:?}");
        assert!((f.t_est - 1.0).abs() < 1e-4, "{f:?}");
        assert!((f.prefactor - 2.0).abs() < 1e-2);
        assert!(f.r2 > 0.999999);
    }
}

#[test]
fn fit_is_scale_equivariant() {
    let (t, s) = synthetic(0.3, -0.75, 1.0);
    let f1 = fit_rate(&t, &s, 0.6).unwrap();
    let s2: Vec<f64> = s.iter().map(|v| 7.5 * v).collect();
    let f2 = fit_rate(&t, &s2, 0.6).unwrap();
    assert!((f1.exponent - f2.exponent).abs() < 1e-9);
    assert!((f2.prefactor / f1.prefactor - 7.5).abs() < 1e-6);
}

#[test]
fn fit_rejects_bad_input() {
    let t: Vec<f64> = (0..40).map(|k| k as f64).collect();
    let s: Vec<f64> = (0..40).map(|k| 1.0 + k as f64 + 10.0 * ((k * 7 % 5) as f64)).collect();
    assert!(fit_rate(&t, &s, 1.0).is_err());
    let s: Vec<f64> = (0..40).map(|k| 1.0 + (k as f64).sin().abs() * 0.01 + k as f64 * 0.0).collect();
    assert!(fit_rate(&t, &s, 1.0).is_err());
    assert!(fit_rate(&t[..20], &t[..20], 1.0).is_err());
}

#[test]
fn ansatz_seeding() {
    let g = CylGrid::new(5, 64, 64, 1.0, 1.0).unwrap();
    let empty = AnsatzConfig::new(5, 0.2, vec![], None, None).unwrap();
    let z = seed_with_ansatz(&empty, 0.1, &g, &tol()).unwrap();
    assert!(z.values.iter().all(|v| *v == 0.0));
    let one = AnsatzConfig::single(5, 0.2, 1).unwrap();
    let mu = LeadingPath::new(&one, &tol()).unwrap().state(0, 0.1).unwrap().mu;
    assert!(mu < 1e-4);
    match seed_with_ansatz(&one, 0.1, &g, &tol()) {
        Err(BblError::Infeasible(m)) => assert!(m.contains("nodes")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ansatz_seeding_feasible_case() {
    let cfg = AnsatzConfig::new(5, 0.6, vec![crate::ansatz::Anchor { q: vec![0.0; 4], l: 0 }], None, Some(2.0)).unwrap();
    let g = CylGrid::new(5, 257, 257, 4.0, 4.0).unwrap();
    let f = seed_with_ansatz(&cfg, 0.1, &g, &tol()).unwrap();
    let path = LeadingPath::new(&cfg, &tol()).unwrap();
    let a = Ansatz::new(&cfg, &path, Corrections::none()).unwrap();
    let x = [g.dr() * 3.0, 0.0, 0.0, 0.0, g.dz() * 5.0];
    assert_eq!(f.get(3, 5), a.value(&x, 0.1).unwrap());
    assert!(f.get(0, 0) > 0.0);
}

fn trace_error_at(nz: usize, cfl: f64, closure: BoundaryClosure, t_end: f64) -> f64 {
    let spec = TypeISpec::critical(0.01, &tol()).unwrap();
    let g = CylGrid::new(5, 3, nz, 1.0, 1.0).unwrap();
    let cfg = RunConfig { output_interval: 1.0, growth: 0.0, cfl, closure, ..RunConfig::default() };
    let u0 = type1_field(&spec, &g, 0.0, &tol()).unwrap();
    let out = run(SolverState::new(g, u0, 0.0).unwrap(), &cfg, &StopRule { t_end: Some(t_end), sup_threshold: None }).unwrap();
    let exact = spec.boundary_value(out.state.t).unwrap();
    (out.state.boundary_sup() - exact).abs() / exact
}

#[test]
fn ghost_closure_is_second_order() {
    let e: Vec<f64> = [(126usize, 1.0), (251, 0.5), (501, 0.25)].iter().map(|&(n, c)| trace_error_at(n, c, BoundaryClosure::Ghost, 0.009)).collect();
    assert!(e[0] / e[1] >= 3.5 && e[1] / e[2] >= 3.5, "{e:?}");
}

#[test]
fn corrected_closure_is_more_accurate() {
    for n in [126usize, 251] {
        let g = trace_error_at(n, 1.0, BoundaryClosure::Ghost, 0.009);
        let c = trace_error_at(n, 1.0, BoundaryClosure::Corrected, 0.009);
        assert!(c < 0.2 * g, "{n}: {c} {g}");
    }
}

#[test]
fn type1_reproduction_small_grid() {
    let spec = TypeISpec::critical(0.01, &tol()).unwrap();
    let g = CylGrid::new(5, 3, 501, 1.0, 1.0).unwrap();
    let cfg = RunConfig { output_interval: 1e-4, growth: 0.01, ..RunConfig::default() };
    let c = type1_check(&spec, &g, 1e4, 0.05, &cfg, &tol()).unwrap();
    assert!(c.trace_error <= 0.02, "{}", c.trace_error);
    assert!(c.rows_checked > 100);
    assert!((c.fit.exponent + 0.75).abs() <= 0.05 && c.fit.r2 >= 0.999, "{:?}", c.fit);
    // the run stops near the exact blow-up time
    assert!((c.fit.t_est - 0.01).abs() < 1e-4);
}
