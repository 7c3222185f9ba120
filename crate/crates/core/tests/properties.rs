use bbl::base::{eta, selfsim_coords, selfsim_inverse, CylPoint, TimeWindow};
use bbl::kernels::{g_n, HeatKernelQuery};
use bbl::simulator::fit_rate;
use bbl::spectral::theta_heat_residual;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cutoff_is_a_monotone_partition(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!((0.0..=1.0).contains(&eta(lo)));
        prop_assert!(eta(lo) >= eta(hi));
    }

    #[test]
    fn kernel_is_symmetric_in_its_points(x in 0.0f64..3.0, z in 0.0f64..3.0, off in 0.0f64..2.0, tau in 0.01f64..4.0) {
        let p = CylPoint::at(0.0, x, 5);
        let q = CylPoint::at(0.0, z, 5);
        let a = g_n(&HeatKernelQuery::new(p, tau, q, 0.0, off).unwrap(), 5).unwrap();
        let b = g_n(&HeatKernelQuery::new(q, tau, p, 0.0, off).unwrap(), 5).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
    }

    #[test]
    fn selfsim_coordinates_invert(r in 0.0f64..2.0, xn in 0.0f64..2.0, t in 0.0f64..0.99) {
        let x = CylPoint::at(0.3 + r, xn, 5);
        let (z, s) = selfsim_coords(x, 0.3, TimeWindow::new(1.0, t).unwrap()).unwrap();
        let (y, t2) = selfsim_inverse(z, 0.3, s, 1.0);
        prop_assert!((y.r - x.r).abs() < 1e-12 && (y.xn - x.xn).abs() < 1e-12 && (t2 - t).abs() < 1e-12);
    }

    #[test]
    fn caloric_residual_vanishes(l in 0u32..5, r in 0.0f64..4.0, xn in 0.0f64..4.0, t in 0.0f64..0.99) {
        let w = TimeWindow::new(1.0, t).unwrap();
        let (heat, flux) = theta_heat_residual(l, &[(CylPoint::at(r, xn, 5), w), (CylPoint::at(r, 0.0, 5), w)]).unwrap();
        prop_assert!(heat <= 1e-9 && flux <= 1e-9);
    }

    #[test]
    fn rate_fit_recovers_exponent(k in 0.2f64..2.0, big_t in 0.5f64..5.0, amp in 0.1f64..10.0) {
        let t: Vec<f64> = (0..120).map(|i| big_t * (1.0 - 10f64.powf(-6.0 * i as f64 / 119.0))).collect();
        let s: Vec<f64> = t.iter().map(|v| amp * (big_t - v).powf(-k)).collect();
        let f = fit_rate(&t, &s, 0.05).unwrap();
        prop_assert!((f.exponent + k).abs() < 1e-5, "{} vs {}", f.exponent, -k);
        prop_assert!((f.t_est - big_t).abs() < 1e-6 * big_t);
    }
}
