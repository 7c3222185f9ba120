use serde::{Deserialize, Serialize};

/// Worst normalized margins of the barrier inequalities over the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierMargins {
    /// `min (-Delta P) <y>^{a+2}`
    pub interior: f64,
    /// `min (-d_n P) <y>^{a+1}`
    pub boundary: f64,
}

/// `(P, d_r P, d_n P, Delta P)` for `P = g^{-a/2}` with
/// `g = (1+theta^2) r^2 + (y_n+1)^2 + 2 theta (y_n+1) r`, `r = |y~| > 0`.
pub fn barrier_derivatives(a: f64, theta: f64, r: f64, yn: f64, n: usize) -> (f64, f64, f64, f64) {
    let w = yn + 1.0;
    let g = (1.0 + theta * theta) * r * r + w * w + 2.0 * theta * w * r;
    let gr = 2.0 * (1.0 + theta * theta) * r + 2.0 * theta * w;
    let grr = 2.0 * (1.0 + theta * theta);
    let gn = 2.0 * w + 2.0 * theta * r;
    let gnn = 2.0;
    let k = a / 2.0;
    let p = g.powf(-k);
    let p1 = -k * g.powf(-k - 1.0);
    let p2 = k * (k + 1.0) * g.powf(-k - 2.0);
    let pr = p1 * gr;
    let prr = p2 * gr * gr + p1 * grr;
    let pn = p1 * gn;
    let pnn = p2 * gn * gn + p1 * gnn;
    let lap = prr + (n as f64 - 2.0) / r * pr + pnn;
    (p, pr, pn, lap)
}

/// Coefficients `[f0, f1, f2, f3]` of the cubic `f(t)`, `t = (y_n+1)/|y~|`,
/// with `Delta P = -a g^{-a/2-1} f(t) / (theta^2 + 1 + 2 theta t + t^2)`.
pub fn barrier_f_poly(n: usize, a: f64, theta: f64) -> [f64; 4] {
    let n = n as f64;
    let t2 = theta * theta;
    [
        t2 * t2 * (n - a - 3.0) + t2 * (2.0 * n - 3.0 * a - 7.0) + n - a - 2.0,
        theta * (t2 * (3.0 * n - 2.0 * a - 8.0) + 3.0 * n - 4.0 * a - 10.0),
        t2 * (3.0 * n - a - 7.0) + n - a - 2.0,
        theta * (n - 2.0),
    ]
}

fn cubic_positive_on_halfline(c: [f64; 4]) -> bool {
    let f = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    if c[0] <= 0.0 || c[3] < 0.0 {
        return false;
    }
    // critical points of the cubic
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let mut crit = Vec::new();
    if qa.abs() > 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            crit.push((-qb + s) / (2.0 * qa));
            crit.push((-qb - s) / (2.0 * qa));
        }
    } else if qb != 0.0 {
        crit.push(-qc / qb);
    } else if c[2] < 0.0 {
        return false;
    }
    if c[3] == 0.0 && c[2] < 0.0 {
        return false;
    }
    crit.into_iter().filter(|t| *t > 0.0).all(|t| f(t) > 0.0)
}

/// Largest `theta` on a scan of `(0, 2]`, refined by bisection, such that
/// `f(t) > 0` for all `t >= 0` at every smaller scanned `theta`.
/// Zero when no admissible `theta` exists.
pub fn barrier_theta_threshold(n: usize, a: f64) -> f64 {
    let ok = |th: f64| cubic_positive_on_halfline(barrier_f_poly(n, a, th));
    let steps = 2000;
    let mut last_good = 0.0;
    for i in 1..=steps {
        let th = 2.0 * i as f64 / steps as f64;
        if ok(th) {
            last_good = th;
        } else {
            let (mut lo, mut hi) = (last_good, th);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid > 0.0 && ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
    }
    last_good
}

/// Worst normalized margins of `-Delta P` and `-d_n P` at samples `(|y~|, y_n)`.
pub fn barrier_check(a: f64, theta: f64, n: usize, samples: &[(f64, f64)]) -> BarrierMargins {
    let mut m = BarrierMargins { interior: f64::INFINITY, boundary: f64::INFINITY };
    for &(r, yn) in samples {
        let (_, _, pn, lap) = barrier_derivatives(a, theta, r, yn, n);
        let br = (1.0 + r * r + yn * yn).sqrt();
        m.interior = m.interior.min(-lap * br.powf(a + 2.0));
        m.boundary = m.boundary.min(-pn * br.powf(a + 1.0));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(seed: u64, k: usize) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k)
            .map(|_| {
                let scale = 10f64.powf(rng.random_range(-2.0..4.0));
                (scale * rng.random_range(0.01..1.0), scale * rng.random_range(0.0..1.0))
            })
            .collect()
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for &(r, yn) in &[(0.5, 0.2), (3.0, 1.0), (10.0, 0.0)] {
            let (_, pr, pn, _) = barrier_derivatives(2.0, 0.05, r, yn, 5);
            let p = |r: f64, yn: f64| barrier_derivatives(2.0, 0.05, r, yn, 5).0;
            assert!((pr - (p(r + h, yn) - p(r - h, yn)) / (2.0 * h)).abs() < 1e-8);
            assert!((pn - (p(r, yn + h) - p(r, yn - h)) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn laplacian_matches_cubic() {
        for &(r, yn) in &[(0.5, 0.2), (3.0, 1.0), (10.0, 0.0), (0.1, 5.0)] {
            for &(a, th) in &[(2.0, 0.05), (1.0, 0.3), (2.9, 0.01)] {
                let (_, _, _, lap) = barrier_derivatives(a, th, r, yn, 5);
                let w = yn + 1.0;
                let g = (1.0 + th * th) * r * r + w * w + 2.0 * th * w * r;
                let t = w / r;
                let c = barrier_f_poly(5, a, th);
                let f = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
                let expect = -a * g.powf(-a / 2.0 - 1.0) * f / (th * th + 1.0 + 2.0 * th * t + t * t);
                assert!((lap - expect).abs() < 1e-10 * expect.abs().max(1e-300), "{lap} {expect}");
            }
        }
    }

    #[test]
    fn margins_positive_below_threshold() {
        let s = samples(1, 1000);
        let m = barrier_check(2.0, 0.05, 5, &s);
        assert!(m.interior > 0.0 && m.boundary > 0.0, "{m:?}");
        let th = barrier_theta_threshold(5, 2.0);
        assert!(th > 0.05);
        let m = barrier_check(2.0, 0.9 * th, 5, &s);
        assert!(m.interior > 0.0);
    }

    #[test]
    fn boundary_derivative_negative_without_tilt() {
        let m = barrier_check(1.5, 0.0, 5, &samples(2, 500));
        assert!(m.boundary > 0.0);
    }

    #[test]
    fn critical_exponent_fails() {
        assert_eq!(barrier_theta_threshold(5, 3.0), 0.0);
        let far: Vec<(f64, f64)> = (1..50).map(|k| (10f64.powi(k / 10 + 1) * k as f64, 0.0)).collect();
        for &th in &[0.01, 0.1, 0.5] {
            assert!(barrier_check(3.0, th, 5, &far).interior < 0.0);
            assert!(barrier_check(3.5, th, 5, &far).interior < 0.0);
        }
    }
}
