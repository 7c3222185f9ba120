//! Exponentially scaled modified Bessel functions of the first kind.

use super::ln_gamma;

/// `exp(-x) I_nu(x) x^{-nu}` for `x >= 0`, `nu >= 0`.
///
/// Finite at `x = 0` where it equals `1 / (2^nu Gamma(nu+1))`.
pub fn i_scaled_reduced(nu: f64, x: f64) -> f64 {
    debug_assert!(x >= 0.0 && nu >= 0.0);
    if x <= 30.0 {
        // sum_k (x/2)^{2k} / (k! Gamma(k+nu+1)) * 2^{-nu} * exp(-x)
        let mut term = (-nu * std::f64::consts::LN_2 - ln_gamma(nu + 1.0) - x).exp();
        let q = 0.25 * x * x;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + nu));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    } else {
        i_scaled(nu, x) * x.powf(-nu)
    }
}

/// `exp(-x) I_nu(x)` for `x >= 0`, `nu >= 0`.
pub fn i_scaled(nu: f64, x: f64) -> f64 {
    if x <= 30.0 {
        if x == 0.0 {
            return if nu == 0.0 { 1.0 } else { 0.0 };
        }
        return i_scaled_reduced(nu, x) * x.powf(nu);
    }
    // Hankel asymptotic expansion
    let mu = 4.0 * nu * nu;
    let mut term: f64 = 1.0;
    let mut sum = 1.0;
    let mut k: f64 = 1.0;
    loop {
        let next = -term * (mu - (2.0 * k - 1.0).powi(2)) / (k * 8.0 * x);
        if next.abs() >= term.abs() || k > 200.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}
