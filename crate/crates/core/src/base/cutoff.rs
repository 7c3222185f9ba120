use crate::error::{invalid, Result};

/// Fixed cutoff: 1 on `[0,1]`, 0 on `[2,inf)`, quintic smoothstep bridge.
#[inline]
pub fn eta(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let u = s - 1.0;
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// First derivative of [`eta`].
#[inline]
pub fn eta_d1(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let u = s - 1.0;
        -30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

/// Second derivative of [`eta`].
#[inline]
pub fn eta_d2(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let u = s - 1.0;
        -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    }
}

/// Checked cutoff evaluation.
pub fn cutoff_eta(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("cutoff argument must be nonnegative, got {s}"));
    }
    Ok(eta(s))
}

/// The radial cutoff `x -> eta(|x| / scale)` on `R^dim`.
#[derive(Debug, Clone, Copy)]
pub struct RadialCutoff {
    pub scale: f64,
    pub dim: usize,
}

impl RadialCutoff {
    pub fn new(scale: f64, dim: usize) -> Self {
        Self { scale, dim }
    }

    #[inline]
    pub fn value(&self, rho: f64) -> f64 {
        eta(rho / self.scale)
    }

    /// Radial derivative `d/d rho`.
    #[inline]
    pub fn d_rho(&self, rho: f64) -> f64 {
        eta_d1(rho / self.scale) / self.scale
    }

    /// Laplacian in `R^dim`; the derivative vanishes near the origin so there is no axis issue.
    #[inline]
    pub fn laplacian(&self, rho: f64) -> f64 {
        let s = rho / self.scale;
        if s <= 1.0 || s >= 2.0 {
            return 0.0;
        }
        eta_d2(s) / (self.scale * self.scale) + (self.dim as f64 - 1.0) / rho * eta_d1(s) / self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        assert_eq!(cutoff_eta(0.5).unwrap(), 1.0);
        assert_eq!(cutoff_eta(3.0).unwrap(), 0.0);
        let m = cutoff_eta(1.5).unwrap();
        assert!(m > 0.0 && m < 1.0);
        assert!(cutoff_eta(-0.1).is_err());
    }

    #[test]
    fn bridge_is_c2() {
        for s in [1.0, 2.0] {
            assert_eq!(eta_d1(s), 0.0);
            assert_eq!(eta_d2(s), 0.0);
            let h = 1e-7;
            assert!(eta_d1(s + h).abs() < 1e-12 && eta_d1(s - h).abs() < 1e-12);
            assert!(eta_d2(s + h).abs() < 1e-4 && eta_d2(s - h).abs() < 1e-4);
        }
    }

    #[test]
    fn derivative_bounds_and_monotone() {
        let mut prev = 1.0;
        for k in 0..=10000 {
            let s = k as f64 * 3e-4;
            let v = eta(s);
            assert!(v <= prev + 1e-15);
            prev = v;
            assert!(eta_d1(s).abs() <= 2.0);
            assert!(eta_d2(s).abs() <= 12.0);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for k in 1..100 {
            let s = 1.0 + k as f64 / 100.0;
            let d1 = (eta(s + h) - eta(s - h)) / (2.0 * h);
            assert!((d1 - eta_d1(s)).abs() < 1e-8);
            let d2 = (eta_d1(s + h) - eta_d1(s - h)) / (2.0 * h);
            assert!((d2 - eta_d2(s)).abs() < 1e-6);
        }
    }
}
