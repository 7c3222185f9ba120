use super::{BubbleParams, CylPoint, TimeWindow};
use crate::error::{invalid, BblError, Result};

/// Inner variable `y = (x - (xi, 0)) / mu` in the axis plane.
pub fn inner_coords(x: CylPoint, b: BubbleParams) -> Result<CylPoint> {
    if !(b.mu > 0.0) {
        return invalid("bubble scale must be positive");
    }
    Ok(CylPoint::at((x.r - b.xi_offset).abs() / b.mu, x.xn / b.mu, x.dim))
}

/// Self-similar variables `z = (x - q)/sqrt(T - t)`, `s = -ln(T - t)`.
///
/// The anchor `q` sits on the boundary at signed axis-plane position `q_r`.
pub fn selfsim_coords(x: CylPoint, q_r: f64, w: TimeWindow) -> Result<(CylPoint, f64)> {
    if !(w.t < w.big_t) {
        return Err(BblError::PastBlowup { t: w.t, big_t: w.big_t });
    }
    let sq = w.tau().sqrt();
    Ok((CylPoint::at((x.r - q_r).abs() / sq, x.xn / sq, x.dim), w.s()))
}

/// Inverse of [`selfsim_coords`] on the branch `r >= q_r`; returns `(x, t)`.
pub fn selfsim_inverse(z: CylPoint, q_r: f64, s: f64, big_t: f64) -> (CylPoint, f64) {
    let sq = (-0.5 * s).exp();
    (CylPoint::at(q_r + z.r * sq, z.xn * sq, z.dim), big_t - (-s).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_examples() {
        let b = BubbleParams::new(0.3, 1.2, 0.0, 0).unwrap();
        let y = inner_coords(CylPoint::at(1.2, 0.0, 5), b).unwrap();
        assert_eq!((y.r, y.xn), (0.0, 0.0));
        let id = BubbleParams::new(1.0, 0.0, 0.0, 0).unwrap();
        let x = CylPoint::at(0.7, 0.4, 5);
        assert_eq!(inner_coords(x, id).unwrap(), x);
        let mu = 0.25;
        let b = BubbleParams::new(mu, 0.0, 0.0, 0).unwrap();
        let y = inner_coords(CylPoint::at(2.0 * mu, mu, 5), b).unwrap();
        assert!((y.r - 2.0).abs() < 1e-15 && (y.xn - 1.0).abs() < 1e-15);
    }

    #[test]
    fn selfsim_examples() {
        let w = TimeWindow::new(1.0, 0.3).unwrap();
        let (z, _) = selfsim_coords(CylPoint::at(0.5, 0.0, 5), 0.5, w).unwrap();
        assert_eq!(z.norm(), 0.0);
        let w = TimeWindow::new(1.5, 0.5).unwrap();
        let (z, s) = selfsim_coords(CylPoint::at(0.9, 0.2, 5), 0.4, w).unwrap();
        assert_eq!(s, 0.0);
        assert!((z.r - 0.5).abs() < 1e-15 && (z.xn - 0.2).abs() < 1e-15);
        let e = std::f64::consts::E;
        let w = TimeWindow::new(1.0, 1.0 - (-2.0f64).exp()).unwrap();
        let x = CylPoint::at(0.3, 0.4, 5);
        let (z, _) = selfsim_coords(x, 0.0, w).unwrap();
        assert!((z.norm() - 0.5 * e).abs() < 1e-14);
        assert!(selfsim_coords(x, 0.0, TimeWindow { big_t: 1.0, t: 1.0 }).is_err());
    }
}
