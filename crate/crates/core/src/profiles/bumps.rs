//! Random smooth test fields with closed-form gradients.

use super::field::CylFunction;
use super::steady::eval_u_full;
use crate::base::CylPoint;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bump {
    /// `amp (1 + e r^2) exp(-a r^2 - b xn^2 - c xn)`
    Gaussian { amp: f64, a: f64, b: f64, c: f64, e: f64 },
    /// `amp (r^2 + (xn + shift)^2)^{-beta}`
    Algebraic { amp: f64, beta: f64, shift: f64 },
    /// `U (1 + eps exp(-(r^2 + (xn - center)^2) / width^2))`
    PerturbedProfile { dim: usize, eps: f64, center: f64, width: f64 },
}

impl Bump {
    /// Field with finite energy and nonzero trace; suitable for the trace quotient.
    pub fn random_trace<R: Rng>(rng: &mut R, dim: usize) -> Self {
        match rng.random_range(0..3) {
            0 => Bump::Gaussian {
                amp: rng.random_range(0.5..3.0),
                a: rng.random_range(0.2..3.0),
                b: rng.random_range(0.2..3.0),
                c: rng.random_range(-1.0..1.0),
                e: rng.random_range(0.0..1.0),
            },
            1 => Bump::Algebraic { amp: rng.random_range(0.5..3.0), beta: rng.random_range(3.0..5.0), shift: rng.random_range(0.3..3.0) },
            _ => {
                let mag = rng.random_range(0.1..0.5);
                let eps = if rng.random_bool(0.5) { mag } else { -mag };
                Bump::PerturbedProfile { dim, eps, center: rng.random_range(0.0..2.0), width: rng.random_range(0.5..2.0) }
            }
        }
    }

    /// Field in `H^1` with Gaussian weight `exp(-|x|^2/4)`.
    pub fn random_weighted<R: Rng>(rng: &mut R) -> Self {
        Bump::Gaussian {
            amp: rng.random_range(0.5..3.0),
            a: rng.random_range(-0.1..1.5),
            b: rng.random_range(-0.1..1.5),
            c: rng.random_range(-1.0..1.0),
            e: rng.random_range(0.0..1.0),
        }
    }
}

impl CylFunction for Bump {
    fn value(&self, r: f64, xn: f64) -> f64 {
        match *self {
            Bump::Gaussian { amp, a, b, c, e } => amp * (1.0 + e * r * r) * (-a * r * r - b * xn * xn - c * xn).exp(),
            Bump::Algebraic { amp, beta, shift } => amp * (r * r + (xn + shift).powi(2)).powf(-beta),
            Bump::PerturbedProfile { dim, eps, center, width } => {
                let g = (-(r * r + (xn - center).powi(2)) / (width * width)).exp();
                eval_u_full(CylPoint::at(r, xn, dim)).value * (1.0 + eps * g)
            }
        }
    }

    fn grad(&self, r: f64, xn: f64) -> (f64, f64) {
        match *self {
            Bump::Gaussian { amp, a, b, c, e } => {
                let ex = (-a * r * r - b * xn * xn - c * xn).exp();
                let poly = 1.0 + e * r * r;
                (amp * ex * (2.0 * e * r - 2.0 * a * r * poly), amp * poly * ex * (-2.0 * b * xn - c))
            }
            Bump::Algebraic { amp, beta, shift } => {
                let s = r * r + (xn + shift).powi(2);
                let k = -2.0 * beta * amp * s.powf(-beta - 1.0);
                (k * r, k * (xn + shift))
            }
            Bump::PerturbedProfile { dim, eps, center, width } => {
                let w2 = width * width;
                let g = (-(r * r + (xn - center).powi(2)) / w2).exp();
                let u = eval_u_full(CylPoint::at(r, xn, dim));
                let m = 1.0 + eps * g;
                (
                    u.grad_r * m + u.value * eps * g * (-2.0 * r / w2),
                    u.grad_xn * m + u.value * eps * g * (-2.0 * (xn - center) / w2),
                )
            }
        }
    }
}
