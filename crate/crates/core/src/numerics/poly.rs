//! Univariate polynomials with exact rational coefficients.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Q = Ratio<i128>;

/// Dense polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatPoly {
    c: Vec<Q>,
}

impl RatPoly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while c.len() > 1 && c.last().map_or(false, |x| x.is_zero()) {
            c.pop();
        }
        if c.is_empty() {
            c.push(Q::zero());
        }
        Self { c }
    }

    pub fn from_ints(c: &[i128]) -> Self {
        Self::new(c.iter().map(|&v| Q::from_integer(v)).collect())
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    pub fn one() -> Self {
        Self::new(vec![Q::one()])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![Q::zero(), Q::one()])
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.c.len() == 1 && self.c[0].is_zero()
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.c.iter().map(q_to_f64).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let v = (0..n)
            .map(|i| {
                self.c.get(i).copied().unwrap_or_else(Q::zero) + o.c.get(i).copied().unwrap_or_else(Q::zero)
            })
            .collect();
        Self::new(v)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(Q::from_integer(-1)))
    }

    pub fn scale(&self, k: Q) -> Self {
        Self::new(self.c.iter().map(|v| *v * k).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut v = vec![Q::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                v[i + j] += *a * *b;
            }
        }
        Self::new(v)
    }

    pub fn deriv(&self) -> Self {
        if self.c.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| *v * Q::from_integer(k as i128))
                .collect(),
        )
    }

    /// Horner evaluation in floating point.
    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, v| acc * x + q_to_f64(v))
    }

    /// Canonical ascending-degree text in the variable `var`.
    pub fn to_text(&self, var: &str) -> String {
        let mut parts = Vec::new();
        for (k, v) in self.c.iter().enumerate() {
            if v.is_zero() && self.c.len() > 1 {
                continue;
            }
            let coef = if v.is_integer() { format!("{}", v.numer()) } else { format!("{}/{}", v.numer(), v.denom()) };
            parts.push(match k {
                0 => coef,
                1 => format!("{coef}*{var}"),
                _ => format!("{coef}*{var}^{k}"),
            });
        }
        parts.join(" + ")
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text("x"))
    }
}

pub fn q_to_f64(v: &Q) -> f64 {
    // numerators stay well inside i128, the division is done in f64
    let n = v.numer().to_f64().unwrap_or(f64::NAN);
    let d = v.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Exact rational for a float that is a multiple of 1/2^20, if any.
pub fn dyadic(x: f64) -> Option<Q> {
    let s = x * (1u64 << 20) as f64;
    if s.fract() == 0.0 && s.abs() < 1e15 {
        Some(Q::new(s as i128, 1i128 << 20))
    } else {
        None
    }
}

pub fn q_abs(v: &Q) -> Q {
    v.abs()
}

/// Evaluate a float coefficient vector (ascending) by Horner.
pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Derivative of a float coefficient vector.
pub fn deriv_f64(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, v)| v * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = RatPoly::from_ints(&[1, 1]);
        let q = p.mul(&p);
        assert_eq!(q, RatPoly::from_ints(&[1, 2, 1]));
        assert_eq!(q.deriv(), RatPoly::from_ints(&[2, 2]));
        assert_eq!(q.sub(&q), RatPoly::zero());
        assert_eq!(q.eval(2.0), 9.0);
    }

    #[test]
    fn text_form() {
        let p = RatPoly::new(vec![Q::new(5, 2), Q::from_integer(-1)]);
        assert_eq!(p.to_text("r"), "5/2 + -1*r");
    }
}
