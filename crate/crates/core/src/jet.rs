//! Second-order forward-mode differentiation.
//!
//! A [`Jet`] carries a value together with its exact gradient and Hessian with
//! respect to the ambient coordinates. Arithmetic propagates all three, so an
//! expression evaluated on coordinate jets yields exact first and second
//! derivatives without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest supported ambient dimension (S^7 sits in R^8).
pub const MAX_AMBIENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub dim: usize,
    pub value: f64,
    pub grad: [f64; MAX_AMBIENT],
    pub hess: [[f64; MAX_AMBIENT]; MAX_AMBIENT],
}

impl Jet {
    pub fn constant(dim: usize, value: f64) -> Self {
        Jet {
            dim,
            value,
            grad: [0.0; MAX_AMBIENT],
            hess: [[0.0; MAX_AMBIENT]; MAX_AMBIENT],
        }
    }

    /// The coordinate function `z -> z[index]` evaluated at `point`.
    pub fn coordinate(point: &[f64], index: usize) -> Self {
        let mut j = Jet::constant(point.len(), point[index]);
        j.grad[index] = 1.0;
        j
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.grad[..self.dim].to_vec()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.hess[i][..self.dim].to_vec())
            .collect()
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value` (chain rule to second order).
    pub fn map(&self, f: f64, df: f64, d2f: f64) -> Self {
        let d = self.dim;
        let mut out = Jet::constant(d, f);
        for i in 0..d {
            out.grad[i] = df * self.grad[i];
        }
        for i in 0..d {
            for k in 0..d {
                out.hess[i][k] = df * self.hess[i][k] + d2f * self.grad[i] * self.grad[k];
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.map(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(&self, k: i32) -> Self {
        match k {
            0 => Jet::constant(self.dim, 1.0),
            1 => *self,
            _ => {
                let v = self.value;
                let kf = k as f64;
                self.map(
                    v.powi(k),
                    kf * v.powi(k - 1),
                    kf * (kf - 1.0) * v.powi(k - 2),
                )
            }
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.value *= s;
        for i in 0..self.dim {
            out.grad[i] *= s;
            for k in 0..self.dim {
                out.hess[i][k] *= s;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad[..self.dim].iter().all(|g| g.is_finite())
            && self.hess[..self.dim]
                .iter()
                .all(|row| row[..self.dim].iter().all(|h| h.is_finite()))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.value += rhs.value;
        for i in 0..self.dim {
            self.grad[i] += rhs.grad[i];
            for k in 0..self.dim {
                self.hess[i][k] += rhs.hess[i][k];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let d = self.dim;
        let mut out = Jet::constant(d, self.value * rhs.value);
        for i in 0..d {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..d {
            for k in 0..d {
                out.hess[i][k] = self.hess[i][k] * rhs.value
                    + self.value * rhs.hess[i][k]
                    + self.grad[i] * rhs.grad[k]
                    + self.grad[k] * rhs.grad[i];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}
