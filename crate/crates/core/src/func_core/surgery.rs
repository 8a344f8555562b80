//! Local modification of the Hessian at a critical point.
//!
//! Near a critical point x₀ write K = K(x₀) + Σ bᵢ⟨z, eᵢ⟩² + … with eᵢ the
//! Hessian eigenvectors (so bᵢ is half an eigenvalue). The patch adds
//! `(1 − η(ρ/δ)) Σ (cᵢ − bᵢ)⟨z, eᵢ⟩²`, ρ = |z − x₀|, which leaves the value and
//! the critical set in place and sets ΔK̃(x₀) = 2Σcᵢ. The cutoff is the C²
//! smoothstep on [1, 2] with 0 ≤ η′ ≤ 15/8.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::sphere;

use super::candidate::{hessian_eigen, CandidateFunction};
use super::critical::CriticalPoint;

/// Slack applied to the coefficient bound |cⱼ − bⱼ| ≤ ε|bⱼ|.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryPatch {
    pub center: Vec<f64>,
    pub delta: f64,
    pub epsilon: f64,
    /// Ambient unit eigenvectors eᵢ of the base Hessian at the center.
    pub directions: Vec<Vec<f64>>,
    /// Half the base Hessian eigenvalues, ascending.
    pub base: Vec<f64>,
    pub target: Vec<f64>,
}

/// Smoothstep cutoff: 0 on [0, 1], 1 on [2, ∞).
pub fn eta(s: f64) -> f64 {
    let t = (s - 1.0).clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

pub fn eta_prime(s: f64) -> f64 {
    let t = s - 1.0;
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (t - 1.0) * (t - 1.0)
}

pub fn eta_second(s: f64) -> f64 {
    let t = s - 1.0;
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    60.0 * t * (2.0 * t - 1.0) * (t - 1.0)
}

impl SurgeryPatch {
    fn quadratic(&self, x: &[f64]) -> f64 {
        self.directions
            .iter()
            .zip(self.target.iter().zip(&self.base))
            .map(|(e, (c, b))| (c - b) * sphere::dot(x, e).powi(2))
            .sum()
    }

    fn rho_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let u = self.rho_sq(x);
        if u >= 4.0 * self.delta * self.delta {
            return 0.0;
        }
        (1.0 - eta(u.sqrt() / self.delta)) * self.quadratic(x)
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        let d = x.len();
        let u = self.rho_sq(x);
        let d2 = self.delta * self.delta;
        if u >= 4.0 * d2 {
            return Jet::constant(d, 0.0);
        }
        let mut q = Jet::constant(d, 0.0);
        for (e, (c, b)) in self
            .directions
            .iter()
            .zip(self.target.iter().zip(&self.base))
        {
            let mut l = Jet::constant(d, sphere::dot(x, e));
            l.grad[..d].copy_from_slice(e);
            q = q + l.powi(2).scale(c - b);
        }
        if u <= d2 {
            return q;
        }
        let mut uj = Jet::constant(d, 0.0);
        for (k, c) in self.center.iter().enumerate() {
            let zk = Jet::coordinate(x, k) - Jet::constant(d, *c);
            uj = uj + zk * zk;
        }
        // g(u) = 1 − η(√u/δ) with the chain rule through s = √u/δ.
        let r = u.sqrt();
        let s = r / self.delta;
        let ds = 1.0 / (2.0 * self.delta * r);
        let d2s = -1.0 / (4.0 * self.delta * r * u);
        let g = 1.0 - eta(s);
        let dg = -eta_prime(s) * ds;
        let d2g = -(eta_second(s) * ds * ds + eta_prime(s) * d2s);
        uj.map(g, dg, d2g) * q
    }
}

/// Flip rule for the coefficients: moves each bⱼ by ε|bⱼ| in the given direction.
pub fn shifted_coefficients(base: &[f64], epsilon: f64, upward: bool) -> Vec<f64> {
    base.iter()
        .map(|b| {
            if upward {
                b + epsilon * b.abs()
            } else {
                b - epsilon * b.abs()
            }
        })
        .collect()
}

/// Half Hessian eigenvalues (ascending) at a critical point together with
/// their ambient eigenvectors.
pub fn surgery_basis(k: &CandidateFunction, x0: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (vals, vecs) = hessian_eigen(k, x0)?;
    Ok((vals.iter().map(|v| 0.5 * v).collect(), vecs))
}

/// Replaces the Hessian coefficients bᵢ at `critical[target]` by `c`.
///
/// `critical` must be the full critical set of `k`; it is used to check that
/// the support B_{2δ}(x₀) contains no other critical point.
pub fn laplacian_surgery(
    k: &CandidateFunction,
    critical: &[CriticalPoint],
    target: usize,
    c: &[f64],
    delta: f64,
    epsilon: f64,
) -> Result<CandidateFunction> {
    let n = k.n();
    let x0 = critical
        .get(target)
        .ok_or_else(|| Error::Precondition(format!("no critical point with index {target}")))?;
    if x0.morse_index == 0 || x0.morse_index == n {
        return Err(Error::Precondition(format!(
            "surgery point has Morse index {} and is an extremum of K",
            x0.morse_index
        )));
    }
    if !(delta > 0.0 && epsilon > 0.0) {
        return Err(Error::Precondition("δ and ε must be positive".into()));
    }
    if c.len() != n {
        return Err(Error::Precondition(format!(
            "expected {n} target coefficients, got {}",
            c.len()
        )));
    }
    let (b, dirs) = surgery_basis(k, &x0.location)?;
    for (j, (cj, bj)) in c.iter().zip(&b).enumerate() {
        if (cj - bj).abs() > epsilon * bj.abs() * (1.0 + BOUND_SLACK) {
            return Err(Error::Precondition(format!(
                "coefficient {j}: |c - b| = {:.3e} exceeds ε|b| = {:.3e}",
                (cj - bj).abs(),
                epsilon * bj.abs()
            )));
        }
    }
    for (i, other) in critical.iter().enumerate() {
        if i != target {
            let chord = sphere::norm(
                &other
                    .location
                    .iter()
                    .zip(&x0.location)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            if chord < 2.0 * delta {
                return Err(Error::Precondition(format!(
                    "B_2δ around the surgery point contains critical point {i}"
                )));
            }
        }
    }
    let patch = SurgeryPatch {
        center: x0.location.clone(),
        delta,
        epsilon,
        directions: dirs,
        base: b,
        target: c.to_vec(),
    };
    let out = k.with_patch(patch);
    // Local post-conditions: the new Hessian must stay nondegenerate with ΔK̃ ≠ 0.
    let lap = out.laplace_beltrami(&x0.location)?;
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if c.iter().any(|v| v.abs() <= 1e-6 * scale) || lap.abs() <= 1e-6 * scale {
        return Err(Error::Degenerate {
            point: x0.location.clone(),
            reason: "patched Hessian is degenerate or has ΔK̃ = 0".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        assert_eq!(eta(0.5), 0.0);
        assert_eq!(eta(1.0), 0.0);
        assert_eq!(eta(2.0), 1.0);
        assert_eq!(eta(3.0), 1.0);
        let mut max_slope: f64 = 0.0;
        for i in 0..=1000 {
            let s = 1.0 + i as f64 / 1000.0;
            let d = eta_prime(s);
            assert!(d >= 0.0);
            max_slope = max_slope.max(d);
        }
        assert!(max_slope <= 2.0);
        let h = 1e-6;
        for s in [1.2, 1.5, 1.8] {
            let fd = (eta(s + h) - eta(s - h)) / (2.0 * h);
            assert!((fd - eta_prime(s)).abs() < 1e-8);
            let fd2 = (eta_prime(s + h) - eta_prime(s - h)) / (2.0 * h);
            assert!((fd2 - eta_second(s)).abs() < 1e-6);
        }
    }
}
