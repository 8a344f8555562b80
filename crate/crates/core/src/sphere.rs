//! Geometry of the unit sphere Sⁿ ⊂ ℝⁿ⁺¹ and the conformal constants attached to it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::MAX_AMBIENT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SphereSpec {
    pub n: usize,
}

impl SphereSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "the sphere dimension must be at least 2".into(),
            });
        }
        if n + 1 > MAX_AMBIENT {
            return Err(Error::UnsupportedDimension {
                n,
                reason: format!("ambient dimension is limited to {MAX_AMBIENT}"),
            });
        }
        Ok(SphereSpec { n })
    }

    pub fn ambient(&self) -> usize {
        self.n + 1
    }
}

/// Coefficient of −Δ in the conformal Laplacian, 4(n−1)/(n−2).
pub fn conformal_coefficient(n: usize) -> f64 {
    4.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Scalar curvature of the unit round sphere.
pub fn scalar_curvature(n: usize) -> f64 {
    (n * (n - 1)) as f64
}

/// Riemannian volume of the unit Sⁿ.
pub fn volume(n: usize) -> f64 {
    // vol(Sⁿ) = 2π/(n−1) · vol(Sⁿ⁻²)
    let mut v = if n.is_multiple_of(2) {
        2.0
    } else {
        2.0 * std::f64::consts::PI
    };
    let mut k = if n.is_multiple_of(2) { 0 } else { 1 };
    while k < n {
        k += 2;
        v *= 2.0 * std::f64::consts::PI / (k as f64 - 1.0);
    }
    v
}

/// Yamabe constant of the round sphere, n(n−1)·vol(Sⁿ)^{2/n}.
pub fn yamabe_constant(n: usize) -> f64 {
    scalar_curvature(n) * volume(n).powf(2.0 / n as f64)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &[f64]) -> Vec<f64> {
    let r = norm(a);
    a.iter().map(|x| x / r).collect()
}

/// Removes the normal component of `v` at `p`.
pub fn project_tangent(p: &[f64], v: &[f64]) -> Vec<f64> {
    let s = dot(p, v);
    v.iter().zip(p).map(|(vi, pi)| vi - s * pi).collect()
}

/// Great-circle distance, accurate for nearby points.
pub fn geodesic_distance(p: &[f64], q: &[f64]) -> f64 {
    let chord: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Exponential map at `p` applied to the tangent vector `v`.
pub fn exp_map(p: &[f64], v: &[f64]) -> Vec<f64> {
    let t = norm(v);
    if t < 1e-300 {
        return p.to_vec();
    }
    let (s, c) = t.sin_cos();
    let q: Vec<f64> = p
        .iter()
        .zip(v)
        .map(|(pi, vi)| c * pi + s * vi / t)
        .collect();
    normalize(&q)
}

/// Deterministic orthonormal basis of the tangent space at `p`, built from the
/// Householder reflection that sends `p` to a signed coordinate axis.
pub fn tangent_frame(p: &[f64]) -> Vec<Vec<f64>> {
    let d = p.len();
    let k = (0..d)
        .max_by(|&i, &j| p[i].abs().total_cmp(&p[j].abs()))
        .unwrap_or(0);
    let mut v = p.to_vec();
    v[k] += if p[k] >= 0.0 { 1.0 } else { -1.0 };
    let vv = dot(&v, &v);
    (0..d)
        .filter(|&j| j != k)
        .map(|j| {
            (0..d)
                .map(|i| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    delta - 2.0 * v[i] * v[j] / vv
                })
                .collect()
        })
        .collect()
}

/// Fibonacci lattice on S², used as a quasi-uniform seed set.
pub fn fibonacci_s2(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}
