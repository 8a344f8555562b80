use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::func_core::CandidateFunction;
use crate::sphere;

use super::bubble::TestFunction;
use super::quadrature::{Neumaier, QuadratureRule};

const CHUNK: usize = 2048;

/// Quadrature sums of the pieces entering J_K and its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrals {
    /// ∫ c_n|∇u|² + R u².
    pub dirichlet: f64,
    /// ∫ K |u|^{q}.
    pub weighted: f64,
    /// ∫ c_n ∇u·∇v + R u v (zero when no direction is given).
    pub mixed: f64,
    /// ∫ K |u|^{q−2} u v.
    pub weighted_mixed: f64,
}

fn integrals(
    k: &CandidateFunction,
    u: &dyn TestFunction,
    v: Option<&dyn TestFunction>,
    q: &QuadratureRule,
    exponent: f64,
) -> Integrals {
    let n = q.n;
    let cn = sphere::conformal_coefficient(n);
    let r = sphere::scalar_curvature(n);
    let partial: Vec<[Neumaier; 4]> = q
        .points
        .par_chunks(CHUNK)
        .zip(q.weights.par_chunks(CHUNK))
        .map(|(pts, wts)| {
            let mut acc = [Neumaier::default(); 4];
            for (x, w) in pts.iter().zip(wts) {
                let uv = u.value(x);
                let gu = u.gradient(x);
                let kv = k.value(x);
                let au = uv.abs();
                acc[0].add(w * (cn * sphere::dot(&gu, &gu) + r * uv * uv));
                acc[1].add(w * kv * au.powf(exponent));
                if let Some(v) = v {
                    let vv = v.value(x);
                    let gv = v.gradient(x);
                    acc[2].add(w * (cn * sphere::dot(&gu, &gv) + r * uv * vv));
                    acc[3].add(w * kv * au.powf(exponent - 2.0) * uv * vv);
                }
            }
            acc
        })
        .collect();
    let mut tot = [Neumaier::default(); 4];
    for p in &partial {
        for (t, a) in tot.iter_mut().zip(p) {
            t.merge(a);
        }
    }
    Integrals {
        dirichlet: tot[0].total(),
        weighted: tot[1].total(),
        mixed: tot[2].total(),
        weighted_mixed: tot[3].total(),
    }
}

fn check_dims(k: &CandidateFunction, q: &QuadratureRule) -> Result<()> {
    if k.n() != q.n {
        return Err(Error::Invalid(format!(
            "candidate on S^{} but quadrature on S^{}",
            k.n(),
            q.n
        )));
    }
    if q.n < 3 {
        return Err(Error::UnsupportedDimension {
            n: q.n,
            reason: "the conformal Laplacian needs n ≥ 3".into(),
        });
    }
    Ok(())
}

fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// J_K(u) = ∫L u·u / (∫K u^{2n/(n−2)})^{(n−2)/n}.
pub fn energy_jk(k: &CandidateFunction, u: &dyn TestFunction, q: &QuadratureRule) -> Result<f64> {
    energy_jk_subcritical(k, u, 0.0, q)
}

/// J_{K,τ}(u) = ∫L u·u / (∫K u^{p+1})^{2/(p+1)} with p = (n+2)/(n−2) − τ.
pub fn energy_jk_subcritical(
    k: &CandidateFunction,
    u: &dyn TestFunction,
    tau: f64,
    q: &QuadratureRule,
) -> Result<f64> {
    check_dims(k, q)?;
    let n = q.n as f64;
    let p = (n + 2.0) / (n - 2.0) - tau;
    if !(tau >= 0.0 && p > 1.0) {
        return Err(Error::Invalid(format!(
            "τ = {tau} outside [0, (n+2)/(n−2) − 1)"
        )));
    }
    let s = integrals(k, u, None, q, p + 1.0);
    if s.weighted <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(s.dirichlet / s.weighted.powf(2.0 / (p + 1.0)))
}

/// ∂J_K(u)v = (2/k^{(n−2)/n}) [∫L u v − (r/k) ∫K u^{(n+2)/(n−2)} v].
pub fn gradient_jk(
    k: &CandidateFunction,
    u: &dyn TestFunction,
    v: &dyn TestFunction,
    q: &QuadratureRule,
) -> Result<f64> {
    check_dims(k, q)?;
    let n = q.n as f64;
    let s = integrals(k, u, Some(v), q, critical_exponent(q.n));
    if s.weighted <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let kk = s.weighted;
    Ok(2.0 / kk.powf((n - 2.0) / n) * (s.mixed - s.dirichlet / kk * s.weighted_mixed))
}

/// The CPI energy constant: Y(Sⁿ) = n(n−1)·vol(Sⁿ)^{2/n}.
pub fn energy_constant(n: usize) -> f64 {
    sphere::yamabe_constant(n)
}
