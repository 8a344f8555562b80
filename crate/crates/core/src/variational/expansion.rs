//! Bubble energies J_K(φ_{a,λ}) and the sign of their λ⁻² correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func_core::{CandidateFunction, CriticalPoint};
use crate::sphere;

use super::bubble::bubble;
use super::energy::{energy_constant, energy_jk};
use super::quadrature::concentrated_rule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleEnergy {
    pub lambda: f64,
    pub energy: f64,
    /// |J(level) − J(level − 1)|, a quadrature error estimate.
    pub error_estimate: f64,
}

/// J_K(φ_{a,λ}) on a rule concentrated at `a`.
pub fn bubble_energy(
    k: &CandidateFunction,
    a: &[f64],
    lambda: f64,
    level: usize,
) -> Result<BubbleEnergy> {
    let n = k.n();
    let phi = bubble(a, lambda, n)?;
    let q = concentrated_rule(n, level, &phi.a, lambda)?;
    let energy = energy_jk(k, &phi, &q)?;
    let coarse_level = if level > 1 { level - 1 } else { level + 1 };
    let coarse = concentrated_rule(
        n,
        coarse_level,
        &phi.a,
        lambda.min(1000.0 * coarse_level as f64),
    )?;
    let coarse_energy = energy_jk(k, &phi, &coarse)?;
    Ok(BubbleEnergy {
        lambda,
        energy,
        error_estimate: (energy - coarse_energy).abs(),
    })
}

/// Least squares through the origin, y ≈ βx. Returns (β, standard error).
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 matched samples, got {}",
            x.len().min(y.len())
        )));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all regressors vanish".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let beta = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - beta * a).powi(2)).sum();
    let s2 = rss / (x.len() - 1) as f64;
    Ok((beta, (s2 / sxx).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub center: Vec<f64>,
    pub k_value: f64,
    pub laplacian: f64,
    /// Y(Sⁿ)/K(a)^{(n−2)/n}.
    pub limit: f64,
    pub samples: Vec<BubbleEnergy>,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    /// −sign(ΔK(a)), or 0 when ΔK(a) = 0.
    pub expected_sign: i8,
    pub sign_ok: bool,
}

/// Fits J_K(φ_{a,λ}) − Y/K(a)^{(n−2)/n} against λ⁻² over `lambdas`.
pub fn expansion_sign_check(
    k: &CandidateFunction,
    a: &CriticalPoint,
    lambdas: &[f64],
    level: usize,
) -> Result<ExpansionReport> {
    let n = k.n();
    if n < 5 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "the λ⁻² term dominates only for n ≥ 5".into(),
        });
    }
    if lambdas.len() < 3 {
        return Err(Error::Fit("λ list too short for a fit".into()));
    }
    let nf = n as f64;
    let kv = k.value(&a.location);
    let limit = energy_constant(n) / kv.powf((nf - 2.0) / nf);
    let samples = lambdas
        .iter()
        .map(|&l| bubble_energy(k, &a.location, l, level))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = lambdas.iter().map(|l| l.powi(-2)).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.energy - limit).collect();
    let (beta, se) = fit_through_origin(&x, &y)?;
    let t = if se > 0.0 {
        beta / se
    } else {
        f64::INFINITY * beta.signum()
    };
    let lap = k.laplace_beltrami(&a.location)?;
    let expected_sign: i8 = if lap < 0.0 {
        1
    } else if lap > 0.0 {
        -1
    } else {
        0
    };
    let sign_ok = match expected_sign {
        0 => beta.abs() <= 1e-8 * limit,
        s => beta.signum() as i8 == s,
    };
    Ok(ExpansionReport {
        center: a.location.clone(),
        k_value: kv,
        laplacian: lap,
        limit,
        samples,
        coefficient: beta,
        std_error: se,
        t_statistic: t,
        expected_sign,
        sign_ok,
    })
}

/// Numerical λ → ∞ limit of J₁(φ_{a,λ}); agrees with Y(Sⁿ).
pub fn energy_constant_numeric(n: usize, level: usize) -> Result<f64> {
    let k = crate::func_core::parse_candidate("1", sphere::SphereSpec::new(n)?)?;
    let mut a = vec![0.0; n + 1];
    a[n] = 1.0;
    Ok(bubble_energy(&k, &a, 100.0, level)?.energy)
}
