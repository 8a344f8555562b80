use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere;
use crate::variational::quadrature;

use super::candidate::{hessian_from_jet, laplacian_from_jet, CandidateFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub morse_index: usize,
    pub laplacian: f64,
    /// Ascending.
    pub hessian_eigenvalues: Vec<f64>,
}

impl CriticalPoint {
    /// A critical point known only through its data (no geometry), as used by
    /// randomized catalogs and spread files.
    pub fn synthetic(n: usize, value: f64, morse_index: usize, laplacian: f64) -> Self {
        CriticalPoint {
            location: Vec::new(),
            value,
            morse_index: morse_index.min(n),
            laplacian,
            hessian_eigenvalues: Vec::new(),
        }
    }

    /// Morse index of K⁻¹ at the same point.
    pub fn inverse_index(&self, n: usize) -> usize {
        n - self.morse_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchTolerances {
    pub gradient: f64,
    pub merge: f64,
    pub degeneracy: f64,
    pub max_iterations: usize,
    pub max_step: f64,
}

impl Default for SearchTolerances {
    fn default() -> Self {
        SearchTolerances {
            gradient: 1e-10,
            merge: 1e-6,
            degeneracy: 1e-6,
            max_iterations: 200,
            max_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub seeds: usize,
    pub nonconverged: usize,
}

/// Seed points: Fibonacci lattice on S², product Gauss grid otherwise.
pub fn seed_points(n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if n == 2 {
        let count = (resolution + 1) * (2 * resolution + 2);
        Ok(sphere::fibonacci_s2(count.max(10)))
    } else {
        Ok(quadrature::product_rule(n, resolution.max(1))?.points)
    }
}

fn newton(k: &CandidateFunction, seed: &[f64], tol: &SearchTolerances) -> Option<Vec<f64>> {
    let mut p = sphere::normalize(seed);
    for _ in 0..tol.max_iterations {
        let j = k.jet(&p);
        if !j.is_finite() {
            return None;
        }
        let frame = sphere::tangent_frame(&p);
        let g_amb = j.gradient();
        let g = DVector::from_iterator(frame.len(), frame.iter().map(|e| sphere::dot(e, &g_amb)));
        if g.norm() < tol.gradient {
            return Some(p);
        }
        let h = hessian_from_jet(&j, &p, &frame);
        let eig = SymmetricEigen::new((&h + h.transpose()) * 0.5);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        let mut step = DVector::zeros(frame.len());
        for (i, lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() > 1e-12 * scale {
                let v = eig.eigenvectors.column(i);
                step -= v * (v.dot(&g) / lam);
            }
        }
        let len = step.norm();
        if len > tol.max_step {
            step *= tol.max_step / len;
        }
        let mut tangent = vec![0.0; p.len()];
        for (a, e) in frame.iter().enumerate() {
            for (t, ei) in tangent.iter_mut().zip(e) {
                *t += step[a] * ei;
            }
        }
        p = sphere::exp_map(&p, &tangent);
    }
    None
}

/// Classifies a point assumed critical.
pub fn classify(k: &CandidateFunction, p: &[f64], tol: &SearchTolerances) -> Result<CriticalPoint> {
    let j = k.jet(p);
    let frame = sphere::tangent_frame(p);
    let h = hessian_from_jet(&j, p, &frame);
    let eig = SymmetricEigen::new((&h + h.transpose()) * 0.5);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let laplacian = laplacian_from_jet(&j, p);
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = tol.degeneracy * scale;
    if scale == 0.0 || ev.iter().any(|v| v.abs() <= threshold) {
        return Err(Error::Degenerate {
            point: p.to_vec(),
            reason: format!("Hessian eigenvalues {ev:?} are not bounded away from zero"),
        });
    }
    if laplacian.abs() <= threshold {
        return Err(Error::Degenerate {
            point: p.to_vec(),
            reason: format!("ΔK = {laplacian:e} vanishes at a critical point"),
        });
    }
    Ok(CriticalPoint {
        location: p.to_vec(),
        value: j.value,
        morse_index: ev.iter().filter(|v| **v < 0.0).count(),
        laplacian,
        hessian_eigenvalues: ev,
    })
}

/// Tangent-grid seeds in the geodesic ball of `radius` around `center`,
/// `per_axis` points per tangent axis.
pub fn local_seeds(center: &[f64], radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let frame = sphere::tangent_frame(center);
    let n = frame.len();
    let steps: Vec<f64> = (0..per_axis)
        .map(|i| radius * (2.0 * (i as f64 + 0.5) / per_axis as f64 - 1.0))
        .collect();
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut v = vec![0.0; center.len()];
        for e in &frame {
            let c = steps[code % per_axis];
            code /= per_axis;
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi += c * ei;
            }
        }
        if sphere::norm(&v) <= radius {
            out.push(sphere::exp_map(center, &v));
        }
    }
    out
}

/// Projected Newton from every seed, merged and classified; sorted by value
/// then by coordinates.
pub fn find_critical_points(
    k: &CandidateFunction,
    resolution: usize,
) -> Result<Vec<CriticalPoint>> {
    Ok(search(k, resolution, &SearchTolerances::default())?.points)
}

pub fn search(
    k: &CandidateFunction,
    resolution: usize,
    tol: &SearchTolerances,
) -> Result<CriticalSearch> {
    search_from(k, &seed_points(k.n(), resolution)?, tol)
}

/// As [`search`] but from caller-supplied seeds.
pub fn search_from(
    k: &CandidateFunction,
    seeds: &[Vec<f64>],
    tol: &SearchTolerances,
) -> Result<CriticalSearch> {
    let converged: Vec<Option<Vec<f64>>> = seeds.par_iter().map(|s| newton(k, s, tol)).collect();
    let nonconverged = converged.iter().filter(|c| c.is_none()).count();
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for p in converged.into_iter().flatten() {
        if !reps
            .iter()
            .any(|q| sphere::geodesic_distance(q, &p) < tol.merge)
        {
            reps.push(p);
        }
    }
    let mut points = reps
        .iter()
        .map(|p| classify(k, p, tol))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then_with(|| {
            a.location
                .iter()
                .zip(&b.location)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(CriticalSearch {
        points,
        seeds: seeds.len(),
        nonconverged,
    })
}

/// Σ(−1)^{m(K,x)}, which must equal χ(Sⁿ).
pub fn euler_sum(points: &[CriticalPoint]) -> i64 {
    points
        .iter()
        .map(|p| if p.morse_index % 2 == 0 { 1 } else { -1 })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub positive: bool,
    pub min_sampled_value: f64,
    pub morse: bool,
    /// min over critical points of |ΔK(x)|.
    pub separation_margin: Option<f64>,
    pub critical_points: usize,
    pub has_minimum_and_maximum: bool,
    pub euler_characteristic_ok: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Summarizes positivity, the Morse property and the ΔK separation margin.
pub fn check_admissibility(
    k: &CandidateFunction,
    critical: &Result<Vec<CriticalPoint>>,
) -> AdmissibilityReport {
    let mut notes = Vec::new();
    let (positive, min_sampled_value) = match k.validate_positive(8) {
        Ok(m) => (true, m),
        Err(e) => {
            notes.push(e.to_string());
            (false, f64::NAN)
        }
    };
    let n = k.n();
    let (morse, margin, count, extremes, euler_ok) = match critical {
        Ok(pts) => {
            let margin = pts
                .iter()
                .map(|p| p.laplacian.abs())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
            let extremes =
                pts.iter().any(|p| p.morse_index == 0) && pts.iter().any(|p| p.morse_index == n);
            let chi = if n.is_multiple_of(2) { 2 } else { 0 };
            let euler_ok = euler_sum(pts) == chi;
            if !extremes {
                notes.push("critical set lacks a minimum or a maximum".into());
            }
            if !euler_ok {
                notes.push(format!(
                    "Σ(-1)^m = {} differs from χ(S^{n}) = {chi}",
                    euler_sum(pts)
                ));
            }
            (!pts.is_empty(), margin, pts.len(), extremes, euler_ok)
        }
        Err(e) => {
            notes.push(e.to_string());
            (false, None, 0, false, false)
        }
    };
    AdmissibilityReport {
        positive,
        min_sampled_value,
        morse,
        separation_margin: margin,
        critical_points: count,
        has_minimum_and_maximum: extremes,
        euler_characteristic_ok: euler_ok,
        pass: positive && morse && extremes && euler_ok,
        notes,
    }
}
