//! Existence certificate for heart-shaped candidates on S³.
//!
//! Labels follow the Morse indices of K⁻¹: x₀ (index 0), x₁ (1), x₂¹, x₂² (2)
//! and two index-3 points. With K⁻¹(x₂¹) ≤ K⁻¹(x₂²) and
//! ΔK(x₂¹) > 0 > ΔK(x₂²), ΔK(x₁), assuming no solution below J(δ_{x₂²}) leaves
//! the sublevel complex {x₀, x₁} with β₁ = 1, while the unstable disc of x₂¹
//! injects a 2-cell bounding x₁ and forces β₁ = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func_core::CriticalPoint;

use super::complex::ChainComplex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeartLabels {
    pub x0: usize,
    pub x1: usize,
    pub x2_1: usize,
    pub x2_2: usize,
    pub x3: [usize; 2],
}

impl HeartLabels {
    /// (catalog index, label) pairs in display order.
    pub fn named(&self) -> Vec<(usize, String)> {
        vec![
            (self.x0, "x0".into()),
            (self.x1, "x1".into()),
            (self.x2_1, "x2_1".into()),
            (self.x2_2, "x2_2".into()),
            (self.x3[0], "x3_1".into()),
            (self.x3[1], "x3_2".into()),
        ]
    }
}

/// Relative tolerance under which K⁻¹ values count as equal.
const TIE: f64 = 1e-12;

/// Identifies the heart labels from a six-point critical set on S³.
pub fn heart_labels(points: &[CriticalPoint]) -> Result<HeartLabels> {
    let n = 3;
    let mut by_index: [Vec<usize>; 4] = Default::default();
    for (i, p) in points.iter().enumerate() {
        if p.morse_index > n {
            return Err(Error::Precondition("Morse index exceeds 3".into()));
        }
        by_index[p.inverse_index(n)].push(i);
    }
    let counts: Vec<usize> = by_index.iter().map(Vec::len).collect();
    if counts != [1, 1, 2, 2] {
        return Err(Error::Precondition(format!(
            "K⁻¹ index multiset must be {{0,1,2,2,3,3}}, got counts {counts:?} for indices 0..3"
        )));
    }
    let inv = |i: usize| 1.0 / points[i].value;
    let (mut a, mut b) = (by_index[2][0], by_index[2][1]);
    if inv(b) < inv(a) {
        std::mem::swap(&mut a, &mut b);
    }
    let tie = (inv(a) - inv(b)).abs() <= TIE * inv(a).abs().max(inv(b).abs());
    // On a tie prefer the labelling with ΔK(x₂¹) > 0 > ΔK(x₂²).
    if tie && points[b].laplacian > 0.0 && points[a].laplacian < 0.0 {
        std::mem::swap(&mut a, &mut b);
    }
    Ok(HeartLabels {
        x0: by_index[0][0],
        x1: by_index[1][0],
        x2_1: a,
        x2_2: b,
        x3: [by_index[3][0], by_index[3][1]],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Certificate {
    pub labels: HeartLabels,
    pub tie: bool,
    pub assumed_betti: Vec<usize>,
    pub injected_betti: Vec<usize>,
    /// c/K(x₂²)^{1/3}.
    pub energy_bound: f64,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Rejection {
    pub violations: Vec<String>,
}

impl std::fmt::Display for Theorem2Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "hypotheses not met: {}", self.violations.join("; "))
    }
}

/// Runs the certificate; `c` is the single-bubble energy constant of S³.
pub fn theorem2_certify(
    points: &[CriticalPoint],
    c: f64,
) -> std::result::Result<Theorem2Certificate, Theorem2Rejection> {
    let labels = heart_labels(points).map_err(|e| Theorem2Rejection {
        violations: vec![e.to_string()],
    })?;
    let p = |i: usize| &points[i];
    let inv = |i: usize| 1.0 / points[i].value;
    let mut violations = Vec::new();
    if inv(labels.x2_1) > inv(labels.x2_2) * (1.0 + TIE) {
        violations.push("(i) K⁻¹(x2_1) ≤ K⁻¹(x2_2) fails".to_string());
    }
    if !(p(labels.x2_1).laplacian > 0.0) {
        violations.push(format!(
            "(ii) ΔK(x2_1) = {} is not positive",
            p(labels.x2_1).laplacian
        ));
    }
    if !(p(labels.x2_2).laplacian < 0.0) {
        violations.push(format!(
            "(ii) ΔK(x2_2) = {} is not negative",
            p(labels.x2_2).laplacian
        ));
    }
    if !(p(labels.x1).laplacian < 0.0) {
        violations.push(format!(
            "(ii) ΔK(x1) = {} is not negative",
            p(labels.x1).laplacian
        ));
    }
    if !violations.is_empty() {
        return Err(Theorem2Rejection { violations });
    }
    let tie = (inv(labels.x2_1) - inv(labels.x2_2)).abs() <= TIE * inv(labels.x2_2);

    // Sublevel set below J(δ_{x2_2}) under the no-solution assumption.
    let assumed = ChainComplex::discrete(vec![vec!["u_x0".into()], vec!["u_x1".into()]]);
    let chain = assumed
        .chain(1, &["u_x1"])
        .expect("generator exists by construction");
    let injected = assumed
        .attach_cell(2, "W_u(x2_1)", &chain)
        .expect("a 1-chain in a complex with zero ∂₁ is a cycle");
    let assumed_betti = assumed.homology();
    let mut injected_betti = injected.homology();
    injected_betti.truncate(assumed_betti.len().max(2));
    let energy_bound = c / p(labels.x2_2).value.powf(1.0 / 3.0);
    Ok(Theorem2Certificate {
        statement: format!(
            "there is a solution of ∂J_K = 0 with J_K ≤ J_K(δ_x2_2) = {energy_bound}"
        ),
        labels,
        tie,
        assumed_betti,
        injected_betti,
        energy_bound,
    })
}
