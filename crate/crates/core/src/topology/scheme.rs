//! The deformation-scheme contradiction for two comparable functionals
//! κ₁J ≤ I ≤ κ₂J.
//!
//! With D = {J ≤ (κ₂/κ₁)k₃}, C = {I ≤ κ₂k₃}, B̲ = {J ≤ k₂}, B̄ = B̲ ∪ U_c and
//! A = {I ≤ κ₁k₂}, a single J-critical point c in (B̲, D] and all others at
//! levels ≤ k₁ with κ₂k₁ < κ₁k₂, the absence of I-critical values in [A, C]
//! would force B̲ ≃ B̄. Attaching the cell of c changes the homology, so I has
//! a critical value in [κ₁k₂, κ₂k₃].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::complex::ChainComplex;
use super::gf2::BitVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEvent {
    pub label: String,
    pub level: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationScenario {
    /// Critical points of J.
    pub events: Vec<CriticalEvent>,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Complex of the sublevel set B̲; discrete on the low events when absent.
    #[serde(default)]
    pub sublevel: Option<ChainComplex>,
    /// Attaching chain of the cell of c; zero when absent.
    #[serde(default)]
    pub attaching: Option<BitVec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub a: f64,
    pub b_lower: f64,
    pub c: f64,
    pub d: f64,
}

impl FiltrationScenario {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            a: self.kappa1 * self.k2,
            b_lower: self.k2,
            c: self.kappa2 * self.k3,
            d: self.kappa2 / self.kappa1 * self.k3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Conclusion {
    /// I has a critical value in `window`.
    CriticalValue {
        window: (f64, f64),
        event: String,
        betti_before: Vec<usize>,
        betti_after: Vec<usize>,
        changed_degree: usize,
        contradicts: Vec<String>,
    },
    NoConclusion {
        reason: String,
    },
}

impl Conclusion {
    pub fn is_conclusive(&self) -> bool {
        matches!(self, Conclusion::CriticalValue { .. })
    }
}

fn pad(mut v: Vec<usize>, len: usize) -> Vec<usize> {
    v.resize(len, 0);
    v
}

pub fn deformation_scheme_check(sc: &FiltrationScenario) -> Result<Conclusion> {
    let finite = [sc.k1, sc.k2, sc.k3, sc.kappa1, sc.kappa2]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
    if !finite {
        return Err(Error::Precondition(
            "levels and constants must be positive".into(),
        ));
    }
    if !(sc.kappa1 <= 1.0 && 1.0 <= sc.kappa2) {
        return Err(Error::Precondition(format!(
            "need κ₁ ≤ 1 ≤ κ₂, got κ₁ = {}, κ₂ = {}",
            sc.kappa1, sc.kappa2
        )));
    }
    if !(sc.k1 < sc.k2 && sc.k2 < sc.k3) {
        return Err(Error::Precondition("need k₁ < k₂ < k₃".into()));
    }
    if !(sc.kappa2 * sc.k1 < sc.kappa1 * sc.k2) {
        return Err(Error::Precondition(format!(
            "κ₂k₁ = {} is not below κ₁k₂ = {}",
            sc.kappa2 * sc.k1,
            sc.kappa1 * sc.k2
        )));
    }
    let th = sc.thresholds();
    let upper: Vec<&CriticalEvent> = sc
        .events
        .iter()
        .filter(|e| th.b_lower < e.level && e.level <= th.d)
        .collect();
    if upper.len() != 1 {
        return Err(Error::Precondition(format!(
            "expected exactly one critical point of J in (B̲, D] = ({}, {}], found {}",
            th.b_lower,
            th.d,
            upper.len()
        )));
    }
    let c = upper[0];
    if c.level > sc.k3 {
        return Err(Error::Precondition(format!(
            "critical level {} of {} exceeds k₃ = {}",
            c.level, c.label, sc.k3
        )));
    }
    if let Some(e) = sc
        .events
        .iter()
        .find(|e| e.label != c.label && e.level > sc.k1)
    {
        return Err(Error::Precondition(format!(
            "critical point {} at level {} lies above k₁ = {}",
            e.label, e.level, sc.k1
        )));
    }
    let below = match &sc.sublevel {
        Some(cc) => cc.clone(),
        None => {
            let top = sc
                .events
                .iter()
                .filter(|e| e.label != c.label)
                .map(|e| e.index)
                .max()
                .unwrap_or(0);
            let mut labels = vec![Vec::new(); top + 1];
            for e in sc.events.iter().filter(|e| e.label != c.label) {
                labels[e.index].push(e.label.clone());
            }
            ChainComplex::discrete(labels)
        }
    };
    below.validate()?;
    let attach_len = if c.index == 0 {
        0
    } else {
        below.rank_in(c.index - 1)
    };
    let chain = sc
        .attaching
        .clone()
        .unwrap_or_else(|| BitVec::zeros(attach_len));
    let above = below.attach_cell(c.index, &c.label, &chain)?;
    let len = above.labels.len().max(below.labels.len());
    let before = pad(below.homology(), len);
    let after = pad(above.homology(), len);
    let changed: Vec<usize> = (0..len).filter(|&k| before[k] != after[k]).collect();
    if changed.len() != 1 || before[changed[0]].abs_diff(after[changed[0]]) != 1 {
        return Ok(Conclusion::NoConclusion {
            reason: format!("Betti numbers {before:?} → {after:?} do not differ in one degree"),
        });
    }
    Ok(Conclusion::CriticalValue {
        window: (th.a, th.c),
        event: c.label.clone(),
        betti_before: before,
        betti_after: after,
        changed_degree: changed[0],
        contradicts: vec![
            "A ≃ B̄ ≃ C ≃ D".into(),
            "O ≃ A ≃ B̲ ≃ C".into(),
            format!("B̄ ≃ B̲ ♯ D^{}", c.index),
        ],
    })
}
