//! Pure critical points at infinity.
//!
//! Every nonempty subset of C₋(K) = {∇K = 0, ΔK < 0} carries one critical
//! point at infinity with energy c(Σ K(xᵢ)^{−(n−2)/2})^{2/n} and index
//! (q−1) + Σ(n − m(K, xᵢ)). In the single-bubble regime (n = 2, 3) only
//! singletons occur and the index is n − m(K, x) = m(K⁻¹, x).
//! The enumeration is conditional on J_K having no critical points of its own.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func_core::CriticalPoint;

pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    HighDim,
    SingleBubble,
}

impl Mode {
    pub fn for_dimension(n: usize) -> Result<Mode> {
        match n {
            2 | 3 => Ok(Mode::SingleBubble),
            4 => Err(Error::UnsupportedDimension {
                n,
                reason: "n = 4 is the balanced case where ΔK and the mass term enter at the same \
                         order; not supported"
                    .into(),
            }),
            5..=7 => Ok(Mode::HighDim),
            _ => Err(Error::UnsupportedDimension {
                n,
                reason: "catalogs are supported for n ∈ {2, 3, 5, 6, 7}".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCatalog {
    pub n: usize,
    pub mode: Mode,
    pub points: Vec<CriticalPoint>,
    pub labels: Vec<String>,
}

impl CriticalCatalog {
    pub fn new(n: usize, points: Vec<CriticalPoint>) -> Result<Self> {
        let labels = (0..points.len()).map(|i| format!("p{i}")).collect();
        Self::with_labels(n, points, labels)
    }

    pub fn with_labels(n: usize, points: Vec<CriticalPoint>, labels: Vec<String>) -> Result<Self> {
        let mode = Mode::for_dimension(n)?;
        if labels.len() != points.len() {
            return Err(Error::Invalid(
                "one label per critical point is required".into(),
            ));
        }
        for (p, l) in points.iter().zip(&labels) {
            if p.laplacian == 0.0 || !p.laplacian.is_finite() {
                return Err(Error::Degenerate {
                    point: p.location.clone(),
                    reason: format!("ΔK = 0 at {l}"),
                });
            }
            if !(p.value > 0.0) {
                return Err(Error::NonPositive {
                    value: p.value,
                    point: p.location.clone(),
                });
            }
            if p.morse_index > n {
                return Err(Error::Invalid(format!(
                    "Morse index of {l} exceeds n = {n}"
                )));
            }
        }
        Ok(CriticalCatalog {
            n,
            mode,
            points,
            labels,
        })
    }
}

/// Indices of the points with ΔK < 0, in catalog order.
pub fn negative_set(catalog: &CriticalCatalog) -> Vec<usize> {
    (0..catalog.points.len())
        .filter(|&i| catalog.points[i].laplacian < 0.0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpi {
    /// Bit j refers to the j-th element of C₋(K).
    pub mask: u64,
    /// Catalog indices of the members.
    pub members: Vec<usize>,
    pub energy: f64,
    pub index: usize,
}

impl Cpi {
    pub fn parity(&self) -> i64 {
        if self.index.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// c(Σ K(xᵢ)^{−(n−2)/2})^{2/n}.
pub fn subset_energy(n: usize, c: f64, values: impl IntoIterator<Item = f64>) -> f64 {
    let nf = n as f64;
    let s: f64 = values.into_iter().map(|k| k.powf(-(nf - 2.0) / 2.0)).sum();
    c * s.powf(2.0 / nf)
}

fn cpi_for_mask(catalog: &CriticalCatalog, neg: &[usize], mask: u64, c: f64) -> Cpi {
    let members: Vec<usize> = (0..neg.len())
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| neg[j])
        .collect();
    let n = catalog.n;
    let energy = subset_energy(n, c, members.iter().map(|&i| catalog.points[i].value));
    let index = members.len() - 1
        + members
            .iter()
            .map(|&i| n - catalog.points[i].morse_index)
            .sum::<usize>();
    Cpi {
        mask,
        members,
        energy,
        index,
    }
}

/// All pure critical points at infinity, ascending by energy (ties by mask).
pub fn enumerate_cpi(catalog: &CriticalCatalog, c: f64) -> Result<Vec<Cpi>> {
    let neg = negative_set(catalog);
    let mut out: Vec<Cpi> = match catalog.mode {
        Mode::SingleBubble => (0..neg.len())
            .map(|j| cpi_for_mask(catalog, &neg, 1 << j, c))
            .collect(),
        Mode::HighDim => {
            if neg.len() > ENUMERATION_CAP {
                return Err(Error::CapExceeded {
                    size: neg.len(),
                    cap: ENUMERATION_CAP,
                });
            }
            (1u64..(1u64 << neg.len()))
                .into_par_iter()
                .map(|mask| cpi_for_mask(catalog, &neg, mask, c))
                .collect()
        }
    };
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.mask.cmp(&b.mask)));
    Ok(out)
}

/// μ(K): energy of the full-C₋ critical point at infinity (the largest
/// singleton energy in single-bubble mode).
pub fn mu_max(catalog: &CriticalCatalog, c: f64) -> Result<f64> {
    let neg = negative_set(catalog);
    if neg.is_empty() {
        return Err(Error::Precondition("C₋(K) is empty".into()));
    }
    let n = catalog.n;
    Ok(match catalog.mode {
        Mode::HighDim => subset_energy(n, c, neg.iter().map(|&i| catalog.points[i].value)),
        Mode::SingleBubble => neg
            .iter()
            .map(|&i| subset_energy(n, c, [catalog.points[i].value]))
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

fn sign(e: usize) -> i64 {
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Σ over critical points at infinity of (−1)^{index}, in closed form.
/// High-dimensional: 1 − Π(1 − sᵢ) with sᵢ = (−1)^{n−mᵢ}.
pub fn index_count(catalog: &CriticalCatalog) -> i64 {
    let n = catalog.n;
    let neg = negative_set(catalog);
    match catalog.mode {
        Mode::SingleBubble => neg
            .iter()
            .map(|&i| sign(n - catalog.points[i].morse_index))
            .sum(),
        Mode::HighDim => {
            1 - neg
                .iter()
                .map(|&i| 1 - sign(n - catalog.points[i].morse_index))
                .product::<i64>()
        }
    }
}

/// The same count by explicit enumeration of all subsets.
pub fn index_count_enumerated(catalog: &CriticalCatalog) -> Result<i64> {
    Ok(enumerate_cpi(catalog, 1.0)?.iter().map(Cpi::parity).sum())
}

/// Laplacian sign constraint for one critical point of a sign structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSlot {
    pub label: String,
    /// Morse index of K.
    pub morse_index: usize,
    /// Some(true): forced into C₋; Some(false): forced out; None: free.
    pub forced: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignStructure {
    pub n: usize,
    pub slots: Vec<SignSlot>,
}

impl SignStructure {
    /// Extrema are forced (maxima of K in C₋, minima out); other points free.
    pub fn from_indices(n: usize, slots: &[(&str, usize)]) -> Self {
        SignStructure {
            n,
            slots: slots
                .iter()
                .map(|(l, m)| SignSlot {
                    label: l.to_string(),
                    morse_index: *m,
                    forced: None,
                })
                .collect(),
        }
    }

    fn forced_at(&self, i: usize) -> Option<bool> {
        let s = &self.slots[i];
        if s.morse_index == self.n {
            Some(true)
        } else if s.morse_index == 0 {
            Some(false)
        } else {
            s.forced
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAssignment {
    /// Slot indices placed in C₋.
    pub negative: Vec<usize>,
    pub labels: Vec<String>,
    pub count: i64,
}

/// Every admissible C₋ assignment with its index count; the non-existence
/// candidates are those with count 1.
pub fn sign_assignments(structure: &SignStructure) -> Result<Vec<SignAssignment>> {
    let n = structure.n;
    let mode = Mode::for_dimension(n)?;
    let free: Vec<usize> = (0..structure.slots.len())
        .filter(|&i| structure.forced_at(i).is_none())
        .collect();
    if free.len() > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: free.len(),
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << free.len()) {
        let negative: Vec<usize> = (0..structure.slots.len())
            .filter(|&i| match structure.forced_at(i) {
                Some(f) => f,
                None => {
                    let j = free.iter().position(|&k| k == i).unwrap();
                    mask >> j & 1 == 1
                }
            })
            .collect();
        if negative.is_empty() {
            continue;
        }
        let signs: Vec<i64> = negative
            .iter()
            .map(|&i| sign(n - structure.slots[i].morse_index))
            .collect();
        let count = match mode {
            Mode::SingleBubble => signs.iter().sum(),
            Mode::HighDim => 1 - signs.iter().map(|s| 1 - s).product::<i64>(),
        };
        out.push(SignAssignment {
            labels: negative
                .iter()
                .map(|&i| structure.slots[i].label.clone())
                .collect(),
            negative,
            count,
        });
    }
    Ok(out)
}

/// Assignments whose index count equals χ of a contractible space, i.e. 1.
pub fn nonexistence_candidates(structure: &SignStructure) -> Result<Vec<SignAssignment>> {
    Ok(sign_assignments(structure)?
        .into_iter()
        .filter(|a| a.count == 1)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(value: f64, m: usize, lap: f64) -> CriticalPoint {
        CriticalPoint::synthetic(5, value, m, lap)
    }

    #[test]
    fn seven_subsets_for_three_points() {
        let cat = CriticalCatalog::new(
            5,
            vec![
                pt(1.0, 5, -1.0),
                pt(2.0, 3, -1.0),
                pt(1.5, 4, -2.0),
                pt(0.5, 0, 1.0),
            ],
        )
        .unwrap();
        let cpis = enumerate_cpi(&cat, 1.0).unwrap();
        assert_eq!(cpis.len(), 7);
        assert!(cpis.windows(2).all(|w| w[0].energy <= w[1].energy));
        assert_eq!(index_count(&cat), 1);
        assert_eq!(index_count_enumerated(&cat).unwrap(), 1);
    }

    #[test]
    fn equal_pair_energy() {
        let cat = CriticalCatalog::new(6, vec![pt(2.0, 6, -1.0), pt(2.0, 6, -1.0)]).unwrap();
        let mu = mu_max(&cat, 3.0).unwrap();
        let want = 2f64.powf(2.0 / 6.0) * 3.0 / 2f64.powf(4.0 / 6.0);
        assert!((mu - want).abs() < 1e-14);
    }

    #[test]
    fn n4_is_rejected() {
        assert!(Mode::for_dimension(4).is_err());
    }

    #[test]
    fn heart_structure_candidates() {
        let s = SignStructure::from_indices(
            3,
            &[
                ("x0", 3),
                ("x1", 2),
                ("x2_1", 1),
                ("x2_2", 1),
                ("x3_1", 0),
                ("x3_2", 0),
            ],
        );
        assert_eq!(sign_assignments(&s).unwrap().len(), 8);
        let c: Vec<Vec<String>> = nonexistence_candidates(&s)
            .unwrap()
            .into_iter()
            .map(|a| a.labels)
            .collect();
        assert_eq!(c.len(), 3);
        assert!(c.contains(&vec!["x0".to_string()]));
        assert!(c.contains(&vec!["x0".into(), "x1".into(), "x2_1".into()]));
        assert!(c.contains(&vec!["x0".into(), "x1".into(), "x2_2".into()]));
    }
}
