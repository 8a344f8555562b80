use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infinity::{subset_energy, ENUMERATION_CAP};

/// Interleaved strips 0 < k̲₁ ≤ k̄₁ < k̲₂ ≤ k̄₂ < …, indexed from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripLadder {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl StripLadder {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Invalid(
                "ladder needs matching, nonempty lower and upper sequences".into(),
            ));
        }
        if !(lower[0] > 0.0) {
            return Err(Error::Invalid("ladder must start above 0".into()));
        }
        for i in 0..lower.len() {
            if !(lower[i] <= upper[i]) {
                return Err(Error::Invalid(format!(
                    "strip {}: lower {} exceeds upper {}",
                    i + 1,
                    lower[i],
                    upper[i]
                )));
            }
            if i > 0 && !(upper[i - 1] < lower[i]) {
                return Err(Error::Invalid(format!(
                    "strips {} and {} are not strictly interleaved",
                    i,
                    i + 1
                )));
            }
        }
        Ok(StripLadder { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// k̲ᵢ, 1-based.
    pub fn lower(&self, i: usize) -> f64 {
        self.lower[i - 1]
    }

    /// k̄ᵢ, 1-based.
    pub fn upper(&self, i: usize) -> f64 {
        self.upper[i - 1]
    }

    pub fn lowers(&self) -> &[f64] {
        &self.lower
    }

    pub fn uppers(&self) -> &[f64] {
        &self.upper
    }

    /// 1-based index of the strip containing `e`.
    pub fn strip_of(&self, e: f64) -> Option<usize> {
        let i = self.lower.partition_point(|&l| l <= e);
        (i > 0 && e <= self.upper[i - 1]).then_some(i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadMember {
    pub label: String,
    /// K(x_j) at the m distinguished non-minimal critical points.
    pub values: Vec<f64>,
    /// ΔK(x_j) at the same points.
    pub laplacian: Vec<f64>,
    /// Whether {∂J_K = 0} ∩ {J_K ≤ L} is known to be nonempty.
    pub solvable: Option<bool>,
    /// Values of K on a sample set shared by all members, used for pinching.
    /// Falls back to `values` when empty.
    #[serde(default)]
    pub samples: Vec<f64>,
}

impl SpreadMember {
    /// Bitmask of the distinguished points with ΔK < 0.
    pub fn signature(&self) -> u64 {
        self.laplacian
            .iter()
            .enumerate()
            .filter(|(_, l)| **l < 0.0)
            .fold(0, |m, (j, _)| m | 1 << j)
    }

    pub fn sample_values(&self) -> &[f64] {
        if self.samples.is_empty() {
            &self.values
        } else {
            &self.samples
        }
    }

    pub fn subset_energy(&self, n: usize, c: f64, mask: u64) -> f64 {
        subset_energy(
            n,
            c,
            self.values
                .iter()
                .enumerate()
                .filter(|(j, _)| mask >> j & 1 == 1)
                .map(|(_, v)| *v),
        )
    }

    /// μ(K): energy of the subset given by the signature.
    pub fn mu(&self, n: usize, c: f64) -> f64 {
        self.subset_energy(n, c, self.signature())
    }
}

/// A family of candidates sharing one strip ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub n: usize,
    /// Constant c in the energy c(Σ K^{−(n−2)/2})^{2/n}.
    pub energy_constant: f64,
    pub ladder: StripLadder,
    /// Strip index i_j of each distinguished point, 1-based and increasing.
    pub fixed_indices: Vec<usize>,
    pub members: Vec<SpreadMember>,
}

/// Renders a bitmask as a 1-based subset `{1,3}`.
pub fn subset_label(mask: u64) -> String {
    let items: Vec<String> = (0..64)
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| (j + 1).to_string())
        .collect();
    format!("{{{}}}", items.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadingAudit {
    pub label: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// First subset whose energy misses every strip or its assigned strip.
    pub first_violation: Option<String>,
    /// Strip index of every nonempty subset (indexed by mask), when found.
    pub strips: Vec<Option<usize>>,
}

/// Conditions (i)-(iv) for one member.
pub fn validate_spreading(
    member: &SpreadMember,
    ladder: &StripLadder,
    fixed_indices: &[usize],
    n: usize,
    c: f64,
) -> SpreadingAudit {
    let m = fixed_indices.len();
    let mut checks = Vec::new();
    let mut first_violation = None;

    let zero_lap: Vec<usize> = member
        .laplacian
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == 0.0 || !l.is_finite())
        .map(|(j, _)| j + 1)
        .collect();
    checks.push(Check {
        name: "(i) ΔK ≠ 0 at critical points".into(),
        pass: zero_lap.is_empty(),
        detail: if zero_lap.is_empty() {
            "ok".into()
        } else {
            format!("ΔK = 0 at points {zero_lap:?}")
        },
    });

    let count_ok = member.values.len() == m && member.laplacian.len() == m && m <= ENUMERATION_CAP;
    checks.push(Check {
        name: "(ii) number of non-minimal critical points".into(),
        pass: count_ok,
        detail: format!(
            "{} values, {} Laplacians, m = {m}",
            member.values.len(),
            member.laplacian.len()
        ),
    });
    if !count_ok {
        return SpreadingAudit {
            label: member.label.clone(),
            pass: false,
            checks,
            first_violation: None,
            strips: Vec::new(),
        };
    }

    let mut single_ok = true;
    let mut single_detail = String::from("ok");
    for (j, &i) in fixed_indices.iter().enumerate() {
        let e = member.subset_energy(n, c, 1 << j);
        let inside = i >= 1 && i <= ladder.len() && ladder.lower(i) <= e && e <= ladder.upper(i);
        if !inside && single_ok {
            single_ok = false;
            single_detail = format!("point {}: energy {e} not in strip {i}", j + 1);
            first_violation.get_or_insert(subset_label(1 << j));
        }
    }
    checks.push(Check {
        name: "(iii) singleton energies in their fixed strips".into(),
        pass: single_ok,
        detail: single_detail,
    });

    let mut strips = vec![None; 1usize << m];
    let mut multi_ok = true;
    let mut multi_detail = String::from("ok");
    for mask in 1u64..(1u64 << m) {
        let e = member.subset_energy(n, c, mask);
        let s = ladder.strip_of(e);
        strips[mask as usize] = s;
        if s.is_none() && multi_ok {
            multi_ok = false;
            multi_detail = format!(
                "subset {} has energy {e} outside every strip",
                subset_label(mask)
            );
            first_violation.get_or_insert(subset_label(mask));
        }
    }
    checks.push(Check {
        name: "(iv) every subset energy inside a strip".into(),
        pass: multi_ok,
        detail: multi_detail,
    });

    SpreadingAudit {
        label: member.label.clone(),
        pass: checks.iter().all(|c| c.pass),
        checks,
        first_violation,
        strips,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadAudit {
    pub pass: bool,
    pub members: Vec<SpreadingAudit>,
    /// Member-independent strip of every nonempty subset (by mask), if consistent.
    pub strip_map: Vec<Option<usize>>,
    pub injective: bool,
    pub violations: Vec<String>,
}

/// Condition (v): the subset → strip map is the same for all members. Also
/// requires the map to be injective, which separates classes by strip.
pub fn validate_spread(spread: &Spread) -> SpreadAudit {
    let audits: Vec<SpreadingAudit> = spread
        .members
        .iter()
        .map(|m| {
            validate_spreading(
                m,
                &spread.ladder,
                &spread.fixed_indices,
                spread.n,
                spread.energy_constant,
            )
        })
        .collect();
    let mut violations = Vec::new();
    for a in audits.iter().filter(|a| !a.pass) {
        violations.push(format!(
            "member {} is not spreading (first violation {})",
            a.label,
            a.first_violation.clone().unwrap_or_else(|| "-".into())
        ));
    }
    let m = spread.fixed_indices.len();
    let mut strip_map = vec![None; 1usize << m.min(ENUMERATION_CAP)];
    let mut consistent = violations.is_empty() && !audits.is_empty();
    if consistent {
        strip_map = audits[0].strips.clone();
        'outer: for (mask, want) in strip_map.iter().enumerate().skip(1) {
            for a in &audits[1..] {
                if a.strips[mask] != *want {
                    violations.push(format!(
                        "subset {} lies in strip {:?} for {} but {:?} for {}",
                        subset_label(mask as u64),
                        want,
                        audits[0].label,
                        a.strips[mask],
                        a.label
                    ));
                    consistent = false;
                    break 'outer;
                }
            }
        }
    }
    let mut injective = consistent;
    if consistent {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (mask, s) in strip_map.iter().enumerate().skip(1) {
            if let Some(s) = s {
                if let Some(prev) = seen.insert(*s, mask) {
                    violations.push(format!(
                        "subsets {} and {} share strip {s}",
                        subset_label(prev as u64),
                        subset_label(mask as u64)
                    ));
                    injective = false;
                    break;
                }
            }
        }
    }
    SpreadAudit {
        pass: consistent && injective,
        members: audits,
        strip_map: if consistent { strip_map } else { Vec::new() },
        injective,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Class {
    pub signature: u64,
    /// Indices into `Spread::members`.
    pub members: Vec<usize>,
    /// Strip i(K̃) containing μ of every member.
    pub strip: usize,
}

/// Members grouped by signature, ordered by the strip of μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPartition {
    pub classes: Vec<Class>,
}

impl ClassPartition {
    pub fn strips(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.strip).collect()
    }

    pub fn class_of_member(&self, member: usize) -> Option<&Class> {
        self.classes.iter().find(|c| c.members.contains(&member))
    }
}

/// Quotient by signature, with both directions of the equivalence
/// "equal signature ⟺ μ in a common strip" verified on the data.
pub fn partition(spread: &Spread) -> Result<ClassPartition> {
    let audit = validate_spread(spread);
    if !audit.pass {
        return Err(Error::Precondition(format!(
            "spread is not valid: {}",
            audit.violations.join("; ")
        )));
    }
    let n = spread.n;
    let c = spread.energy_constant;
    let mut strips = Vec::with_capacity(spread.members.len());
    for m in &spread.members {
        let sig = m.signature();
        if sig == 0 {
            return Err(Error::Precondition(format!(
                "member {} has empty signature; C₋ must be nonempty",
                m.label
            )));
        }
        let s = spread.ladder.strip_of(m.mu(n, c)).ok_or_else(|| {
            Error::Precondition(format!("μ of {} lies outside every strip", m.label))
        })?;
        strips.push((sig, s));
    }
    for i in 0..strips.len() {
        for j in i + 1..strips.len() {
            let same_sig = strips[i].0 == strips[j].0;
            let same_strip = strips[i].1 == strips[j].1;
            if same_sig != same_strip {
                return Err(Error::Precondition(format!(
                    "signature/strip equivalence fails for members {} and {}",
                    spread.members[i].label, spread.members[j].label
                )));
            }
        }
    }
    let mut by_sig: BTreeMap<u64, Class> = BTreeMap::new();
    for (i, (sig, s)) in strips.iter().enumerate() {
        by_sig
            .entry(*sig)
            .or_insert_with(|| Class {
                signature: *sig,
                members: Vec::new(),
                strip: *s,
            })
            .members
            .push(i);
    }
    let mut classes: Vec<Class> = by_sig.into_values().collect();
    classes.sort_by_key(|c| c.strip);
    Ok(ClassPartition { classes })
}

/// σ: the largest class strip containing a member not known to be solvable
/// below the energy cap, or 0 when every member is solvable.
pub fn sigma(partition: &ClassPartition, members: &[SpreadMember]) -> usize {
    partition
        .classes
        .iter()
        .filter(|c| c.members.iter().any(|&i| members[i].solvable != Some(true)))
        .map(|c| c.strip)
        .max()
        .unwrap_or(0)
}
