//! Certificates for the "at most one unsolvable class" statement and the
//! comparison argument that produces a solution with bounded energy.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ladder::{sigma, ClassPartition, Spread, SpreadMember, StripLadder};

/// Default slack used for the subcritical comparison constants.
pub const DEFAULT_TAU_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    Theorem1,
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Energy cap L of the statement.
    pub energy_bound: f64,
    /// Strip index of the only class that may lack a solution below L.
    pub exempt_class: Option<usize>,
    /// Existence window for the comparison certificate.
    pub window: Option<(f64, f64)>,
    pub audit: Vec<String>,
}

/// A failed hypothesis, naming the violated inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rejection {
    Input(String),
    Gap {
        lower_strip: usize,
        upper_strip: usize,
        lhs: f64,
        rhs: f64,
    },
    Pinching {
        first: String,
        second: String,
        sample: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    Bound {
        bound: f64,
        cap: f64,
    },
}

impl Rejection {
    pub fn condition(&self) -> &'static str {
        match self {
            Rejection::Input(_) => "input",
            Rejection::Gap { .. } => "gap",
            Rejection::Pinching { .. } => "pinching",
            Rejection::Bound { .. } => "bound",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Input(s) => write!(f, "invalid input: {s}"),
            Rejection::Gap {
                lower_strip,
                upper_strip,
                lhs,
                rhs,
            } => write!(
                f,
                "gap condition fails between strips {lower_strip} and {upper_strip}: {lhs} ≥ {rhs}"
            ),
            Rejection::Pinching {
                first,
                second,
                sample,
                value,
                lo,
                hi,
            } => write!(
                f,
                "pinching fails for ({first}, {second}) at sample {sample}: {value} ∉ ({lo}, {hi})"
            ),
            Rejection::Bound { bound, cap } => {
                write!(f, "energy bound {bound} exceeds the cap {cap}")
            }
        }
    }
}

impl std::error::Error for Rejection {}

fn pinching_exponent(n: usize) -> f64 {
    n as f64 / (n as f64 - 2.0)
}

/// Checks lo_factor·K₁ < K₂ < hi_factor·K₁ at every shared sample.
fn check_pinching(
    first: &SpreadMember,
    second: &SpreadMember,
    lo_factor: f64,
    hi_factor: f64,
) -> Result<f64, Rejection> {
    let a = first.sample_values();
    let b = second.sample_values();
    if a.len() != b.len() || a.is_empty() {
        return Err(Rejection::Input(format!(
            "members {} and {} do not share a sample set",
            first.label, second.label
        )));
    }
    let mut margin = f64::INFINITY;
    for (s, (k1, k2)) in a.iter().zip(b).enumerate() {
        let lo = k1 * lo_factor;
        let hi = k1 * hi_factor;
        if !(lo < *k2 && *k2 < hi) {
            return Err(Rejection::Pinching {
                first: first.label.clone(),
                second: second.label.clone(),
                sample: s,
                value: *k2,
                lo,
                hi,
            });
        }
        margin = margin.min((k2 - lo).min(hi - k2) / k1);
    }
    Ok(margin)
}

/// Smallest k̲ᵢ/k̄ᵢ' over consecutive occupied strips i' < i.
pub fn min_gap_ratio(ladder: &StripLadder, strips: &[usize]) -> Option<(usize, usize, f64)> {
    let mut s: Vec<usize> = strips.to_vec();
    s.sort_unstable();
    s.dedup();
    s.windows(2)
        .map(|w| (w[0], w[1], ladder.lower(w[1]) / ladder.upper(w[0])))
        .min_by(|a, b| a.2.total_cmp(&b.2))
}

/// Verifies the gap and pinching hypotheses for κ̲ < 1 < κ̄ and issues the
/// "at most one class without a solution below L" certificate.
pub fn theorem1_certify(
    spread: &Spread,
    partition: &ClassPartition,
    kappa_lo: f64,
    kappa_hi: f64,
) -> Result<Certificate, Rejection> {
    if !(0.0 < kappa_lo && kappa_lo < 1.0 && 1.0 < kappa_hi) {
        return Err(Rejection::Input(format!(
            "need 0 < κ̲ < 1 < κ̄, got κ̲ = {kappa_lo}, κ̄ = {kappa_hi}"
        )));
    }
    let ladder = &spread.ladder;
    let strips = partition.strips();
    if strips.is_empty() {
        return Err(Rejection::Input("the partition has no classes".into()));
    }
    let mut audit = Vec::new();
    let ratio = kappa_hi / kappa_lo;
    match min_gap_ratio(ladder, &strips) {
        Some((lo, hi, g)) => {
            if !(ratio < g) {
                return Err(Rejection::Gap {
                    lower_strip: lo,
                    upper_strip: hi,
                    lhs: ratio,
                    rhs: g,
                });
            }
            audit.push(format!(
                "gap: κ̄/κ̲ = {ratio} < min k̲_i/k̄_(i-1) = {g} (strips {lo} → {hi})"
            ));
        }
        None => audit.push("gap: single class, condition is vacuous".into()),
    }
    let p = pinching_exponent(spread.n);
    let lo_factor = kappa_hi.powf(-p);
    let hi_factor = kappa_lo.powf(-p);
    let members = &spread.members;
    let pairs: Vec<(usize, usize)> = (0..members.len())
        .flat_map(|i| {
            (0..members.len())
                .filter(move |&j| j != i)
                .map(move |j| (i, j))
        })
        .collect();
    let margins: Vec<Result<f64, Rejection>> = pairs
        .par_iter()
        .map(|&(i, j)| check_pinching(&members[i], &members[j], lo_factor, hi_factor))
        .collect();
    let mut margin = f64::INFINITY;
    for m in margins {
        margin = margin.min(m?);
    }
    audit.push(format!(
        "pinching: K₁/κ̄^{p:.4} < K₂ < K₁/κ̲^{p:.4} on {} ordered pairs, relative margin {margin}",
        pairs.len()
    ));
    let top = strips.iter().map(|&s| ladder.upper(s)).fold(0.0, f64::max);
    let bound = ratio * top;
    audit.push(format!("L = (κ̄/κ̲)·max k̄ = {bound}"));
    let exempt = if members.iter().all(|m| m.solvable.is_some()) {
        let s = sigma(partition, members);
        audit.push(format!("σ = {s} from solvability flags"));
        (s > 0).then_some(s)
    } else {
        None
    };
    Ok(Certificate {
        kind: CertificateKind::Theorem1,
        energy_bound: bound,
        exempt_class: exempt,
        window: None,
        audit,
    })
}

/// Comparison between a member `upper` of class σ and a member `lower` of a
/// class σ̲ < σ, with constants κ_{σ−1} < 1 < κ_σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonInput {
    pub sigma: usize,
    pub sigma_lower: usize,
    pub kappa_prev: f64,
    pub kappa: f64,
    /// Cap on (κ_σ/κ_{σ−1})·k̄_σ, typically L from the class certificate.
    pub cap: Option<f64>,
}

/// Conditions (i) pinching, (ii) gap and (iii) bound; on success the lower
/// member has a solution with energy in [κ_{σ−1}k̲_σ, κ_σk̄_σ], provided the
/// upper member has none below (κ_σ/κ_{σ−1})k̄_σ.
pub fn comparison_certify(
    upper: &SpreadMember,
    lower: &SpreadMember,
    ladder: &StripLadder,
    n: usize,
    input: &ComparisonInput,
) -> Result<Certificate, Rejection> {
    let ComparisonInput {
        sigma,
        sigma_lower,
        kappa_prev,
        kappa,
        cap,
    } = *input;
    if !(0.0 < kappa_prev && kappa_prev < 1.0 && 1.0 < kappa) {
        return Err(Rejection::Input(format!(
            "need 0 < κ_(σ-1) < 1 < κ_σ, got {kappa_prev}, {kappa}"
        )));
    }
    if !(sigma >= 2 && sigma <= ladder.len() && sigma_lower >= 1 && sigma_lower < sigma) {
        return Err(Rejection::Input(format!(
            "strip indices must satisfy 1 ≤ σ̲ < σ ≤ {}, got σ̲ = {sigma_lower}, σ = {sigma}",
            ladder.len()
        )));
    }
    if upper.signature() == lower.signature() {
        return Err(Rejection::Input(format!(
            "{} and {} have the same signature and lie in one class",
            upper.label, lower.label
        )));
    }
    let p = pinching_exponent(n);
    let mut audit = Vec::new();
    let margin = check_pinching(upper, lower, kappa.powf(-p), kappa_prev.powf(-p))?;
    audit.push(format!(
        "(i) pinching: K_σ/κ_σ^{p:.4} < K_σ̲ < K_σ/κ_(σ-1)^{p:.4}, relative margin {margin}"
    ));
    let lhs = kappa * ladder.upper(sigma - 1);
    let rhs = kappa_prev * ladder.lower(sigma);
    if !(lhs < rhs) {
        return Err(Rejection::Gap {
            lower_strip: sigma - 1,
            upper_strip: sigma,
            lhs,
            rhs,
        });
    }
    audit.push(format!(
        "(ii) gap: κ_σ·k̄_(σ-1) = {lhs} < κ_(σ-1)·k̲_σ = {rhs}"
    ));
    let bound = kappa / kappa_prev * ladder.upper(sigma);
    if let Some(cap) = cap {
        if !(bound <= cap) {
            return Err(Rejection::Bound { bound, cap });
        }
        audit.push(format!("(iii) bound: (κ_σ/κ_(σ-1))·k̄_σ = {bound} ≤ {cap}"));
    } else {
        audit.push(format!(
            "(iii) bound: (κ_σ/κ_(σ-1))·k̄_σ = {bound} (no cap given)"
        ));
    }
    let window = (
        kappa_prev * ladder.lower(sigma),
        kappa * ladder.upper(sigma),
    );
    audit.push(format!(
        "conditional on {} having no solution with J ≤ {bound}, {} has a solution with energy in [{}, {}]",
        upper.label, lower.label, window.0, window.1
    ));
    Ok(Certificate {
        kind: CertificateKind::Comparison,
        energy_bound: bound,
        exempt_class: Some(sigma),
        window: Some(window),
        audit,
    })
}

/// The same certifier with the comparison constants widened by `margin`,
/// modelling the subcritical constants κ_{τ,·} for small τ.
pub fn comparison_certify_tau(
    upper: &SpreadMember,
    lower: &SpreadMember,
    ladder: &StripLadder,
    n: usize,
    input: &ComparisonInput,
    margin: f64,
) -> Result<Certificate, Rejection> {
    let slack = ComparisonInput {
        kappa_prev: input.kappa_prev * (1.0 - margin),
        kappa: input.kappa * (1.0 + margin),
        ..*input
    };
    comparison_certify(upper, lower, ladder, n, &slack)
}
