//! Energy-strip ladders, spreads of candidate functions, their class
//! partition, the σ-index and the class certificates.

pub mod certify;
pub mod file;
pub mod ladder;

pub use certify::{
    comparison_certify, comparison_certify_tau, min_gap_ratio, theorem1_certify, Certificate,
    CertificateKind, ComparisonInput, Rejection, DEFAULT_TAU_MARGIN,
};
pub use file::{parse_spread, SpreadFile};
pub use ladder::{
    partition, sigma, subset_label, validate_spread, validate_spreading, Check, Class,
    ClassPartition, Spread, SpreadAudit, SpreadMember, SpreadingAudit, StripLadder,
};
