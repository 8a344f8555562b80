//! Candidate functions on Sⁿ: parsing, exact derivatives, critical points and
//! Laplacian surgery.

pub mod candidate;
pub mod critical;
pub mod surgery;

pub use candidate::{
    hessian_eigen, parse_candidate, parse_candidate_file, Body, CandidateFunction,
};
pub use critical::{
    check_admissibility, classify, euler_sum, find_critical_points, local_seeds, search,
    search_from, seed_points, AdmissibilityReport, CriticalPoint, CriticalSearch, SearchTolerances,
};
pub use surgery::{laplacian_surgery, shifted_coefficients, surgery_basis, SurgeryPatch};
