//! GF(2) Morse homology, cell attachment and the topological certificates.

pub mod complex;
pub mod gf2;
pub mod heart;
pub mod scheme;

pub use complex::ChainComplex;
pub use gf2::{rank, BitVec};
pub use heart::{
    heart_labels, theorem2_certify, HeartLabels, Theorem2Certificate, Theorem2Rejection,
};
pub use scheme::{
    deformation_scheme_check, Conclusion, CriticalEvent, FiltrationScenario, Thresholds,
};
