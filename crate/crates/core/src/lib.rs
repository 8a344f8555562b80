//! Morse-theoretic analysis of prescribed scalar curvature on round spheres.
//!
//! Candidate curvature functions are parsed and differentiated exactly
//! ([`func_core`]), bubble energies are evaluated by quadrature
//! ([`variational`]), critical points at infinity are enumerated with their
//! energies and indices ([`infinity`]), families of candidates are sorted into
//! energy-strip classes and certified ([`spread`]), and the supporting GF(2)
//! topology ([`topology`]) and shadow-flow dynamics ([`flow`]) are checked.

// NaN must fail every threshold check, so `!(x < y)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod flow;
pub mod func_core;
pub mod infinity;
pub mod jet;
pub mod sphere;
pub mod spread;
pub mod topology;
pub mod variational;

pub use error::{Error, Result};
pub use func_core::{CandidateFunction, CriticalPoint};
pub use sphere::SphereSpec;
