//! The functionals J_K and J_{K,τ}, bubbles and quadrature on Sⁿ.

pub mod bubble;
pub mod energy;
pub mod expansion;
pub mod quadrature;

pub use bubble::{bubble, Bubble, Combination, Constant, ExprFunction, Scaled, TestFunction};
pub use energy::{energy_constant, energy_jk, energy_jk_subcritical, gradient_jk, Integrals};
pub use expansion::{
    bubble_energy, energy_constant_numeric, expansion_sign_check, fit_through_origin, BubbleEnergy,
    ExpansionReport,
};
pub use quadrature::{build_quadrature, concentrated_rule, product_rule, QuadratureRule};
