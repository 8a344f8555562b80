use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::func_core::CandidateFunction;
use crate::jet::Jet;
use crate::sphere;

/// A function on Sⁿ known in closed form together with its intrinsic gradient.
pub trait TestFunction: Sync {
    fn value(&self, x: &[f64]) -> f64;
    /// Tangential gradient in ambient coordinates.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// Expression-defined test function; derivatives come from jets.
#[derive(Debug, Clone)]
pub struct ExprFunction(pub Expr);

impl TestFunction for ExprFunction {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        sphere::project_tangent(x, &self.0.eval_jet(x).gradient())
    }
}

impl TestFunction for CandidateFunction {
    fn value(&self, x: &[f64]) -> f64 {
        CandidateFunction::value(self, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        sphere::project_tangent(x, &self.jet(x).gradient())
    }
}

/// `u + h·v`, used for directional finite differences.
pub struct Combination<'a> {
    pub u: &'a dyn TestFunction,
    pub v: &'a dyn TestFunction,
    pub h: f64,
}

impl TestFunction for Combination<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.u.value(x) + self.h * self.v.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let gu = self.u.gradient(x);
        let gv = self.v.gradient(x);
        gu.iter().zip(&gv).map(|(a, b)| a + self.h * b).collect()
    }
}

/// `s·u`.
pub struct Scaled<'a>(pub &'a dyn TestFunction, pub f64);

impl TestFunction for Scaled<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.1 * self.0.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.gradient(x).iter().map(|g| self.1 * g).collect()
    }
}

/// Standard bubble φ_{a,λ}(x) = c·(2λ/((λ²+1) − (λ²−1)⟨a,x⟩))^{(n−2)/2} with
/// c = (n(n−1))^{(n−2)/4}, an exact solution of L φ = φ^{(n+2)/(n−2)}.
#[derive(Debug, Clone, PartialEq)]
pub struct Bubble {
    pub n: usize,
    pub a: Vec<f64>,
    pub lambda: f64,
}

pub fn bubble(a: &[f64], lambda: f64, n: usize) -> Result<Bubble> {
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "bubbles need n ≥ 3".into(),
        });
    }
    if a.len() != n + 1 {
        return Err(Error::Invalid(
            "bubble center has the wrong ambient dimension".into(),
        ));
    }
    if !(lambda >= 1.0) {
        return Err(Error::Invalid(format!(
            "concentration λ = {lambda} must be ≥ 1"
        )));
    }
    Ok(Bubble {
        n,
        a: sphere::normalize(a),
        lambda,
    })
}

impl Bubble {
    pub fn amplitude(&self) -> f64 {
        let n = self.n as f64;
        (n * (n - 1.0)).powf((n - 2.0) / 4.0)
    }

    fn denominator(&self, x: &[f64]) -> f64 {
        let l2 = self.lambda * self.lambda;
        (l2 + 1.0) - (l2 - 1.0) * sphere::dot(&self.a, x)
    }

    /// Laplace–Beltrami of φ, from the ambient extension through jets.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let l2 = self.lambda * self.lambda;
        let mut den = Jet::constant(d, l2 + 1.0);
        for (i, ai) in self.a.iter().enumerate() {
            den = den - Jet::coordinate(x, i).scale((l2 - 1.0) * ai);
        }
        let w = den.recip().scale(2.0 * self.lambda);
        let e = (self.n as f64 - 2.0) / 2.0;
        let wv = w.value;
        let u = w
            .map(
                wv.powf(e),
                e * wv.powf(e - 1.0),
                e * (e - 1.0) * wv.powf(e - 2.0),
            )
            .scale(self.amplitude());
        crate::func_core::candidate::laplacian_from_jet(&u, x)
    }

    /// Pointwise residual |Lφ − φ^{(n+2)/(n−2)}| / φ^{(n+2)/(n−2)}.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let phi = self.value(x);
        let lphi = -sphere::conformal_coefficient(n) * self.laplacian(x)
            + sphere::scalar_curvature(n) * phi;
        let rhs = phi.powf((n as f64 + 2.0) / (n as f64 - 2.0));
        (lphi - rhs).abs() / rhs
    }
}

impl TestFunction for Bubble {
    fn value(&self, x: &[f64]) -> f64 {
        let w = 2.0 * self.lambda / self.denominator(x);
        self.amplitude() * w.powf((self.n as f64 - 2.0) / 2.0)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let l2 = self.lambda * self.lambda;
        let den = self.denominator(x);
        let w = 2.0 * self.lambda / den;
        let e = (self.n as f64 - 2.0) / 2.0;
        // ∇w = 2λ(λ²−1)a/D² in the ambient space.
        let coef =
            self.amplitude() * e * w.powf(e - 1.0) * 2.0 * self.lambda * (l2 - 1.0) / (den * den);
        let amb: Vec<f64> = self.a.iter().map(|ai| coef * ai).collect();
        sphere::project_tangent(x, &amb)
    }
}
