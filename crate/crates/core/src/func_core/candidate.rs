use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jet::Jet;
use crate::sphere::{self, SphereSpec};
use crate::variational::quadrature;

use super::surgery::SurgeryPatch;

#[derive(Debug, Clone)]
pub enum Body {
    Expression {
        text: String,
        expr: Expr,
    },
    Patched {
        base: Box<CandidateFunction>,
        patches: Vec<SurgeryPatch>,
    },
}

/// A positive function K on the round sphere.
#[derive(Debug, Clone)]
pub struct CandidateFunction {
    pub spec: SphereSpec,
    pub body: Body,
}

impl fmt::Display for CandidateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Body::Expression { text, .. } => write!(f, "{}", text.trim()),
            Body::Patched { base, patches } => {
                write!(f, "{base} [+{} surgery patch(es)]", patches.len())
            }
        }
    }
}

/// Parses `text` as a candidate on `spec` and checks positivity on a sample grid.
pub fn parse_candidate(text: &str, spec: SphereSpec) -> Result<CandidateFunction> {
    let expr = expr::parse(text)?;
    if let Some(i) = expr.max_coordinate() {
        if i + 1 > spec.ambient() {
            return Err(Error::CoordinateOutOfRange {
                index: i + 1,
                n: spec.n,
            });
        }
    }
    let k = CandidateFunction {
        spec,
        body: Body::Expression {
            text: text.to_string(),
            expr,
        },
    };
    k.validate_positive(4)?;
    Ok(k)
}

/// Parses a corpus file: a `dim=<n>` header line, then one expression which
/// may span several lines. `#` starts a comment.
pub fn parse_candidate_file(text: &str) -> Result<CandidateFunction> {
    let mut dim: Option<SphereSpec> = None;
    let mut body = String::new();
    let mut first_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| Error::AtLine {
            line: i + 1,
            source: Box::new(e),
        };
        match dim {
            None => {
                let value = line
                    .strip_prefix("dim")
                    .map(str::trim_start)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| at(Error::Invalid("expected header 'dim=<n>'".into())))?;
                let n: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| at(Error::Invalid(format!("bad dimension '{}'", value.trim()))))?;
                dim = Some(SphereSpec::new(n).map_err(at)?);
            }
            Some(_) => {
                if body.is_empty() {
                    first_line = i + 1;
                } else {
                    body.push(' ');
                }
                body.push_str(line);
            }
        }
    }
    let spec = dim.ok_or_else(|| Error::Invalid("missing header 'dim=<n>'".into()))?;
    if body.is_empty() {
        return Err(Error::Invalid("candidate file has no expression".into()));
    }
    parse_candidate(&body, spec).map_err(|e| match e {
        Error::Syntax { .. } | Error::CoordinateOutOfRange { .. } => Error::AtLine {
            line: first_line,
            source: Box::new(e),
        },
        other => other,
    })
}

impl CandidateFunction {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn is_patched(&self) -> bool {
        matches!(self.body, Body::Patched { .. })
    }

    pub fn patches(&self) -> &[SurgeryPatch] {
        match &self.body {
            Body::Expression { .. } => &[],
            Body::Patched { patches, .. } => patches,
        }
    }

    /// The unpatched expression underlying this candidate.
    pub fn root(&self) -> &CandidateFunction {
        match &self.body {
            Body::Expression { .. } => self,
            Body::Patched { base, .. } => base.root(),
        }
    }

    pub fn with_patch(&self, patch: SurgeryPatch) -> CandidateFunction {
        let (base, mut patches) = match &self.body {
            Body::Expression { .. } => (self.clone(), Vec::new()),
            Body::Patched { base, patches } => ((**base).clone(), patches.clone()),
        };
        patches.push(patch);
        CandidateFunction {
            spec: self.spec,
            body: Body::Patched {
                base: Box::new(base),
                patches,
            },
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.body {
            Body::Expression { expr, .. } => expr.eval(x),
            Body::Patched { base, patches } => {
                base.value(x) + patches.iter().map(|p| p.value(x)).sum::<f64>()
            }
        }
    }

    /// Value, ambient gradient and ambient Hessian of the ambient extension.
    pub fn jet(&self, x: &[f64]) -> Jet {
        match &self.body {
            Body::Expression { expr, .. } => expr.eval_jet(x),
            Body::Patched { base, patches } => {
                patches.iter().fold(base.jet(x), |acc, p| acc + p.jet(x))
            }
        }
    }

    fn checked_jet(&self, p: &[f64]) -> Result<Jet> {
        let j = self.jet(p);
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::Evaluation {
                point: p.to_vec(),
                msg: "non-finite value or derivative".into(),
            })
        }
    }

    /// Tangential part of the ambient gradient at `p`.
    pub fn intrinsic_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let j = self.checked_jet(p)?;
        Ok(sphere::project_tangent(p, &j.gradient()))
    }

    /// Laplace–Beltrami operator from the ambient extension:
    /// Δ_S f = Δf − ∂²f/∂r² − n ∂f/∂r.
    pub fn laplace_beltrami(&self, p: &[f64]) -> Result<f64> {
        let j = self.checked_jet(p)?;
        Ok(laplacian_from_jet(&j, p))
    }

    /// Intrinsic Hessian in the frame returned by [`sphere::tangent_frame`].
    pub fn intrinsic_hessian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.checked_jet(p)?;
        let frame = sphere::tangent_frame(p);
        Ok(hessian_from_jet(&j, p, &frame))
    }

    /// Checks K > 0 and finiteness on a product grid of the given level.
    pub fn validate_positive(&self, level: usize) -> Result<f64> {
        let grid = quadrature::product_rule(self.n(), level)?;
        let mut min = f64::INFINITY;
        for p in &grid.points {
            let v = self.value(p);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    point: p.clone(),
                    msg: "division by zero or overflow".into(),
                });
            }
            if v <= 0.0 {
                return Err(Error::NonPositive {
                    value: v,
                    point: p.clone(),
                });
            }
            min = min.min(v);
        }
        Ok(min)
    }
}

pub(crate) fn laplacian_from_jet(j: &Jet, p: &[f64]) -> f64 {
    let d = p.len();
    let n = (d - 1) as f64;
    let g = j.gradient();
    let trace: f64 = (0..d).map(|i| j.hess[i][i]).sum();
    let mut radial2 = 0.0;
    for i in 0..d {
        for k in 0..d {
            radial2 += p[i] * j.hess[i][k] * p[k];
        }
    }
    trace - radial2 - n * sphere::dot(&g, p)
}

pub(crate) fn hessian_from_jet(j: &Jet, p: &[f64], frame: &[Vec<f64>]) -> DMatrix<f64> {
    let d = p.len();
    let n = frame.len();
    let radial = sphere::dot(&j.gradient(), p);
    DMatrix::from_fn(n, n, |a, b| {
        let mut s = 0.0;
        for i in 0..d {
            for k in 0..d {
                s += frame[a][i] * j.hess[i][k] * frame[b][k];
            }
        }
        if a == b {
            s - radial
        } else {
            s
        }
    })
}

/// Eigenvalues (ascending) and matching ambient eigenvectors of the intrinsic Hessian.
pub fn hessian_eigen(k: &CandidateFunction, p: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let frame = sphere::tangent_frame(p);
    let h = k.intrinsic_hessian(p)?;
    let sym = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            let mut v = vec![0.0; p.len()];
            for (a, e) in frame.iter().enumerate() {
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi += col[a] * ei;
                }
            }
            v
        })
        .collect();
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> SphereSpec {
        SphereSpec::new(3).unwrap()
    }

    #[test]
    fn height_function_derivatives() {
        let k = parse_candidate("2 + x4", s3()).unwrap();
        let north = [0.0, 0.0, 0.0, 1.0];
        let south = [0.0, 0.0, 0.0, -1.0];
        let g = k.intrinsic_gradient(&north).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-15));
        let g = k.intrinsic_gradient(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0, 1.0]);
        assert!((k.laplace_beltrami(&north).unwrap() + 3.0).abs() < 1e-14);
        assert!((k.laplace_beltrami(&south).unwrap() - 3.0).abs() < 1e-14);
        let h = k.intrinsic_hessian(&north).unwrap();
        assert!((h - DMatrix::<f64>::identity(3, 3) * -1.0).norm() < 1e-14);
    }

    #[test]
    fn dimension_and_positivity_errors() {
        assert!(matches!(
            parse_candidate("2 + x5", s3()),
            Err(Error::CoordinateOutOfRange { index: 5, n: 3 })
        ));
        assert!(matches!(
            parse_candidate("x4", s3()),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            parse_candidate("1/x1", s3()),
            Err(Error::Evaluation { .. }) | Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let k = parse_candidate("1", SphereSpec::new(5).unwrap()).unwrap();
        let p = sphere::normalize(&[0.1, 0.2, -0.3, 0.4, 0.5, 0.6]);
        assert_eq!(k.laplace_beltrami(&p).unwrap(), 0.0);
        assert!(k.intrinsic_hessian(&p).unwrap().norm() == 0.0);
    }
}
