//! Quadrature on Sⁿ.
//!
//! The product rule writes x = (√(1−t²)·y, t) with y ∈ Sⁿ⁻¹ so that
//! dμ = (1−t²)^{(n−2)/2} dt dμₙ₋₁. The t-factor uses Gauss–Jacobi nodes from
//! the Golub–Welsch eigenproblem, and S¹ uses equispaced nodes. With
//! `level + 1` nodes per factor the rule is exact for ambient polynomials of
//! degree ≤ 2·level + 1.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sphere;

const CACHE_MAGIC: &[u8; 4] = b"BTQR";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub level: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub tag: String,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Σ wᵢ f(xᵢ) with compensated summation.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = Neumaier::default();
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc.add(w * f(p));
        }
        acc.total()
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        };
        let mut buf = Vec::with_capacity(24 + self.len() * (self.n + 2) * 8);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n as u32).to_le_bytes());
        buf.extend_from_slice(&(self.level as u32).to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for p in &self.points {
            for x in p {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        for w in &self.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        let tmp = path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(&buf).map_err(io)?;
        drop(f);
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::Io {
            path: path.display().to_string(),
            msg: msg.to_string(),
        };
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| bad(&e.to_string()))?;
        if buf.len() < 24 || &buf[0..4] != CACHE_MAGIC {
            return Err(bad("not a quadrature cache file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        if u32_at(4) != CACHE_VERSION {
            return Err(bad("unsupported cache version"));
        }
        let n = u32_at(8) as usize;
        let level = u32_at(12) as usize;
        let count = u64::from_le_bytes(buf[16..24].try_into().unwrap()) as usize;
        let d = n + 1;
        if buf.len() != 24 + count * (d + 1) * 8 {
            return Err(bad("truncated cache file"));
        }
        let f64_at = |i: usize| {
            let o = 24 + i * 8;
            f64::from_le_bytes(buf[o..o + 8].try_into().unwrap())
        };
        let points = (0..count)
            .map(|i| (0..d).map(|k| f64_at(i * d + k)).collect())
            .collect();
        let weights = (0..count).map(|i| f64_at(count * d + i)).collect();
        Ok(QuadratureRule {
            n,
            level,
            points,
            weights,
            tag: format!("product(level={level})"),
        })
    }
}

/// Kahan–Babuška–Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// ∫₋₁¹ (1−t²)^a dt for a ∈ ½ℕ.
fn jacobi_mass(a: f64) -> f64 {
    if a < 0.25 {
        return 2.0;
    }
    if a < 0.75 {
        return std::f64::consts::FRAC_PI_2;
    }
    jacobi_mass(a - 1.0) * 2.0 * a / (2.0 * a + 1.0)
}

/// Gauss–Jacobi nodes and weights for the weight (1−t²)^a on [−1, 1].
pub fn gauss_jacobi_symmetric(count: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jm = DMatrix::<f64>::zeros(count, count);
    for k in 1..count {
        let kf = k as f64;
        let b = kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a + 1.0) * (2.0 * kf + 2.0 * a - 1.0));
        jm[(k, k - 1)] = b.sqrt();
        jm[(k - 1, k)] = b.sqrt();
    }
    let eig = SymmetricEigen::new(jm);
    let mu0 = jacobi_mass(a);
    let mut pairs: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Enforce exact symmetry of the nodes about 0.
    for i in 0..count / 2 {
        let j = count - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-t, w);
        pairs[j] = (t, w);
    }
    if count % 2 == 1 {
        pairs[count / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi_symmetric(count, 0.0)
}

fn circle(count: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let w = 2.0 * std::f64::consts::PI / count as f64;
    let pts = (0..count)
        .map(|k| {
            let th = (k as f64 + 0.5) * w;
            vec![th.cos(), th.sin()]
        })
        .collect();
    (pts, vec![w; count])
}

fn product_parts(n: usize, level: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    if n == 1 {
        return circle(2 * level + 2);
    }
    let (sub_pts, sub_w) = product_parts(n - 1, level);
    let (ts, tw) = gauss_jacobi_symmetric(level + 1, (n as f64 - 2.0) / 2.0);
    let mut pts = Vec::with_capacity(ts.len() * sub_pts.len());
    let mut wts = Vec::with_capacity(ts.len() * sub_pts.len());
    for (t, wt) in ts.iter().zip(&tw) {
        let r = (1.0 - t * t).max(0.0).sqrt();
        for (y, wy) in sub_pts.iter().zip(&sub_w) {
            let mut x: Vec<f64> = y.iter().map(|v| r * v).collect();
            x.push(*t);
            pts.push(x);
            wts.push(wt * wy);
        }
    }
    (pts, wts)
}

fn check_dimension(n: usize) -> Result<()> {
    if !(2..=7).contains(&n) {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "quadrature is available for 2 ≤ n ≤ 7".into(),
        });
    }
    Ok(())
}

/// Product Gauss rule on Sⁿ, exact for ambient polynomials of degree ≤ 2·level + 1.
pub fn product_rule(n: usize, level: usize) -> Result<QuadratureRule> {
    check_dimension(n)?;
    if level == 0 {
        return Err(Error::Invalid("quadrature level must be at least 1".into()));
    }
    let (points, weights) = product_parts(n, level);
    Ok(QuadratureRule {
        n,
        level,
        points,
        weights,
        tag: format!("product(level={level})"),
    })
}

/// Spec-facing name for [`product_rule`].
pub fn build_quadrature(n: usize, level: usize) -> Result<QuadratureRule> {
    product_rule(n, level)
}

/// Largest concentration resolvable at a given level.
pub fn lambda_cap(level: usize) -> f64 {
    1000.0 * level as f64
}

/// Rule adapted to a function concentrated at `a` with scale 1/λ: geodesic
/// polar coordinates about `a`, composite Gauss–Legendre in the polar angle
/// on geometrically growing panels, and the product rule on the link Sⁿ⁻¹.
pub fn concentrated_rule(n: usize, level: usize, a: &[f64], lambda: f64) -> Result<QuadratureRule> {
    check_dimension(n)?;
    if level == 0 {
        return Err(Error::Invalid("quadrature level must be at least 1".into()));
    }
    if a.len() != n + 1 {
        return Err(Error::Invalid(
            "center has the wrong ambient dimension".into(),
        ));
    }
    if !(lambda >= 1.0) || lambda > lambda_cap(level) {
        return Err(Error::Invalid(format!(
            "λ = {lambda} outside [1, {}] for quadrature level {level}",
            lambda_cap(level)
        )));
    }
    let pi = std::f64::consts::PI;
    let mut edges = vec![0.0];
    let mut h = (1.0 / (8.0 * lambda)).min(pi / 8.0);
    while *edges.last().unwrap() < pi {
        let next = (edges.last().unwrap() + h).min(pi);
        edges.push(next);
        h *= 2.0;
    }
    let l = edges.len();
    if l > 3 && edges[l - 1] - edges[l - 2] < 0.25 * (edges[l - 2] - edges[l - 3]) {
        // Merge a sliver panel into its neighbour.
        edges.remove(l - 2);
    }
    let (gx, gw) = gauss_legendre(2 * level + 4);
    let (link_pts, link_w) = if n == 2 {
        circle(2 * level + 2)
    } else {
        product_parts(n - 1, level)
    };
    let a = sphere::normalize(a);
    let frame = sphere::tangent_frame(&a);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for win in edges.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in gx.iter().zip(&gw) {
            let th = mid + half * x;
            let (s, c) = th.sin_cos();
            let radial_w = w * half * s.powi(n as i32 - 1);
            for (y, wy) in link_pts.iter().zip(&link_w) {
                let mut p: Vec<f64> = a.iter().map(|v| c * v).collect();
                for (yi, e) in y.iter().zip(&frame) {
                    for (pk, ek) in p.iter_mut().zip(e) {
                        *pk += s * yi * ek;
                    }
                }
                points.push(p);
                weights.push(radial_w * wy);
            }
        }
    }
    Ok(QuadratureRule {
        n,
        level,
        points,
        weights,
        tag: format!("concentrated(level={level}, lambda={lambda})"),
    })
}
