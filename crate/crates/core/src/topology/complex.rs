//! Chain complexes over GF(2).
//!
//! Text format: a block `[k]` per degree, then one line per generator with
//! its label and the boundary as a bitstring over the degree k−1 generators
//! (omitted in degree 0). `#` starts a comment.
//!
//! ```text
//! [0]
//! x0
//! [1]
//! x1 0
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::gf2::{rank, BitVec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainComplex {
    /// Generator labels per degree.
    pub labels: Vec<Vec<String>>,
    /// boundaries[k][j] = ∂ of generator j in degree k, over degree k−1.
    pub boundaries: Vec<Vec<BitVec>>,
}

impl ChainComplex {
    pub fn empty() -> Self {
        ChainComplex {
            labels: Vec::new(),
            boundaries: Vec::new(),
        }
    }

    /// Complex with the given generators and zero boundaries.
    pub fn discrete(labels: Vec<Vec<String>>) -> Self {
        let mut boundaries = Vec::with_capacity(labels.len());
        for k in 0..labels.len() {
            let below = if k == 0 { 0 } else { labels[k - 1].len() };
            boundaries.push(vec![BitVec::zeros(below); labels[k].len()]);
        }
        ChainComplex { labels, boundaries }
    }

    pub fn top_degree(&self) -> usize {
        self.labels.len().saturating_sub(1)
    }

    pub fn rank_in(&self, k: usize) -> usize {
        self.labels.get(k).map_or(0, Vec::len)
    }

    pub fn generator(&self, label: &str) -> Option<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .find_map(|(k, ls)| ls.iter().position(|l| l == label).map(|j| (k, j)))
    }

    fn ensure_degree(&mut self, k: usize) {
        while self.labels.len() <= k {
            self.labels.push(Vec::new());
            self.boundaries.push(Vec::new());
        }
    }

    /// Checks shapes and ∂∘∂ = 0, naming the first offending generator.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.boundaries.len() {
            return Err(Error::Complex(
                "labels and boundaries disagree on degrees".into(),
            ));
        }
        for k in 0..self.labels.len() {
            if self.boundaries[k].len() != self.labels[k].len() {
                return Err(Error::Complex(format!(
                    "degree {k}: one boundary per generator"
                )));
            }
            let below = if k == 0 { 0 } else { self.labels[k - 1].len() };
            for (j, b) in self.boundaries[k].iter().enumerate() {
                if b.len() != below {
                    return Err(Error::Complex(format!(
                        "boundary of {} has length {} but degree {} has {below} generators",
                        self.labels[k][j],
                        b.len(),
                        k.saturating_sub(1)
                    )));
                }
            }
        }
        for k in 2..self.labels.len() {
            for (j, b) in self.boundaries[k].iter().enumerate() {
                let bb = self.apply_boundary(k - 1, b);
                if !bb.is_zero() {
                    return Err(Error::Complex(format!(
                        "∂∘∂ ≠ 0 on generator {} in degree {k}",
                        self.labels[k][j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// ∂_k applied to a chain in degree k.
    pub fn apply_boundary(&self, k: usize, chain: &BitVec) -> BitVec {
        let below = if k == 0 { 0 } else { self.rank_in(k - 1) };
        let mut out = BitVec::zeros(below);
        for j in chain.ones() {
            out.xor_assign(&self.boundaries[k][j]);
        }
        out
    }

    /// Betti numbers over GF(2): β_k = dim ker ∂_k − rank ∂_{k+1}.
    pub fn homology(&self) -> Vec<usize> {
        let ranks: Vec<usize> = (0..self.labels.len())
            .map(|k| rank(&self.boundaries[k]))
            .collect();
        (0..self.labels.len())
            .map(|k| {
                let kernel = self.labels[k].len() - ranks[k];
                kernel - ranks.get(k + 1).copied().unwrap_or(0)
            })
            .collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.labels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                if k % 2 == 0 {
                    l.len() as i64
                } else {
                    -(l.len() as i64)
                }
            })
            .sum()
    }

    /// Adds an m-cell with the given boundary, which must be an (m−1)-cycle.
    pub fn attach_cell(&self, dim: usize, label: &str, boundary: &BitVec) -> Result<ChainComplex> {
        let mut out = self.clone();
        out.ensure_degree(dim);
        let below = if dim == 0 { 0 } else { out.rank_in(dim - 1) };
        if boundary.len() != below {
            return Err(Error::Complex(format!(
                "attaching chain has length {} but degree {} has {below} generators",
                boundary.len(),
                dim.saturating_sub(1)
            )));
        }
        // In degree 0 the cycle condition is the augmentation: an even number of endpoints.
        let cycle = match dim {
            0 => true,
            1 => boundary.count_ones().is_multiple_of(2),
            _ => out.apply_boundary(dim - 1, boundary).is_zero(),
        };
        if !cycle {
            return Err(Error::Complex(format!(
                "attaching chain for {label} is not a cycle"
            )));
        }
        if out.generator(label).is_some() {
            return Err(Error::Complex(format!("generator {label} already exists")));
        }
        out.labels[dim].push(label.to_string());
        out.boundaries[dim].push(boundary.clone());
        // Higher boundaries gain a zero coefficient for the new generator.
        if let Some(above) = out.boundaries.get_mut(dim + 1) {
            for b in above.iter_mut() {
                let mut nb = BitVec::zeros(b.len() + 1);
                for i in b.ones() {
                    nb.set(i, true);
                }
                *b = nb;
            }
        }
        Ok(out)
    }

    /// Chain in degree k with the named generators set.
    pub fn chain(&self, k: usize, labels: &[&str]) -> Result<BitVec> {
        let mut v = BitVec::zeros(self.rank_in(k));
        for l in labels {
            let j = self
                .labels
                .get(k)
                .and_then(|ls| ls.iter().position(|x| x == l))
                .ok_or_else(|| Error::Complex(format!("no generator {l} in degree {k}")))?;
            v.flip(j);
        }
        Ok(v)
    }

    pub fn parse(text: &str) -> Result<ChainComplex> {
        let mut cc = ChainComplex::empty();
        let mut degree: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Complex(format!("line {}: {msg}", lineno + 1));
            if let Some(inner) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let k: usize = inner
                    .trim()
                    .parse()
                    .map_err(|_| at(format!("bad degree header '{line}'")))?;
                if k != cc.labels.len() {
                    return Err(at(format!(
                        "degree blocks must appear in order, expected [{}]",
                        cc.labels.len()
                    )));
                }
                cc.ensure_degree(k);
                degree = Some(k);
                continue;
            }
            let k = degree.ok_or_else(|| at("generator before any degree header".into()))?;
            let mut parts = line.split_whitespace();
            let label = parts.next().unwrap().to_string();
            let bits = parts.next().unwrap_or("");
            if parts.next().is_some() {
                return Err(at("expected 'label [bitstring]'".into()));
            }
            let below = if k == 0 { 0 } else { cc.rank_in(k - 1) };
            let b = if bits.is_empty() {
                BitVec::zeros(below)
            } else {
                BitVec::from_bits(bits).ok_or_else(|| at(format!("bad bitstring '{bits}'")))?
            };
            if b.len() != below {
                return Err(at(format!(
                    "boundary of {label} has {} bits, degree {} has {below} generators",
                    b.len(),
                    k.saturating_sub(1)
                )));
            }
            if cc.generator(&label).is_some() {
                return Err(at(format!("duplicate generator {label}")));
            }
            cc.labels[k].push(label);
            cc.boundaries[k].push(b);
        }
        Ok(cc)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, ls) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "[{k}]");
            for (l, b) in ls.iter().zip(&self.boundaries[k]) {
                if k == 0 {
                    let _ = writeln!(s, "{l}");
                } else {
                    let _ = writeln!(s, "{l} {}", b.to_bits());
                }
            }
        }
        s
    }
}
