//! Dense bit vectors over GF(2) and rank by elimination.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in ones {
            v.flip(i);
        }
        v
    }

    /// Parses a string of '0'/'1' characters.
    pub fn from_bits(s: &str) -> Option<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// Highest set bit.
    pub fn pivot(&self) -> Option<usize> {
        for (k, w) in self.words.iter().enumerate().rev() {
            if *w != 0 {
                return Some(k * 64 + 63 - w.leading_zeros() as usize);
            }
        }
        None
    }

    pub fn to_bits(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

/// Rank over GF(2) of a set of vectors of equal length.
pub fn rank(columns: &[BitVec]) -> usize {
    let mut basis: Vec<Option<BitVec>> = Vec::new();
    let mut r = 0;
    for c in columns {
        let mut v = c.clone();
        while let Some(p) = v.pivot() {
            if basis.len() <= p {
                basis.resize(p + 1, None);
            }
            match &basis[p] {
                Some(b) => v.xor_assign(b),
                None => {
                    basis[p] = Some(v);
                    r += 1;
                    break;
                }
            }
        }
    }
    r
}

/// Whether `target` lies in the span of `columns`.
pub fn in_span(columns: &[BitVec], target: &BitVec) -> bool {
    let mut with: Vec<BitVec> = columns.to_vec();
    with.push(target.clone());
    rank(&with) == rank(columns)
}
