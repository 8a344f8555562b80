#![allow(dead_code)]

use std::path::PathBuf;

use bubbletower_core::func_core::{find_critical_points, parse_candidate_file, CandidateFunction};
use bubbletower_core::infinity::CriticalCatalog;
use bubbletower_core::spread::{Spread, SpreadMember, StripLadder};
use bubbletower_core::topology::{heart_labels, HeartLabels};
use bubbletower_core::CriticalPoint;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

pub fn read_corpus(name: &str) -> String {
    std::fs::read_to_string(corpus(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn candidate(name: &str) -> CandidateFunction {
    parse_candidate_file(&read_corpus(name)).unwrap()
}

pub struct Heart {
    pub k: CandidateFunction,
    pub points: Vec<CriticalPoint>,
    pub labels: HeartLabels,
}

pub fn heart() -> Heart {
    let k = candidate("heart_s3.txt");
    let points = find_critical_points(&k, 6).unwrap();
    let labels = heart_labels(&points).unwrap();
    Heart { k, points, labels }
}

/// Central difference of f along the geodesic through p with unit tangent e.
pub fn geodesic_derivative(f: impl Fn(&[f64]) -> f64, p: &[f64], e: &[f64], h: f64) -> f64 {
    let at = |t: f64| -> Vec<f64> {
        p.iter()
            .zip(e)
            .map(|(pi, ei)| pi * t.cos() + ei * t.sin())
            .collect()
    };
    (f(&at(h)) - f(&at(-h))) / (2.0 * h)
}

/// Second derivative along the same geodesic.
pub fn geodesic_second(f: impl Fn(&[f64]) -> f64, p: &[f64], e: &[f64], h: f64) -> f64 {
    let at = |t: f64| -> Vec<f64> {
        p.iter()
            .zip(e)
            .map(|(pi, ei)| pi * t.cos() + ei * t.sin())
            .collect()
    };
    (f(&at(h)) - 2.0 * f(p) + f(&at(-h))) / (h * h)
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Random positive quadratic-plus-linear expression in n+1 ambient coordinates.
pub fn random_positive_expression(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut s = format!("{:.6}", rng.gen_range(3.0..4.0));
    for i in 1..=n + 1 {
        s += &format!(" + {:.6}*x{i}", rng.gen_range(-0.8..0.8));
    }
    for i in 1..=n + 1 {
        for j in i..=n + 1 {
            if rng.gen_bool(0.3) {
                s += &format!(" + {:.6}*x{i}*x{j}", rng.gen_range(-0.4..0.4));
            }
        }
    }
    s
}

/// Random catalog on Sⁿ with forced extremal signs and at least one
/// maximum; `m` points in total.
pub fn random_catalog(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CriticalCatalog {
    let mut points = vec![CriticalPoint::synthetic(
        n,
        rng.gen_range(1.0..3.0),
        n,
        -1.0,
    )];
    for _ in 1..m {
        let idx = rng.gen_range(0..=n);
        let lap = if idx == n {
            -rng.gen_range(0.1..5.0)
        } else if idx == 0 || rng.gen_bool(0.5) {
            rng.gen_range(0.1..5.0)
        } else {
            -rng.gen_range(0.1..5.0)
        };
        points.push(CriticalPoint::synthetic(
            n,
            rng.gen_range(0.2..3.0),
            idx,
            lap,
        ));
    }
    points.shuffle(rng);
    CriticalCatalog::new(n, points).unwrap()
}

/// Σ over nonempty subsets of C₋ of (−1)^{(q−1)+Σ(n−mᵢ)}, by brute force.
pub fn brute_index_count(catalog: &CriticalCatalog) -> i64 {
    let n = catalog.n;
    let neg: Vec<&CriticalPoint> = catalog
        .points
        .iter()
        .filter(|p| p.laplacian < 0.0)
        .collect();
    let mut total = 0;
    for mask in 1u32..(1 << neg.len()) {
        let mut index = 0usize;
        let mut q = 0usize;
        for (j, p) in neg.iter().enumerate() {
            if mask >> j & 1 == 1 {
                q += 1;
                index += n - p.morse_index;
            }
        }
        index += q - 1;
        total += if index.is_multiple_of(2) { 1 } else { -1 };
    }
    total
}

/// Energy c(Σ w)^{2/n} of a subset given weights wⱼ = Kⱼ^{−(n−2)/2}.
pub fn weight_energy(n: usize, c: f64, weights: &[f64]) -> f64 {
    c * weights.iter().sum::<f64>().powf(2.0 / n as f64)
}

/// Strip lookup by linear scan.
pub fn strip_scan(lower: &[f64], upper: &[f64], e: f64) -> Option<usize> {
    (0..lower.len())
        .find(|&i| lower[i] <= e && e <= upper[i])
        .map(|i| i + 1)
}

/// A random spread with well-separated subset energies, strips around the
/// energies of a base weight vector and members perturbing that vector.
pub fn random_spread(rng: &mut ChaCha8Rng, n: usize, m: usize, members: usize) -> Spread {
    let c = 1.0;
    let (weights, energies, gap) = loop {
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..10.0)).collect();
        let mut e: Vec<(f64, u64)> = (1u64..(1 << m))
            .map(|mask| {
                let sel: Vec<f64> = (0..m)
                    .filter(|j| mask >> j & 1 == 1)
                    .map(|j| w[j])
                    .collect();
                (weight_energy(n, c, &sel), mask)
            })
            .collect();
        e.sort_by(|a, b| a.0.total_cmp(&b.0));
        let gap = e
            .windows(2)
            .map(|p| p[1].0 / p[0].0 - 1.0)
            .fold(f64::INFINITY, f64::min);
        if gap > 2e-4 {
            break (w, e, gap);
        }
    };
    // A single point has no neighbouring energy; cap the strip width anyway.
    let half = gap.min(0.04) / 4.0;
    let lower: Vec<f64> = energies.iter().map(|(e, _)| e * (1.0 - half)).collect();
    let upper: Vec<f64> = energies.iter().map(|(e, _)| e * (1.0 + half)).collect();
    let fixed: Vec<usize> = (0..m)
        .map(|j| {
            energies
                .iter()
                .position(|(_, mask)| *mask == 1 << j)
                .unwrap()
                + 1
        })
        .collect();
    // Energies move by at most (2/n)·wiggle, well inside a strip.
    let wiggle = half / 4.0;
    let signatures: Vec<u64> = (0..rng.gen_range(1..=members.min(3)))
        .map(|_| rng.gen_range(1u64..(1 << m)))
        .collect();
    let members = (0..members)
        .map(|i| {
            let sig = *signatures.choose(rng).unwrap();
            let values = weights
                .iter()
                .map(|w| (w * (1.0 + rng.gen_range(-wiggle..wiggle))).powf(-2.0 / (n as f64 - 2.0)))
                .collect();
            let laplacian = (0..m)
                .map(|j| {
                    let mag = rng.gen_range(0.1..3.0);
                    if sig >> j & 1 == 1 {
                        -mag
                    } else {
                        mag
                    }
                })
                .collect();
            SpreadMember {
                label: format!("K{i}"),
                values,
                laplacian,
                solvable: Some(rng.gen_bool(0.5)),
                samples: Vec::new(),
            }
        })
        .collect();
    // Fixed indices must increase with j; sort the points by singleton energy.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&j| fixed[j]);
    let mut spread = Spread {
        n,
        energy_constant: c,
        ladder: StripLadder::new(lower, upper).unwrap(),
        fixed_indices: order.iter().map(|&j| fixed[j]).collect(),
        members,
    };
    for mem in &mut spread.members {
        mem.values = order.iter().map(|&j| mem.values[j]).collect();
        mem.laplacian = order.iter().map(|&j| mem.laplacian[j]).collect();
    }
    spread
}
