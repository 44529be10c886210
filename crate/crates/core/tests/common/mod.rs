//! Independent reference computations for the integration and acceptance
//! tests. Nothing here calls into the solver path it is used to check.

#![allow(dead_code)]

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cell masks follow the library: bit 0 = item 1, bit 1 = item 2, bit 2 = item 3.
/// Row `T` of the system says `Σ_{S ⊇ T} cell_S = θ_T`.
pub fn oracle_cells(singles: [f64; 3], pairs: [f64; 3], t: f64) -> [f64; 8] {
    let theta = [
        1.0, singles[0], singles[1], pairs[0], singles[2], pairs[1], pairs[2], t,
    ];
    let a = SMatrix::<f64, 8, 8>::from_fn(|row, col| {
        let (tm, s) = (row as u8, col as u8);
        if s & tm == tm {
            1.0
        } else {
            0.0
        }
    });
    let b = SVector::<f64, 8>::from_column_slice(&theta);
    let x = a
        .lu()
        .solve(&b)
        .expect("constraint matrix is unit triangular");
    std::array::from_fn(|i| x[i])
}

/// Base point, direction and admissible `[lo, hi]` of the family of cells,
/// recovered by solving at `t = 0` and `t = 1`.
pub struct OracleSegment {
    pub base: [f64; 8],
    pub dir: [f64; 8],
    pub lo: f64,
    pub hi: f64,
}

pub fn oracle_segment(singles: [f64; 3], pairs: [f64; 3]) -> OracleSegment {
    let base = oracle_cells(singles, pairs, 0.0);
    let one = oracle_cells(singles, pairs, 1.0);
    let dir: [f64; 8] = std::array::from_fn(|i| (one[i] - base[i]).round());
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..8 {
        // base + dir·t >= 0
        if dir[i] > 0.0 {
            lo = lo.max(-base[i] / dir[i]);
        } else {
            hi = hi.min(base[i] / -dir[i]);
        }
    }
    OracleSegment { base, dir, lo, hi }
}

pub fn plain_entropy(cells: &[f64]) -> f64 {
    cells
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -c * c.ln())
        .sum()
}

impl OracleSegment {
    pub fn entropy(&self, t: f64) -> f64 {
        let cells: [f64; 8] = std::array::from_fn(|i| self.base[i] + self.dir[i] * t);
        plain_entropy(&cells)
    }

    /// Exhaustive argmax of the entropy over `points` evenly spaced values
    /// spanning `[lo, hi]`.
    pub fn grid_argmax(&self, points: usize) -> f64 {
        let step = (self.hi - self.lo) / (points - 1) as f64;
        let mut best = (f64::NEG_INFINITY, self.lo);
        for k in 0..points {
            let t = self.lo + step * k as f64;
            let h = self.entropy(t);
            if h > best.0 {
                best = (h, t);
            }
        }
        best.1
    }
}

/// Singletons and pairs `(1,2) (1,3) (2,3)` of a cell vector by direct summation.
pub fn marginals_of(cells: &[f64; 8]) -> ([f64; 3], [f64; 3]) {
    let m = |mask: usize| -> f64 { (0..8).filter(|s| s & mask == mask).map(|s| cells[s]).sum() };
    ([m(1), m(2), m(4)], [m(3), m(5), m(6)])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random joint distribution with every cell positive. Log-uniform weights
/// over `spread` decades give both balanced and skewed instances.
pub fn random_cells(rng: &mut impl Rng, spread: f64) -> [f64; 8] {
    let w: [f64; 8] = std::array::from_fn(|_| 10f64.powf(-rng.random::<f64>() * spread));
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Like [`random_cells`] but with the all-present cell scaled down so that
/// it is small relative to the others.
pub fn random_sparse_triple_cells(rng: &mut impl Rng) -> [f64; 8] {
    let mut w: [f64; 8] = std::array::from_fn(|_| 10f64.powf(-rng.random::<f64>() * 2.0));
    w[7] *= 10f64.powf(-1.0 - rng.random::<f64>() * 3.0);
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Naive support counter over a FIMI file: every subset of size 1–3 of every
/// (deduplicated) line, keyed by raw ids.
pub fn brute_force_supports(text: &str) -> (u64, std::collections::BTreeMap<Vec<u64>, u64>) {
    let mut counts = std::collections::BTreeMap::new();
    let mut m = 0;
    for line in text.lines() {
        let mut items: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        if items.is_empty() {
            continue;
        }
        m += 1;
        items.sort();
        items.dedup();
        let n = items.len();
        for a in 0..n {
            *counts.entry(vec![items[a]]).or_insert(0) += 1;
            for b in a + 1..n {
                *counts.entry(vec![items[a], items[b]]).or_insert(0) += 1;
                for c in b + 1..n {
                    *counts
                        .entry(vec![items[a], items[b], items[c]])
                        .or_insert(0) += 1;
                }
            }
        }
    }
    (m, counts)
}

pub fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini.dat")
}
