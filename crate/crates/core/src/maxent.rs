//! Maximum-entropy triple frequency from singleton and pair frequencies.
//!
//! Cells of the joint distribution of three boolean items are indexed by a
//! bitmask `S` over `{item1 = 0b001, item2 = 0b010, item3 = 0b100}`; the cell
//! holds the probability that exactly the items in `S` are present.
//!
//! Fixing the seven marginals leaves one degree of freedom, the triple
//! frequency `t`, and every cell is affine in it: `cell_S(t) = x_S + v_S·t`
//! with `v_S = (-1)^(3-|S|)`. Cells with `|S|` odd ("even parity", `v = +1`)
//! grow with `t`; the pair-only cells and the all-absent cell shrink.

use std::ops::RangeInclusive;

use crate::support_counts::SupportCounts;
use crate::transactions::ItemId;
use crate::{Error, Result};

/// Slack for feasibility checks on values derived from float marginals.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Bisection steps used when none are specified.
pub const DEFAULT_ITERATIONS: u32 = 30;

/// Segments narrower than this are treated as a single point.
const DEGENERATE_WIDTH: f64 = 1e-15;

/// Masks of the single-only cells (`l1..l3`).
pub const SINGLE_ONLY: [u8; 3] = [0b001, 0b010, 0b100];
/// Masks of the pair-only cells and the all-absent cell (`u1..u4`).
pub const PAIR_ONLY_AND_EMPTY: [u8; 4] = [0b011, 0b101, 0b110, 0b000];
/// Mask of the cell where all three items are present.
pub const ALL: u8 = 0b111;

/// `+1` for cells that grow with `t`, `-1` for those that shrink.
pub fn direction(mask: u8) -> f64 {
    if mask.count_ones() % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn is_even_parity(mask: u8) -> bool {
    (3 - mask.count_ones()).is_multiple_of(2)
}

/// Singleton and pair frequencies of an item triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleMarginals {
    singles: [f64; 3],
    /// `(1,2)`, `(1,3)`, `(2,3)`.
    pairs: [f64; 3],
}

impl TripleMarginals {
    /// Validates range, pair-below-singleton and Fréchet lower bounds.
    pub fn new(singles: [f64; 3], pairs: [f64; 3]) -> Result<Self> {
        let tol = FEASIBILITY_TOL;
        let in_unit = |v: f64| v.is_finite() && (-tol..=1.0 + tol).contains(&v);
        if !singles.iter().chain(&pairs).all(|&v| in_unit(v)) {
            return Err(Error::InvalidMarginals(format!(
                "frequencies must lie in [0, 1]: {singles:?} {pairs:?}"
            )));
        }
        for (p, (a, b)) in pairs.iter().zip([(0, 1), (0, 2), (1, 2)]) {
            let (sa, sb) = (singles[a], singles[b]);
            if *p > sa.min(sb) + tol || *p < sa + sb - 1.0 - tol {
                return Err(Error::InvalidMarginals(format!(
                    "pair ({},{}) = {p} outside [{}, {}]",
                    a + 1,
                    b + 1,
                    (sa + sb - 1.0).max(0.0),
                    sa.min(sb)
                )));
            }
        }
        Ok(Self { singles, pairs })
    }

    /// Marginals of `ids` from exact supports.
    pub fn from_counts(c: &SupportCounts, ids: [ItemId; 3]) -> Result<Self> {
        if c.m() == 0 {
            return Err(Error::EmptyDataset);
        }
        let m = c.m() as f64;
        let [i, j, k] = ids;
        Self::new(
            [
                c.single(i) as f64 / m,
                c.single(j) as f64 / m,
                c.single(k) as f64 / m,
            ],
            [
                c.pair(i, j) as f64 / m,
                c.pair(i, k) as f64 / m,
                c.pair(j, k) as f64 / m,
            ],
        )
    }

    pub fn singles(&self) -> [f64; 3] {
        self.singles
    }

    /// Pair frequencies in the order `(1,2)`, `(1,3)`, `(2,3)`.
    pub fn pairs(&self) -> [f64; 3] {
        self.pairs
    }

    /// Frequency of the itemset `mask`, with `t` standing in for the triple.
    pub fn theta(&self, mask: u8, t: f64) -> f64 {
        match mask {
            0b000 => 1.0,
            0b001 => self.singles[0],
            0b010 => self.singles[1],
            0b100 => self.singles[2],
            0b011 => self.pairs[0],
            0b101 => self.pairs[1],
            0b110 => self.pairs[2],
            0b111 => t,
            _ => unreachable!("mask {mask} out of range"),
        }
    }

    /// Inclusion–exclusion over supersets, without any sign check.
    fn signed_cells(&self, t: f64) -> [f64; 8] {
        let mut cells = [0.0; 8];
        for (mask, cell) in cells.iter_mut().enumerate() {
            let mask = mask as u8;
            let free = ALL & !mask;
            let mut sub = free;
            loop {
                let sign = if sub.count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                *cell += sign * self.theta(mask | sub, t);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
        }
        cells
    }
}

/// The eight cell probabilities of a joint distribution of three booleans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCells([f64; 8]);

impl TripleCells {
    /// Wraps raw cell values. No feasibility check is made.
    pub fn from_array(cells: [f64; 8]) -> Self {
        Self(cells)
    }

    pub fn get(&self, mask: u8) -> f64 {
        self.0[mask as usize]
    }

    pub fn as_array(&self) -> &[f64; 8] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Probability that every item in `mask` is present.
    pub fn marginal(&self, mask: u8) -> f64 {
        (0u8..8)
            .filter(|&s| s & mask == mask)
            .map(|s| self.get(s))
            .sum()
    }

    /// Smallest of the seven cells other than the all-present one.
    pub fn min_other(&self) -> f64 {
        (0u8..7).map(|s| self.get(s)).fold(f64::INFINITY, f64::min)
    }
}

/// Cells of the distribution with marginals `mg` and triple frequency `t`.
pub fn cells_from_marginals(mg: &TripleMarginals, t: f64) -> Result<TripleCells> {
    let cells = mg.signed_cells(t);
    if let Some((mask, &value)) = cells
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -FEASIBILITY_TOL)
    {
        return Err(Error::InfeasibleCells {
            cell: mask as u8,
            value,
            t,
        });
    }
    Ok(TripleCells(cells))
}

/// The one-parameter family `x + t·v`, `t ∈ [lower, upper]`, of distributions
/// consistent with a triple's marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleSegment {
    base: [f64; 8],
    lower: f64,
    upper: f64,
}

impl FeasibleSegment {
    /// Cell values at `t = 0`. Single-only cells may be negative.
    pub fn base(&self) -> &[f64; 8] {
        &self.base
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn cell(&self, mask: u8, t: f64) -> f64 {
        self.base[mask as usize] + direction(mask) * t
    }

    pub fn cells_at(&self, t: f64) -> TripleCells {
        TripleCells(std::array::from_fn(|s| self.cell(s as u8, t)))
    }

    /// Base single-only cells `l1..l3`.
    pub fn single_only(&self) -> [f64; 3] {
        SINGLE_ONLY.map(|s| self.base[s as usize])
    }

    /// Base pair-only cells and all-absent cell `u1..u4`.
    pub fn pair_only_and_empty(&self) -> [f64; 4] {
        PAIR_ONLY_AND_EMPTY.map(|s| self.base[s as usize])
    }

    /// `L_shift(t) = t · Π (l_i + shift + t)`, the product of growing cells.
    pub fn growing_product(&self, t: f64, shift: f64) -> f64 {
        t * self
            .single_only()
            .iter()
            .map(|l| l + shift + t)
            .product::<f64>()
    }

    /// `U_shift(t) = Π (u_i + shift - t)`, the product of shrinking cells.
    pub fn shrinking_product(&self, t: f64, shift: f64) -> f64 {
        self.pair_only_and_empty()
            .iter()
            .map(|u| u + shift - t)
            .product()
    }

    /// Derivative that tolerates zero cells: an empty growing cell pushes it
    /// to `+inf`, an empty shrinking cell to `-inf`.
    fn derivative_extended(&self, t: f64) -> f64 {
        (0u8..8)
            .map(|s| {
                let c = self.cell(s, t);
                if c > 0.0 {
                    -direction(s) * c.ln()
                } else {
                    direction(s) * f64::INFINITY
                }
            })
            .sum()
    }
}

/// Base point at `t = 0` and the admissible range of `t`.
///
/// `lower = max(0, max_even(-x_S))`, `upper = min_odd(x_S)`, so every cell
/// stays non-negative on the segment.
pub fn build_segment(mg: &TripleMarginals) -> Result<FeasibleSegment> {
    let base = mg.signed_cells(0.0);
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    for mask in 0u8..8 {
        let x = base[mask as usize];
        if is_even_parity(mask) {
            lower = lower.max(-x);
        } else {
            upper = upper.min(x);
        }
    }
    if lower > upper + FEASIBILITY_TOL {
        return Err(Error::InfeasibleMarginals { lower, upper });
    }
    Ok(FeasibleSegment {
        base,
        lower,
        upper: upper.max(lower),
    })
}

/// Shannon entropy in nats of the distribution at `t`, with `0 ln 0 = 0`.
pub fn entropy_at(seg: &FeasibleSegment, t: f64) -> f64 {
    (0u8..8)
        .map(|s| seg.cell(s, t))
        .filter(|&c| c > 0.0)
        .map(|c| -c * c.ln())
        .sum()
}

/// `dH/dt = Σ_S v_S ln(1 / cell_S(t))`, defined where all cells are positive.
pub fn entropy_derivative(seg: &FeasibleSegment, t: f64) -> Result<f64> {
    if (0u8..8).any(|s| seg.cell(s, t) <= 0.0) {
        return Err(Error::Domain { t });
    }
    Ok(seg.derivative_extended(t))
}

/// `Σ_odd ln(1/(x_S - t)) - Σ_even ln(1/(x_S + t))`; zero at the maximiser.
pub fn stationarity_gap(seg: &FeasibleSegment, t: f64) -> f64 {
    let (mut odd, mut even) = (0.0, 0.0);
    for s in 0u8..8 {
        let x = seg.base[s as usize];
        if is_even_parity(s) {
            even += (1.0 / (x + t)).ln();
        } else {
            odd += (1.0 / (x - t)).ln();
        }
    }
    odd - even
}

/// Result of maximising the entropy along a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxentSolution {
    /// Maximum-entropy triple frequency.
    pub t: f64,
    /// The maximiser sits on a border of the segment.
    pub clamped: bool,
    /// Bisection steps taken.
    pub iterations: u32,
    /// `|stationarity gap|` at `t`; `None` when clamped.
    pub residual: Option<f64>,
}

impl MaxentSolution {
    fn at_border(t: f64) -> Self {
        Self {
            t,
            clamped: true,
            iterations: 0,
            residual: None,
        }
    }
}

/// Bisection on the sign of the entropy derivative.
///
/// Border probes sit `δ = 1e-15·max(1, width)` inside the segment: a
/// non-positive slope just above `lower` returns `lower`, a non-negative
/// slope just below `upper` returns `upper`. Otherwise the bracket is halved
/// `iterations` times and its midpoint returned. If the bracket shrinks to two
/// adjacent floats first, the end with the smaller slope is returned.
pub fn solve_tmax(seg: &FeasibleSegment, iterations: u32) -> MaxentSolution {
    let (l, r) = (seg.lower, seg.upper);
    let width = r - l;
    if width <= DEGENERATE_WIDTH {
        return MaxentSolution::at_border(l);
    }
    let delta = DEGENERATE_WIDTH * width.max(1.0);
    if seg.derivative_extended(l + delta) <= 0.0 {
        return MaxentSolution::at_border(l);
    }
    if seg.derivative_extended(r - delta) >= 0.0 {
        return MaxentSolution::at_border(r);
    }

    let (mut lo, mut hi) = (l, r);
    let mut steps = 0;
    while steps < iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Adjacent floats: keep whichever end is closer to stationary.
            let t = if seg.derivative_extended(lo).abs() <= seg.derivative_extended(hi).abs() {
                lo
            } else {
                hi
            };
            return MaxentSolution {
                t,
                clamped: false,
                iterations: steps,
                residual: Some(stationarity_gap(seg, t).abs()),
            };
        }
        steps += 1;
        let d = seg.derivative_extended(mid);
        if d > 0.0 {
            lo = mid;
        } else if d < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    MaxentSolution {
        t,
        clamped: false,
        iterations: steps,
        residual: Some(stationarity_gap(seg, t).abs()),
    }
}

/// Builds the segment for `mg` and solves it.
pub fn maximize_entropy(mg: &TripleMarginals, iterations: u32) -> Result<MaxentSolution> {
    Ok(solve_tmax(&build_segment(mg)?, iterations))
}

/// `t̃ = u1·u2·u3·u4 / (l1·l2·l3)`: pair-only cells times the all-absent cell,
/// over the single-only cells.
///
/// With the cells of the `t = 0` base point this approximates the maxent
/// triple frequency from above when that frequency is small relative to
/// every other cell. With the cells of the maxent distribution itself it
/// reproduces its triple frequency exactly.
pub fn closed_form_estimate(cells: &TripleCells) -> Result<f64> {
    let denominator: f64 = SINGLE_ONLY.iter().map(|&s| cells.get(s)).product();
    if SINGLE_ONLY.iter().any(|&s| cells.get(s) <= 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let numerator: f64 = PAIR_ONLY_AND_EMPTY.iter().map(|&s| cells.get(s)).product();
    Ok(numerator / denominator)
}

/// Range of [`closed_form_estimate`] when every cell carries relative error
/// up to `eps`. The extremes are the two corners where numerator and
/// denominator cells move in opposite directions.
pub fn perturbed_closed_form(cells: &TripleCells, eps: f64) -> Result<RangeInclusive<f64>> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidConfig(format!(
            "relative error must be in [0, 0.5), got {eps}"
        )));
    }
    let corner = |num: f64, den: f64| {
        let mut c = *cells.as_array();
        for s in PAIR_ONLY_AND_EMPTY {
            c[s as usize] *= num;
        }
        for s in SINGLE_ONLY {
            c[s as usize] *= den;
        }
        closed_form_estimate(&TripleCells(c))
    };
    let lo = corner(1.0 - eps, 1.0 + eps)?;
    let hi = corner(1.0 + eps, 1.0 - eps)?;
    Ok(lo..=hi)
}
