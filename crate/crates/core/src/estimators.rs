//! Triple-frequency estimators behind one record type.
//!
//! `p*` and `p#` are not symmetric in the three items. They use the fixed
//! assignment X = first, Y = second, W = third item in ascending dense order.

use std::fmt;

use crate::maxent::{self, TripleCells, TripleMarginals};
use crate::support_counts::SupportCounts;
use crate::transactions::{Dataset, ItemId, RawId};
use crate::{Error, Result};

/// θ^i = s1·s2·s3.
pub fn independence_estimate(s1: f64, s2: f64, s3: f64) -> f64 {
    s1 * s2 * s3
}

/// θ^e = occurrences in the sample / sample size.
pub fn extrapolation_estimate(occ_sample: u64, sample_size: u64) -> Result<f64> {
    if sample_size == 0 {
        return Err(Error::EmptyDataset);
    }
    if occ_sample > sample_size {
        return Err(Error::InvalidConfig(format!(
            "{occ_sample} occurrences in a sample of {sample_size}"
        )));
    }
    Ok(occ_sample as f64 / sample_size as f64)
}

/// θ^m with the default number of bisection steps.
pub fn maxent_estimate(mg: &TripleMarginals) -> Result<f64> {
    maxent_estimate_with(mg, maxent::DEFAULT_ITERATIONS)
}

pub fn maxent_estimate_with(mg: &TripleMarginals, iterations: u32) -> Result<f64> {
    Ok(maxent::maximize_entropy(mg, iterations)?.t)
}

fn conditionals(mg: &TripleMarginals) -> Result<([f64; 3], [f64; 3])> {
    let s = mg.singles();
    if s.iter().any(|&v| v <= 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok((s, mg.pairs()))
}

/// `p* = p(Y|X)·p(X|W)·p(W|Y)`.
pub fn pstar_estimate(mg: &TripleMarginals) -> Result<f64> {
    let ([sx, sy, sw], [pxy, pxw, pyw]) = conditionals(mg)?;
    Ok((pxy / sx) * (pxw / sw) * (pyw / sy))
}

/// `p# = p(W|X)·p(W|Y) / p(W)`, an estimate of `Pr(W | X, Y)`.
pub fn psharp_estimate(mg: &TripleMarginals) -> Result<f64> {
    let ([sx, sy, sw], [_, pxw, pyw]) = conditionals(mg)?;
    Ok((pxw / sx) * (pyw / sy) / sw)
}

/// Estimators compared in the experiments. `p#` is a conditional rather than
/// a joint frequency and is not listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Independence,
    Extrapolation,
    Maxent,
    ClosedForm,
    PStar,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Independence => "independence",
            Estimator::Extrapolation => "extrapolation",
            Estimator::Maxent => "maxent",
            Estimator::ClosedForm => "closed_form",
            Estimator::PStar => "pstar",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All estimates for one triple, plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub ids: [ItemId; 3],
    pub raw: [RawId; 3],
    /// Support of the triple in the full dataset.
    pub occ_full: u64,
    /// Size of the full dataset; predicted occurrences are frequency × this.
    pub m_full: u64,
    pub independence: f64,
    pub extrapolation: f64,
    pub maxent: f64,
    /// `t̃` at the `t = 0` base point; `None` when a single-only cell is not positive.
    pub closed_form: Option<f64>,
    /// `min(t̃, upper border)`.
    pub closed_form_clamped: Option<f64>,
    pub pstar: Option<f64>,
    pub psharp: Option<f64>,
}

impl EstimateRecord {
    /// Evaluates every estimator from the supports in `stats` (full data or a
    /// sample). `ids` must be three distinct ascending dense ids.
    pub fn evaluate(
        stats: &SupportCounts,
        ids: [ItemId; 3],
        raw: [RawId; 3],
        occ_full: u64,
        m_full: u64,
        iterations: u32,
    ) -> Result<Self> {
        let mg = TripleMarginals::from_counts(stats, ids)?;
        let [s1, s2, s3] = mg.singles();
        let occ_sample = stats
            .triple(ids)
            .ok_or(Error::DegenerateInput("triple supports were not counted"))?;
        let seg = maxent::build_segment(&mg)?;
        let solution = maxent::solve_tmax(&seg, iterations);
        let closed_form = maxent::closed_form_estimate(&TripleCells::from_array(*seg.base())).ok();
        Ok(Self {
            ids,
            raw,
            occ_full,
            m_full,
            independence: independence_estimate(s1, s2, s3),
            extrapolation: extrapolation_estimate(occ_sample, stats.m())?,
            maxent: solution.t,
            closed_form,
            closed_form_clamped: closed_form.map(|t| t.min(seg.upper())),
            pstar: pstar_estimate(&mg).ok(),
            psharp: psharp_estimate(&mg).ok(),
        })
    }

    /// Estimated frequency under `est`.
    pub fn frequency(&self, est: Estimator) -> Option<f64> {
        match est {
            Estimator::Independence => Some(self.independence),
            Estimator::Extrapolation => Some(self.extrapolation),
            Estimator::Maxent => Some(self.maxent),
            Estimator::ClosedForm => self.closed_form,
            Estimator::PStar => self.pstar,
        }
    }

    /// Estimated number of occurrences in the full dataset.
    pub fn predicted(&self, est: Estimator) -> Option<f64> {
        self.frequency(est).map(|f| f * self.m_full as f64)
    }
}

/// Estimates for one triple of raw ids from full-data statistics.
pub fn estimate_raw_triple(
    d: &Dataset,
    counts: &SupportCounts,
    raw: [RawId; 3],
    iterations: u32,
) -> Result<EstimateRecord> {
    let mut ids = [0; 3];
    for (slot, r) in ids.iter_mut().zip(raw) {
        *slot = d.dense_id(r).ok_or(Error::UnknownItem(r))?;
    }
    if ids[0] == ids[1] || ids[0] == ids[2] || ids[1] == ids[2] {
        return Err(Error::DegenerateInput("triple items must be distinct"));
    }
    ids.sort_unstable();
    let raw = ids.map(|i| d.raw_id(i));
    let occ = counts
        .triple(ids)
        .ok_or(Error::DegenerateInput("triple supports were not counted"))?;
    EstimateRecord::evaluate(counts, ids, raw, occ, counts.m(), iterations)
}
