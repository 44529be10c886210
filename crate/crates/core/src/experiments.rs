//! Evaluation protocol: estimate triples on full data or on a Bernoulli
//! sample, then score the estimates against the true supports.
//!
//! Aggregation always runs over records in ascending triple-id order, so
//! outputs do not depend on how the per-triple work was scheduled.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::{EstimateRecord, Estimator};
use crate::support_counts::{count_supports, SupportCounts};
use crate::transactions::{sample_bernoulli, Dataset, ItemId, RawId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Full mode keeps triples with `occ > min`; sampled mode `occ >= min`.
    pub min_triple_occ: u64,
    /// Upper support bound for target triples in sampled mode.
    pub max_triple_occ: u64,
    pub sample_rate: f64,
    pub seed: u64,
    /// Fraction of most frequent triples counted as relevant.
    pub top_fraction: f64,
    /// Sampled mode reports a triple when its prediction is at least
    /// `report_factor · Δ`. Full mode always uses 1.
    pub report_factor: f64,
    pub solver_iterations: u32,
    /// Also score the closed-form estimate.
    pub with_closed_form: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            min_triple_occ: 30,
            max_triple_occ: 100,
            sample_rate: 0.01,
            seed: 0,
            top_fraction: 0.10,
            report_factor: 0.90,
            solver_iterations: crate::maxent::DEFAULT_ITERATIONS,
            with_closed_form: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return bad(format!(
                "top fraction must be in (0, 1], got {}",
                self.top_fraction
            ));
        }
        if !(self.report_factor > 0.0 && self.report_factor <= 1.0) {
            return bad(format!(
                "report factor must be in (0, 1], got {}",
                self.report_factor
            ));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return bad(format!(
                "sample rate must be in (0, 1], got {}",
                self.sample_rate
            ));
        }
        if self.max_triple_occ < self.min_triple_occ {
            return bad(format!(
                "max triple occurrence {} is below the minimum {}",
                self.max_triple_occ, self.min_triple_occ
            ));
        }
        Ok(())
    }

    /// Estimators scored by precision/recall in `mode`.
    pub fn scored_estimators(&self, mode: EvalMode) -> Vec<Estimator> {
        let mut out = vec![Estimator::Independence, Estimator::Maxent];
        if mode == EvalMode::Sampled {
            out.push(Estimator::Extrapolation);
        }
        if self.with_closed_form {
            out.push(Estimator::ClosedForm);
        }
        out
    }

    /// Baselines whose error is compared against maxent.
    pub fn ratio_baselines(&self) -> Vec<Estimator> {
        let mut out = vec![Estimator::Independence, Estimator::Extrapolation];
        if self.with_closed_form {
            out.push(Estimator::ClosedForm);
        }
        out
    }

    pub fn report_factor_for(&self, mode: EvalMode) -> f64 {
        match mode {
            EvalMode::Full => 1.0,
            EvalMode::Sampled => self.report_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Full,
    Sampled,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Full => "full",
            EvalMode::Sampled => "sampled",
        }
    }
}

/// Records of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub mode: EvalMode,
    pub records: Vec<EstimateRecord>,
    /// Triples whose marginals were rejected, with the reason.
    pub warnings: Vec<([RawId; 3], String)>,
    /// Sampled mode: targets skipped because a pair is absent from the sample.
    pub dropped: usize,
    /// Triples that passed the support filter.
    pub targets: usize,
    pub sample_size: Option<u64>,
}

impl EvalOutput {
    /// Fraction of targets that produced a warning.
    pub fn warning_fraction(&self) -> f64 {
        if self.targets == 0 {
            0.0
        } else {
            self.warnings.len() as f64 / self.targets as f64
        }
    }
}

fn evaluate_all(
    stats: &SupportCounts,
    d: &Dataset,
    targets: &[([ItemId; 3], u64)],
    m_full: u64,
    iterations: u32,
) -> (Vec<EstimateRecord>, Vec<([RawId; 3], String)>) {
    let results: Vec<_> = targets
        .par_iter()
        .map(|&(ids, occ)| {
            let raw = ids.map(|i| d.raw_id(i));
            EstimateRecord::evaluate(stats, ids, raw, occ, m_full, iterations)
                .map_err(|e| (raw, e.to_string()))
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(w) => warnings.push(w),
        }
    }
    (records, warnings)
}

/// Estimates every triple with `occ > min_triple_occ` from full-data supports.
pub fn run_full_eval(d: &Dataset, cfg: &EvalConfig) -> Result<EvalOutput> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = count_supports(d, true);
    let targets: Vec<_> = counts
        .occurring_triples()
        .into_iter()
        .filter(|&(_, occ)| occ > cfg.min_triple_occ)
        .collect();
    let (records, warnings) = evaluate_all(&counts, d, &targets, counts.m(), cfg.solver_iterations);
    Ok(EvalOutput {
        mode: EvalMode::Full,
        records,
        warnings,
        dropped: 0,
        targets: targets.len(),
        sample_size: None,
    })
}

/// Estimates the full-data support of every triple with
/// `min_triple_occ <= occ <= max_triple_occ` using one Bernoulli sample.
///
/// Triples with a pair absent from the sample are dropped. All estimates use
/// sample statistics; predictions are scaled by the full dataset size.
pub fn run_sampled_eval(full: &Dataset, cfg: &EvalConfig) -> Result<EvalOutput> {
    cfg.validate()?;
    if full.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let full_counts = count_supports(full, true);
    let sample = sample_bernoulli(full, cfg.sample_rate, cfg.seed)?;
    if sample.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let stats = count_supports(&sample, true);
    let candidates: Vec<_> = full_counts
        .occurring_triples()
        .into_iter()
        .filter(|&(_, occ)| (cfg.min_triple_occ..=cfg.max_triple_occ).contains(&occ))
        .collect();
    let targets = candidates.len();
    let kept: Vec<_> = candidates
        .into_iter()
        .filter(|&([i, j, k], _)| {
            stats.pair(i, j) > 0 && stats.pair(i, k) > 0 && stats.pair(j, k) > 0
        })
        .collect();
    let dropped = targets - kept.len();
    let (records, warnings) =
        evaluate_all(&stats, full, &kept, full_counts.m(), cfg.solver_iterations);
    Ok(EvalOutput {
        mode: EvalMode::Sampled,
        records,
        warnings,
        dropped,
        targets,
        sample_size: Some(stats.m()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRecall {
    pub estimator: Estimator,
    /// `None` when nothing was reported.
    pub precision: Option<f64>,
    pub recall: f64,
    /// Relevance threshold Δ in occurrences.
    pub delta: u64,
    pub reported: usize,
    pub relevant: usize,
    pub hits: usize,
}

/// Rank `⌈fraction · n⌉` (1-based), guarding against float noise such as
/// `0.1 · 30 = 3.0000000000000004`.
fn top_rank(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Relevance threshold: support of the triple at rank `⌈top_fraction · T⌉`
/// in descending support order.
pub fn relevance_threshold(records: &[EstimateRecord], top_fraction: f64) -> Result<u64> {
    if records.is_empty() {
        return Err(Error::DegenerateInput("no triples to rank"));
    }
    let mut occ: Vec<u64> = records.iter().map(|r| r.occ_full).collect();
    occ.sort_unstable_by(|a, b| b.cmp(a));
    Ok(occ[top_rank(top_fraction, occ.len()) - 1])
}

/// Precision and recall of reporting triples whose predicted support is at
/// least `report_factor · Δ`, against the triples with support `>= Δ`.
pub fn precision_recall(
    records: &[EstimateRecord],
    estimator: Estimator,
    top_fraction: f64,
    report_factor: f64,
) -> Result<PrecisionRecall> {
    let delta = relevance_threshold(records, top_fraction)?;
    let cutoff = report_factor * delta as f64;
    let (mut reported, mut relevant, mut hits) = (0, 0, 0);
    for r in records {
        let is_relevant = r.occ_full >= delta;
        let is_reported = r.predicted(estimator).is_some_and(|p| p >= cutoff);
        relevant += is_relevant as usize;
        reported += is_reported as usize;
        hits += (is_relevant && is_reported) as usize;
    }
    Ok(PrecisionRecall {
        estimator,
        precision: (reported > 0).then(|| hits as f64 / reported as f64),
        recall: hits as f64 / relevant as f64,
        delta,
        reported,
        relevant,
        hits,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRatio {
    pub baseline: Estimator,
    /// Mean of `|baseline - occ| / |maxent - occ|` over the included terms.
    pub ratio: f64,
    pub n_terms: usize,
    /// Terms skipped because maxent was exactly right.
    pub excluded_zero_denoms: usize,
}

/// Normalized absolute error ratio of `baseline` against maxent, in
/// predicted occurrences.
pub fn error_ratio(records: &[EstimateRecord], baseline: Estimator) -> Result<ErrorRatio> {
    let mut sum = 0.0;
    let (mut n_terms, mut excluded) = (0, 0);
    for r in records {
        let occ = r.occ_full as f64;
        let den = (r.predicted(Estimator::Maxent).unwrap_or(f64::NAN) - occ).abs();
        let Some(num) = r.predicted(baseline).map(|p| (p - occ).abs()) else {
            continue;
        };
        if den == 0.0 {
            excluded += 1;
            continue;
        }
        sum += num / den;
        n_terms += 1;
    }
    if n_terms == 0 {
        return Err(Error::DegenerateInput(
            "no terms with a non-zero maxent error",
        ));
    }
    Ok(ErrorRatio {
        baseline,
        ratio: sum / n_terms as f64,
        n_terms,
        excluded_zero_denoms: excluded,
    })
}

/// Ratios for every baseline in `baselines`; baselines without usable terms
/// are skipped.
pub fn error_ratio_table(records: &[EstimateRecord], baselines: &[Estimator]) -> Vec<ErrorRatio> {
    baselines
        .iter()
        .filter_map(|&b| error_ratio(records, b).ok())
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Estimated vs. true occurrences, one row per triple.
pub fn write_concentration(records: &[EstimateRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "triple_i",
        "triple_j",
        "triple_k",
        "occ",
        "est_ind",
        "est_maxent",
        "est_extrap",
        "est_closed",
    ])?;
    for r in records {
        w.write_record([
            r.raw[0].to_string(),
            r.raw[1].to_string(),
            r.raw[2].to_string(),
            r.occ_full.to_string(),
            fmt_opt(r.predicted(Estimator::Independence)),
            fmt_opt(r.predicted(Estimator::Maxent)),
            fmt_opt(r.predicted(Estimator::Extrapolation)),
            fmt_opt(r.predicted(Estimator::ClosedForm)),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Precision/recall rows. An empty reported set has precision `NA`.
pub fn write_prf(
    rows: &[PrecisionRecall],
    dataset: &str,
    mode: EvalMode,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "mode",
        "estimator",
        "precision",
        "recall",
        "delta",
        "reported",
        "relevant",
    ])?;
    for r in rows {
        w.write_record([
            dataset.to_string(),
            mode.name().to_string(),
            r.estimator.name().to_string(),
            r.precision
                .map(|p| p.to_string())
                .unwrap_or_else(|| "NA".into()),
            r.recall.to_string(),
            r.delta.to_string(),
            r.reported.to_string(),
            r.relevant.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_ratios(rows: &[ErrorRatio], dataset: &str, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "baseline",
        "ratio",
        "n_terms",
        "excluded_zero_denoms",
    ])?;
    for r in rows {
        w.write_record([
            dataset.to_string(),
            r.baseline.name().to_string(),
            r.ratio.to_string(),
            r.n_terms.to_string(),
            r.excluded_zero_denoms.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
