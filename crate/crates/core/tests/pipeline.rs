mod common;

use std::collections::BTreeMap;

use common::{brute_force_supports, fixture_path};
use maxent_triples::estimators::Estimator;
use maxent_triples::experiments::{self, EvalConfig};
use maxent_triples::support_counts::count_supports;
use maxent_triples::transactions::{
    load_transactions, prune_singletons, sample_bernoulli, Dataset,
};

fn fixture_text() -> String {
    std::fs::read_to_string(fixture_path()).unwrap()
}

fn raw_triple_counts(oracle: &BTreeMap<Vec<u64>, u64>) -> BTreeMap<[u64; 3], u64> {
    oracle
        .iter()
        .filter(|(k, _)| k.len() == 3)
        .map(|(k, &v)| ([k[0], k[1], k[2]], v))
        .collect()
}

#[test]
fn fixture_shape() {
    // Frozen from a line scanner run over mini.dat.
    let d = load_transactions(fixture_path()).unwrap();
    assert_eq!(d.len(), 1000);
    assert_eq!(d.n_items(), 48);
}

#[test]
fn counts_match_subset_enumeration() {
    let d = load_transactions(fixture_path()).unwrap();
    let c = count_supports(&d, true);
    let (m, oracle) = brute_force_supports(&fixture_text());
    assert_eq!(c.m(), m);
    let dense = |r: u64| d.dense_id(r).unwrap();
    for (set, &n) in &oracle {
        let ids: Vec<_> = set.iter().map(|&r| dense(r)).collect();
        assert_eq!(c.count(&ids).unwrap(), n, "{set:?}");
    }
    let triples = c.occurring_triples();
    assert_eq!(
        triples.len(),
        oracle.keys().filter(|k| k.len() == 3).count()
    );
    let pairs_present = (0..48)
        .flat_map(|i| (i + 1..48).map(move |j| (i, j)))
        .filter(|&(i, j)| c.pair(i, j) > 0)
        .count();
    assert_eq!(
        pairs_present,
        oracle.keys().filter(|k| k.len() == 2).count()
    );
}

#[test]
fn pair_frequency_is_count_over_m() {
    let d = load_transactions(fixture_path()).unwrap();
    let c = count_supports(&d, false);
    let (_, oracle) = brute_force_supports(&fixture_text());
    let raw = d.raw_ids();
    let (a, b) = (raw[0].min(raw[1]), raw[0].max(raw[1]));
    let expected = oracle.get(&vec![a, b]).copied().unwrap_or(0) as f64 / 1000.0;
    let got = c.frequency(&[0, 1]).unwrap();
    assert!((got - expected).abs() <= 1e-15, "{got} vs {expected}");
}

#[test]
fn thread_count_does_not_change_counts() {
    let d = load_transactions(fixture_path()).unwrap();
    let reference = count_supports(&d, true);
    for n in [1, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap();
        assert_eq!(pool.install(|| count_supports(&d, true)), reference);
    }
}

#[test]
fn full_eval_covers_exactly_the_supported_triples() {
    let d = load_transactions(fixture_path()).unwrap();
    let cfg = EvalConfig::default();
    let out = experiments::run_full_eval(&d, &cfg).unwrap();
    let (_, oracle) = brute_force_supports(&fixture_text());
    let expected: BTreeMap<[u64; 3], u64> = raw_triple_counts(&oracle)
        .into_iter()
        .filter(|&(_, n)| n > 30)
        .collect();
    assert_eq!(out.targets, expected.len());
    assert!(out.warnings.is_empty());
    let got: BTreeMap<[u64; 3], u64> = out
        .records
        .iter()
        .map(|r| {
            let mut raw = r.raw;
            raw.sort();
            (raw, r.occ_full)
        })
        .collect();
    assert_eq!(got, expected);
    for r in &out.records {
        assert_eq!(r.m_full, 1000);
        // Estimates are frequencies of a feasible distribution.
        assert!(r.maxent > 0.0 && r.maxent <= 1.0);
    }
}

#[test]
fn full_eval_scores_are_in_range() {
    let d = load_transactions(fixture_path()).unwrap();
    let cfg = EvalConfig::default();
    let out = experiments::run_full_eval(&d, &cfg).unwrap();
    for est in cfg.scored_estimators(experiments::EvalMode::Full) {
        let pr = experiments::precision_recall(&out.records, est, cfg.top_fraction, 1.0).unwrap();
        assert!(pr.recall >= 0.0 && pr.recall <= 1.0);
        assert!(pr.precision.is_none_or(|p| (0.0..=1.0).contains(&p)));
        assert!(pr.relevant >= (out.records.len() as f64 * cfg.top_fraction).ceil() as usize);
    }
}

#[test]
fn toy_dataset_reports_its_only_frequent_triple() {
    // {1,2,3} occurs 31 times, everything else is background noise.
    let mut rows: Vec<Vec<u64>> = (0..31).map(|_| vec![1, 2, 3]).collect();
    rows.extend((0..200u64).map(|i| vec![10 + i % 5, 20 + i % 7]));
    let d = Dataset::from_raw(rows);
    let out = experiments::run_full_eval(&d, &EvalConfig::default()).unwrap();
    assert_eq!(out.records.len(), 1);
    let r = &out.records[0];
    assert_eq!(r.occ_full, 31);
    assert_eq!(r.raw, [1, 2, 3]);
    // Each pair equals the triple, so the maxent estimate is forced to it.
    assert!((r.predicted(Estimator::Maxent).unwrap() - 31.0).abs() < 1e-6);
}

#[test]
fn sampling_everything_makes_extrapolation_exact() {
    let d = load_transactions(fixture_path()).unwrap();
    let cfg = EvalConfig {
        sample_rate: 1.0,
        ..EvalConfig::default()
    };
    let out = experiments::run_sampled_eval(&d, &cfg).unwrap();
    assert_eq!(out.sample_size, Some(1000));
    assert_eq!(out.dropped, 0);
    assert!(!out.records.is_empty());
    for r in &out.records {
        let p = r.predicted(Estimator::Extrapolation).unwrap();
        assert!(
            (p - r.occ_full as f64).abs() < 1e-9,
            "{p} vs {}",
            r.occ_full
        );
    }
    let ratio = experiments::error_ratio(&out.records, Estimator::Extrapolation).unwrap();
    assert_eq!(ratio.ratio, 0.0);
}

#[test]
fn dropped_triples_match_a_recount_of_the_sample() {
    let d = load_transactions(fixture_path()).unwrap();
    let cfg = EvalConfig {
        sample_rate: 0.05,
        seed: 3,
        ..EvalConfig::default()
    };
    let out = experiments::run_sampled_eval(&d, &cfg).unwrap();

    let sample = sample_bernoulli(&d, cfg.sample_rate, cfg.seed).unwrap();
    let raw_rows: Vec<String> = sample
        .transactions()
        .iter()
        .map(|t| {
            t.items()
                .iter()
                .map(|&i| d.raw_id(i).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let (sample_m, sample_oracle) = brute_force_supports(&raw_rows.join("\n"));
    let (_, full_oracle) = brute_force_supports(&fixture_text());
    let targets: Vec<[u64; 3]> = raw_triple_counts(&full_oracle)
        .into_iter()
        .filter(|&(_, n)| (30..=100).contains(&n))
        .map(|(k, _)| k)
        .collect();
    let dropped = targets
        .iter()
        .filter(|[a, b, c]| {
            [vec![*a, *b], vec![*a, *c], vec![*b, *c]]
                .iter()
                .any(|p| !sample_oracle.contains_key(p))
        })
        .count();
    assert_eq!(out.sample_size, Some(sample_m));
    assert_eq!(out.targets, targets.len());
    assert_eq!(out.dropped, dropped);
    assert_eq!(
        out.records.len() + out.warnings.len(),
        targets.len() - dropped
    );
}

#[test]
fn one_percent_sample_sees_low_support_triples_about_once() {
    // At rate .01 a triple with at most 100 occurrences is expected at most
    // once in the sample; averaged over seeds the observed rate agrees.
    let d = load_transactions(fixture_path()).unwrap();
    let c = count_supports(&d, true);
    let targets: Vec<_> = c
        .occurring_triples()
        .into_iter()
        .filter(|&(_, n)| (30..=100).contains(&n))
        .collect();
    let expected: f64 =
        targets.iter().map(|&(_, n)| n as f64 * 0.01).sum::<f64>() / targets.len() as f64;
    assert!(expected <= 1.0);
    let seeds = 200;
    let mut seen = 0u64;
    for seed in 0..seeds {
        let s = count_supports(&sample_bernoulli(&d, 0.01, seed).unwrap(), true);
        seen += targets
            .iter()
            .map(|&(ids, _)| s.triple(ids).unwrap_or(0))
            .sum::<u64>();
    }
    let observed = seen as f64 / (seeds as f64 * targets.len() as f64);
    assert!(
        (observed - expected).abs() < 0.1 * expected,
        "{observed} vs {expected}"
    );
}

#[test]
fn pruning_the_fixture_matches_a_direct_filter() {
    let d = load_transactions(fixture_path()).unwrap();
    let (_, oracle) = brute_force_supports(&fixture_text());
    let keep: Vec<u64> = oracle
        .iter()
        .filter(|(k, &n)| k.len() == 1 && n >= 100)
        .map(|(k, _)| k[0])
        .collect();
    let p = prune_singletons(&d, 100);
    assert_eq!(p.len(), 1000);
    let mut kept: Vec<u64> = p.raw_ids().to_vec();
    kept.sort();
    assert_eq!(kept, keep);
}
