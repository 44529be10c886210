//! Binary transaction datasets: loading, singleton pruning and sampling.
//!
//! Item tokens from the input file ("raw" ids) are remapped to dense ids in
//! `0..n_items` in order of first appearance. The mapping is kept on the
//! dataset so results can be reported in raw ids.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Item token as it appears in the input file.
pub type RawId = u64;

/// Contiguous item index in `0..n_items`.
pub type ItemId = u32;

/// One row of the dataset: strictly increasing dense item ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transaction(Vec<ItemId>);

impl Transaction {
    /// Sorts and deduplicates `items`.
    pub fn new(mut items: Vec<ItemId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self(items)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Where a dataset came from and what was done to it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub min_occ: Option<u64>,
    pub sample_rate: Option<f64>,
    pub seed: Option<u64>,
}

/// Immutable set of transactions over dense item ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    transactions: Vec<Transaction>,
    raw_ids: Vec<RawId>,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset from transactions given in raw ids, remapping them in
    /// first-appearance order.
    pub fn from_raw<I, T>(rows: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = RawId>,
    {
        let mut remap = Remapper::default();
        let transactions = rows
            .into_iter()
            .map(|row| Transaction::new(row.into_iter().map(|raw| remap.dense(raw)).collect()))
            .collect();
        Self {
            transactions,
            raw_ids: remap.raw_ids,
            provenance: Provenance::default(),
        }
    }

    /// Builds a dataset directly from dense transactions. `n_items` must
    /// exceed every id used; raw ids are the identity map.
    pub fn from_dense(transactions: Vec<Transaction>, n_items: usize) -> Result<Self> {
        if let Some(bad) = transactions
            .iter()
            .flat_map(|t| t.items())
            .find(|&&i| i as usize >= n_items)
        {
            return Err(Error::InvalidConfig(format!(
                "item {bad} out of range for {n_items} items"
            )));
        }
        Ok(Self {
            transactions,
            raw_ids: (0..n_items as RawId).collect(),
            provenance: Provenance::default(),
        })
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    /// Number of transactions, `m`.
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn n_items(&self) -> usize {
        self.raw_ids.len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn raw_id(&self, dense: ItemId) -> RawId {
        self.raw_ids[dense as usize]
    }

    pub fn raw_ids(&self) -> &[RawId] {
        &self.raw_ids
    }

    /// Dense id of a raw item, if it survived pruning.
    pub fn dense_id(&self, raw: RawId) -> Option<ItemId> {
        self.raw_ids
            .iter()
            .position(|&r| r == raw)
            .map(|i| i as ItemId)
    }

    /// Occurrence count of every dense item.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_items()];
        for t in &self.transactions {
            for &i in t.items() {
                counts[i as usize] += 1;
            }
        }
        counts
    }
}

#[derive(Default)]
struct Remapper {
    index: HashMap<RawId, ItemId>,
    raw_ids: Vec<RawId>,
}

impl Remapper {
    fn dense(&mut self, raw: RawId) -> ItemId {
        *self.index.entry(raw).or_insert_with(|| {
            self.raw_ids.push(raw);
            (self.raw_ids.len() - 1) as ItemId
        })
    }
}

/// Reads a FIMI-style file: one transaction per non-empty line, items as
/// whitespace-separated non-negative integers. LF and CRLF both work.
pub fn load_transactions(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut dataset = parse_transactions(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })?;
    dataset.provenance.source = Some(path.to_owned());
    Ok(dataset)
}

/// Parses transactions from any reader; see [`load_transactions`].
pub fn parse_transactions(reader: impl BufRead) -> Result<Dataset> {
    let mut remap = Remapper::default();
    let mut transactions = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: PathBuf::new(),
            source,
        })?;
        let mut items = Vec::new();
        for token in line.split_whitespace() {
            let raw: RawId = token.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                token: token.to_owned(),
            })?;
            items.push(remap.dense(raw));
        }
        if !items.is_empty() {
            transactions.push(Transaction::new(items));
        }
    }
    if transactions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        transactions,
        raw_ids: remap.raw_ids,
        provenance: Provenance::default(),
    })
}

/// Removes every item occurring in fewer than `min_occ` transactions.
///
/// Counts are taken once, before pruning. Surviving items keep their relative
/// dense order. Transactions that become empty stay in the dataset so that
/// `m` is unchanged.
pub fn prune_singletons(d: &Dataset, min_occ: u64) -> Dataset {
    let counts = d.item_counts();
    let mut new_id = vec![None; d.n_items()];
    let mut raw_ids = Vec::new();
    for (old, &c) in counts.iter().enumerate() {
        if c >= min_occ {
            new_id[old] = Some(raw_ids.len() as ItemId);
            raw_ids.push(d.raw_ids[old]);
        }
    }
    let transactions = d
        .transactions
        .iter()
        .map(|t| {
            Transaction(
                t.items()
                    .iter()
                    .filter_map(|&i| new_id[i as usize])
                    .collect(),
            )
        })
        .collect();
    Dataset {
        transactions,
        raw_ids,
        provenance: Provenance {
            min_occ: Some(min_occ),
            ..d.provenance.clone()
        },
    }
}

/// Uniform draw in `[0, 1)` deciding whether transaction `index` is sampled.
///
/// The value depends only on `(seed, index)`: it is read from position
/// `index` of a ChaCha8 keystream keyed by `seed`.
pub fn inclusion_draw(seed: u64, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // One f64 consumes one u64, i.e. two 32-bit words of the stream.
    rng.set_word_pos(2 * index as u128);
    rng.random::<f64>()
}

/// Keeps each transaction independently with probability `rate`.
///
/// Item ids and the raw mapping are unchanged, so supports of the sample and
/// of the source dataset are directly comparable.
pub fn sample_bernoulli(d: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sample rate must be in (0, 1], got {rate}"
        )));
    }
    let keep: Vec<bool> = (0..d.len())
        .into_par_iter()
        .map(|i| rate >= 1.0 || inclusion_draw(seed, i) < rate)
        .collect();
    let transactions = d
        .transactions
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(Dataset {
        transactions,
        raw_ids: d.raw_ids.clone(),
        provenance: Provenance {
            sample_rate: Some(rate),
            seed: Some(seed),
            ..d.provenance.clone()
        },
    })
}
