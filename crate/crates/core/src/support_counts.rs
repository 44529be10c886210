//! Exact support counts for singletons, pairs and (optionally) triples.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::transactions::{Dataset, ItemId, Transaction};
use crate::{Error, Result};

/// Transactions per counting chunk.
const CHUNK: usize = 4096;

/// Integer supports of all singletons and pairs of a dataset, and of the
/// occurring triples when requested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCounts {
    m: u64,
    singles: Vec<u64>,
    /// Upper triangle, row-major: `(i, j)` with `i < j`.
    pairs: Vec<u64>,
    triples: Option<HashMap<[ItemId; 3], u64>>,
}

fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SupportCounts {
    fn zeros(n: usize, with_triples: bool) -> Self {
        Self {
            m: 0,
            singles: vec![0; n],
            pairs: vec![0; n * n.saturating_sub(1) / 2],
            triples: with_triples.then(HashMap::new),
        }
    }

    fn add(&mut self, t: &Transaction) {
        let n = self.singles.len();
        let items = t.items();
        self.m += 1;
        for (a, &i) in items.iter().enumerate() {
            self.singles[i as usize] += 1;
            for (b, &j) in items.iter().enumerate().skip(a + 1) {
                self.pairs[pair_slot(n, i as usize, j as usize)] += 1;
                if let Some(triples) = &mut self.triples {
                    for &k in &items[b + 1..] {
                        *triples.entry([i, j, k]).or_insert(0) += 1;
                    }
                }
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.m += other.m;
        for (a, b) in self.singles.iter_mut().zip(other.singles) {
            *a += b;
        }
        for (a, b) in self.pairs.iter_mut().zip(other.pairs) {
            *a += b;
        }
        if let (Some(mine), Some(theirs)) = (&mut self.triples, other.triples) {
            for (key, c) in theirs {
                *mine.entry(key).or_insert(0) += c;
            }
        }
        self
    }

    /// Total number of transactions.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n_items(&self) -> usize {
        self.singles.len()
    }

    pub fn single(&self, i: ItemId) -> u64 {
        self.singles[i as usize]
    }

    pub fn singles(&self) -> &[u64] {
        &self.singles
    }

    /// Support of `{i, j}`; argument order does not matter.
    pub fn pair(&self, i: ItemId, j: ItemId) -> u64 {
        assert_ne!(i, j, "pair needs two distinct items");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs[pair_slot(self.n_items(), a as usize, b as usize)]
    }

    pub fn has_triples(&self) -> bool {
        self.triples.is_some()
    }

    /// Support of a triple, in any order. `None` when triples were not counted.
    pub fn triple(&self, ids: [ItemId; 3]) -> Option<u64> {
        let mut key = ids;
        key.sort_unstable();
        self.triples
            .as_ref()
            .map(|t| t.get(&key).copied().unwrap_or(0))
    }

    /// Occurring triples (count > 0) in ascending id order.
    pub fn occurring_triples(&self) -> Vec<([ItemId; 3], u64)> {
        let mut out: Vec<_> = self
            .triples
            .iter()
            .flatten()
            .map(|(&k, &c)| (k, c))
            .collect();
        out.sort_unstable();
        out
    }

    /// Support of an itemset of one to three distinct ids.
    pub fn count(&self, itemset: &[ItemId]) -> Result<u64> {
        match *itemset {
            [i] => Ok(self.single(i)),
            [i, j] => Ok(self.pair(i, j)),
            [i, j, k] => self
                .triple([i, j, k])
                .ok_or(Error::DegenerateInput("triple supports were not counted")),
            _ => Err(Error::DegenerateInput("itemsets must have 1 to 3 items")),
        }
    }

    /// Empirical frequency `count / m`.
    pub fn frequency(&self, itemset: &[ItemId]) -> Result<f64> {
        if self.m == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(self.count(itemset)? as f64 / self.m as f64)
    }

    /// Writes the counts as CSV with header `arity,i,j,k,count`.
    ///
    /// An arity-0 row carries `m`. Every singleton is written; pairs and
    /// triples only when non-zero. Ids are dense.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["arity", "i", "j", "k", "count"])?;
        w.write_record(["0", "", "", "", &self.m.to_string()])?;
        for (i, c) in self.singles.iter().enumerate() {
            w.write_record(["1", &i.to_string(), "", "", &c.to_string()])?;
        }
        let n = self.n_items();
        for i in 0..n {
            for j in i + 1..n {
                let c = self.pairs[pair_slot(n, i, j)];
                if c > 0 {
                    w.write_record(["2", &i.to_string(), &j.to_string(), "", &c.to_string()])?;
                }
            }
        }
        for ([i, j, k], c) in self.occurring_triples() {
            w.write_record([
                "3".to_string(),
                i.to_string(),
                j.to_string(),
                k.to_string(),
                c.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads counts written by [`SupportCounts::write_csv`]. Triples are
    /// present in the result iff the file has any arity-3 row.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut m = None;
        let mut singles = Vec::new();
        let mut pairs = Vec::new();
        let mut triples: Option<HashMap<[ItemId; 3], u64>> = None;
        let bad = |msg: &str| Error::InvalidConfig(format!("counts csv: {msg}"));
        let mut r = csv::Reader::from_reader(input);
        for row in r.records() {
            let row = row?;
            let field = |idx: usize| -> Result<u64> {
                row.get(idx)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(&format!("bad field {idx} in {row:?}")))
            };
            let count = field(4)?;
            match field(0)? {
                0 => m = Some(count),
                1 => {
                    let i = field(1)? as usize;
                    if i != singles.len() {
                        return Err(bad("singleton rows must be dense and ordered"));
                    }
                    singles.push(count);
                }
                2 => pairs.push((field(1)? as ItemId, field(2)? as ItemId, count)),
                3 => {
                    let key = [
                        field(1)? as ItemId,
                        field(2)? as ItemId,
                        field(3)? as ItemId,
                    ];
                    triples.get_or_insert_with(HashMap::new).insert(key, count);
                }
                a => return Err(bad(&format!("unsupported arity {a}"))),
            }
        }
        let m = m.ok_or_else(|| bad("missing arity-0 row"))?;
        let mut counts = Self::zeros(singles.len(), false);
        counts.m = m;
        counts.singles = singles;
        let n = counts.n_items();
        for (i, j, c) in pairs {
            if !(i < j && (j as usize) < n) {
                return Err(bad(&format!("pair ({i},{j}) out of order or range")));
            }
            counts.pairs[pair_slot(n, i as usize, j as usize)] = c;
        }
        if let Some(t) = &triples {
            if t.keys()
                .any(|&[i, j, k]| !(i < j && j < k && (k as usize) < n))
            {
                return Err(bad("triple out of order or range"));
            }
        }
        counts.triples = triples;
        Ok(counts)
    }
}

/// Counts supports over all transactions of `d`.
///
/// Chunks are counted in parallel and merged with integer addition, so the
/// result does not depend on the number of worker threads.
pub fn count_supports(d: &Dataset, with_triples: bool) -> SupportCounts {
    let n = d.n_items();
    d.transactions()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut c = SupportCounts::zeros(n, with_triples);
            for t in chunk {
                c.add(t);
            }
            c
        })
        .reduce(
            || SupportCounts::zeros(n, with_triples),
            SupportCounts::merge,
        )
}
