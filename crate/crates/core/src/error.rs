use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading data, estimating, or running experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: `{token}` is not a non-negative integer item id")]
    Parse { line: usize, token: String },

    #[error("dataset has no transactions")]
    EmptyDataset,

    #[error("invalid marginals: {0}")]
    InvalidMarginals(String),

    #[error("cell {cell:03b} is negative ({value:e}) at t = {t:e}")]
    InfeasibleCells { cell: u8, value: f64, t: f64 },

    #[error("empty feasible segment: lower border {lower:e} exceeds upper border {upper:e}")]
    InfeasibleMarginals { lower: f64, upper: f64 },

    #[error("derivative undefined at t = {t:e}: a cell is not strictly positive")]
    Domain { t: f64 },

    #[error("zero denominator in closed-form estimate")]
    ZeroDenominator,

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("item {0} does not exist in the (pruned) dataset")]
    UnknownItem(u64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("counts file: {0}")]
    Csv(#[from] csv::Error),

    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
