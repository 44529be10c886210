//! Maximum-entropy frequency estimates for item triples.
//!
//! Given the singleton and pair supports of a transaction dataset, the joint
//! distribution of three boolean items is pinned down up to one free
//! parameter: the triple frequency `t`. The distributions consistent with the
//! seven known marginals form a segment `x + t·v`, and the entropy along that
//! segment is strictly concave. The maximum-entropy estimate is the unique
//! maximiser, found by bisection on the sign of the entropy derivative.
//!
//! Modules, bottom up:
//!
//! - [`transactions`]: FIMI-style loading, singleton pruning, seeded Bernoulli sampling.
//! - [`support_counts`]: exact singleton / pair / triple support counting.
//! - [`maxent`]: cell construction, feasible segment, entropy, solver and closed forms.
//! - [`estimators`]: independence, extrapolation, maxent, closed-form, `p*` and `p#`.
//! - [`experiments`]: full-data and sampled evaluation, precision/recall, error ratios.
//! - [`cli`]: the `maxent-triples` command line and its run manifests.

#![forbid(unsafe_code)]

pub mod cli;
mod error;
pub mod estimators;
pub mod experiments;
pub mod maxent;
pub mod support_counts;
pub mod transactions;

pub use error::{Error, Result};
pub use estimators::EstimateRecord;
pub use maxent::{FeasibleSegment, MaxentSolution, TripleCells, TripleMarginals};
pub use support_counts::SupportCounts;
pub use transactions::{Dataset, Transaction};
