//! Aggregation of crowdsourced categorical votes into consensus labels.
//!
//! The crate implements four batch aggregators over a shared set of
//! estimation kernels:
//!
//! - majority voting with seeded tie-breaking,
//! - Dawid-Skene (soft EM over annotator confusion matrices),
//! - Fast Dawid-Skene (hard / classification EM),
//! - a Hybrid that runs Dawid-Skene until the class marginals settle and
//!   then finishes with Fast Dawid-Skene.
//!
//! On top of those sit a streaming variant ([`online`]), a multi-label
//! extension ([`multilabel`]) and a simulation / benchmarking harness
//! ([`bench`]).
//!
//! ```
//! use fastds::{aggregate, Algorithm, AggregationConfig, Dataset};
//!
//! let d = Dataset::from_records(
//!     [("q0", "a0", 1), ("q0", "a1", 1), ("q1", "a0", 0), ("q1", "a1", 0)],
//!     None,
//! )
//! .unwrap();
//! let cfg = AggregationConfig { algorithm: Algorithm::Fds, ..Default::default() };
//! let result = aggregate(&d, &cfg).unwrap();
//! assert_eq!(result.labels(), vec![1, 0]);
//! assert!(result.converged);
//! ```

pub mod aggregate;
pub mod bench;
pub mod cli;
pub mod dataset;
mod error;
pub mod estimation;
pub mod multilabel;
pub mod online;
pub mod plot;
pub mod report;
pub mod seed;

pub use aggregate::{aggregate, AggregationConfig, AggregationResult, Algorithm, TraceEntry};
pub use dataset::{Dataset, GoldLabels};
pub use error::{Error, Result};
pub use estimation::{Assignment, Parameters};
