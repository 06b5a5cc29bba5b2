//! Active bootstrap polynomial chaos expansions for structural reliability.
//!
//! The crate builds a sparse polynomial chaos surrogate of a limit-state
//! function, quantifies its local error with bootstrap-resampled replicates
//! and uses the replicates' disagreement to enrich the experimental design
//! near the limit-state surface until the failure-probability estimate is
//! stable.

pub mod active;
pub mod basis;
pub mod benchmarks;
pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod input;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
