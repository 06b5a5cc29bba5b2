//! Active learning of the limit-state surface with bootstrap replicates.
//!
//! Each iteration fits a sparse chaos expansion to the current design,
//! builds bootstrap replicates of it, and classifies a fixed Monte Carlo
//! pool with every replicate. The spread of the replicate failure
//! probabilities decides convergence; the pool points the replicates
//! disagree on most are added to the design.

mod enrichment;
mod estimate;
mod kmeans;
mod limit_state;
mod pool;
mod run;

pub use enrichment::{design_mask, enrich_multi, enrich_single, margin_set, EnrichmentConfig};
pub use estimate::{
    beta_index, closest_to_surface, convergence_criterion, mcs_pf, pf_bounds, replicate_pfs, scan_pool, u_fbr, PoolScan,
};
pub use kmeans::{kmeans, Clustering};
pub use limit_state::{Comparison, FnModel, LimitState, Model};
pub use pool::{CandidatePool, CHUNK_ROWS};
pub use run::{
    reference_pf, run_abpce, run_abpce_observed, AbpceConfig, AbpceResult, ConvergenceConfig, InitialDesign,
    InitialDesignKind, IterationRecord,
};
