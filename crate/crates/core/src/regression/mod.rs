//! Least-squares estimation of chaos coefficients with sparse support
//! selection.

mod adaptive;
mod lars;
mod loo;
mod ols;

pub use adaptive::{adaptive_fit, adaptive_fit_standard, AdaptiveConfig, ExperimentalDesign, PceModel};
pub use lars::{hybrid_lars_fit, lars_path};
pub use loo::{correction_factor, leverages, loo_error, sample_variance};
use nalgebra::DVector;
pub use ols::{ols_fit, OlsSolution, RANK_TOLERANCE};

pub(crate) use lars::improves;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    /// One entry per basis term, zero off the support.
    pub coefficients: DVector<f64>,
    /// Selected basis terms, ascending.
    pub support: Vec<usize>,
    pub loo_error: f64,
    pub n_samples: usize,
    pub rank_deficient: bool,
}
