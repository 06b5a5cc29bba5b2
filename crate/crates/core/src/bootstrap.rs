//! Bootstrap ensembles of chaos expansions.
//!
//! Each replicate is fitted on `N` rows drawn with replacement from the
//! experimental design. Repeated rows stay repeated in the regression, which
//! amounts to integer-weighted least squares. The spread of the replicate
//! predictions at a point serves as a local error estimate of the surrogate.
//!
//! Empirical quantiles use linear interpolation between order statistics:
//! for sorted values `v₀ ≤ … ≤ v_{B-1}` and probability `q`, with
//! `h = (B - 1)·q`, the quantile is `v_⌊h⌋ + (h - ⌊h⌋)(v_⌊h⌋+1 - v_⌊h⌋)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{design_matrix, design_matrix_raw, BasisSet, MultiIndex};
use crate::error::{Error, Result};
use crate::input::{RandomVector, SampleMatrix, Space};
use crate::regression::{adaptive_fit_standard, ols_fit, AdaptiveConfig, ExperimentalDesign, PceModel};

pub const DEFAULT_REPLICATES: usize = 100;
/// Smallest replicate count accepted by the active-learning loop.
pub const MIN_REPLICATES_ACTIVE: usize = 20;
const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Support fixed by the full-design fit, coefficients refitted by OLS.
    #[default]
    Fast,
    /// Complete degree-adaptive sparse fit per replicate.
    Full,
}

/// `B` rows of `N` indices drawn uniformly with replacement from `0..N`.
pub fn resample_indices<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("bootstrap needs N >= 2, got {n}")));
    }
    if b < 2 {
        return Err(Error::InvalidParameter(format!("bootstrap needs B >= 2, got {b}")));
    }
    Ok((0..b).map(|_| (0..n).map(|_| rng.random_range(0..n)).collect()).collect())
}

fn distinct_count(row: &[usize], n: usize) -> usize {
    let mut seen = vec![false; n];
    row.iter().filter(|&&i| !std::mem::replace(&mut seen[i], true)).count()
}

/// Replicate surrogates sharing one coefficient layout.
///
/// Coefficients are stored against the union of all replicate supports, so
/// that one design matrix serves every replicate; in fast mode the union is
/// the full-fit support itself.
#[derive(Debug, Clone)]
pub struct BootstrapEnsemble {
    mode: BootstrapMode,
    basis: BasisSet,
    /// `|basis| × B`, column `b` holds replicate `b`.
    coefficients: DMatrix<f64>,
    /// Full-design coefficients on the same basis.
    full_coefficients: DVector<f64>,
    source_size: usize,
    random_vector: RandomVector,
}

impl BootstrapEnsemble {
    pub fn mode(&self) -> BootstrapMode {
        self.mode
    }

    pub fn replicates(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Coefficients of the full-design model on [`Self::basis`].
    pub fn full_coefficients(&self) -> &DVector<f64> {
        &self.full_coefficients
    }

    /// Non-zero terms of replicate `b`.
    pub fn support(&self, b: usize) -> Vec<usize> {
        self.coefficients.column(b).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, _)| k).collect()
    }

    /// `n × B` replicate predictions at `n` standard-space points given as
    /// rows of `u`.
    pub fn predict_standard_raw(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        design_matrix_raw(&self.basis, u) * &self.coefficients
    }

    /// Assemble an ensemble from explicit coefficients.
    pub fn from_parts(
        mode: BootstrapMode,
        basis: BasisSet,
        coefficients: DMatrix<f64>,
        full_coefficients: DVector<f64>,
        source_size: usize,
        random_vector: RandomVector,
    ) -> Result<Self> {
        if coefficients.nrows() != basis.len() || full_coefficients.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coefficients.nrows() });
        }
        if coefficients.ncols() < 2 {
            return Err(Error::InvalidParameter("an ensemble needs at least 2 replicates".into()));
        }
        if random_vector.dim() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: random_vector.dim() });
        }
        Ok(Self { mode, basis, coefficients, full_coefficients, source_size, random_vector })
    }
}

/// Fit `b` bootstrap replicates of `full_fit` on the design `(u, y)` given in
/// standard space.
pub fn fit_ensemble_standard<R: Rng + ?Sized>(
    u: &SampleMatrix,
    y: &DVector<f64>,
    full_fit: &PceModel,
    mode: BootstrapMode,
    b: usize,
    cfg: &AdaptiveConfig,
    rng: &mut R,
) -> Result<BootstrapEnsemble> {
    if u.space() != Space::StandardNormal {
        return Err(Error::InvalidParameter("expected standard-normal points".into()));
    }
    let n = u.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let mut rows = resample_indices(n, b, rng)?;
    for (k, row) in rows.iter_mut().enumerate() {
        let mut attempts = 0;
        while distinct_count(row, n) < 2 {
            if attempts == MAX_REDRAWS {
                return Err(Error::DegenerateResample { replicate: k });
            }
            *row = (0..n).map(|_| rng.random_range(0..n)).collect();
            attempts += 1;
        }
    }

    match mode {
        BootstrapMode::Fast => {
            let basis = full_fit.basis().clone();
            let psi = design_matrix(&basis, u)?;
            let mut coefficients = DMatrix::zeros(basis.len(), b);
            for (k, row) in rows.iter().enumerate() {
                let sol = ols_fit(&psi.select_rows(row), &y.select_rows(row))?;
                coefficients.set_column(k, &sol.coefficients);
            }
            Ok(BootstrapEnsemble {
                mode,
                basis,
                coefficients,
                full_coefficients: full_fit.coefficients().clone(),
                source_size: n,
                random_vector: full_fit.random_vector().clone(),
            })
        }
        BootstrapMode::Full => {
            let families = full_fit.basis().families().to_vec();
            let mut fits = Vec::with_capacity(b);
            for row in &rows {
                let sub_u = u.select_rows(row);
                let (basis, fit, _) = adaptive_fit_standard(&sub_u, &y.select_rows(row), &families, cfg)?;
                fits.push((basis, fit.coefficients));
            }
            let union: Vec<MultiIndex> = fits
                .iter()
                .flat_map(|(basis, _)| basis.indices().iter().cloned())
                .chain(full_fit.basis().indices().iter().cloned())
                .collect();
            let basis = BasisSet::from_indices(u.dim(), union, families, *full_fit.basis().scheme())?;
            let position: HashMap<&MultiIndex, usize> =
                basis.indices().iter().enumerate().map(|(k, a)| (a, k)).collect();
            let mut coefficients = DMatrix::zeros(basis.len(), b);
            for (k, (sub, coef)) in fits.iter().enumerate() {
                for (idx, value) in sub.indices().iter().zip(coef.iter()) {
                    coefficients[(position[idx], k)] = *value;
                }
            }
            let mut full_coefficients = DVector::zeros(basis.len());
            for (idx, value) in full_fit.basis().indices().iter().zip(full_fit.coefficients().iter()) {
                full_coefficients[position[idx]] = *value;
            }
            Ok(BootstrapEnsemble {
                mode,
                basis,
                coefficients,
                full_coefficients,
                source_size: n,
                random_vector: full_fit.random_vector().clone(),
            })
        }
    }
}

/// Fit `b` bootstrap replicates of `full_fit` on the experimental design.
pub fn fit_ensemble<R: Rng + ?Sized>(
    ed: &ExperimentalDesign,
    full_fit: &PceModel,
    mode: BootstrapMode,
    b: usize,
    cfg: &AdaptiveConfig,
    rng: &mut R,
) -> Result<BootstrapEnsemble> {
    let u = full_fit.random_vector().to_standard(ed.inputs())?;
    fit_ensemble_standard(&u, ed.responses(), full_fit, mode, b, cfg, rng)
}

/// `B × n` matrix whose row `b` is replicate `b` at every point of `x`.
pub fn ensemble_predict(ens: &BootstrapEnsemble, x: &SampleMatrix) -> Result<DMatrix<f64>> {
    if x.nrows() == 0 {
        return Ok(DMatrix::zeros(ens.replicates(), 0));
    }
    let u = match x.space() {
        Space::Physical => ens.random_vector.to_standard(x)?,
        Space::StandardNormal => x.clone(),
    };
    if u.dim() != ens.basis.dim() {
        return Err(Error::DimensionMismatch { expected: ens.basis.dim(), got: u.dim() });
    }
    Ok(ens.predict_standard_raw(u.values()).transpose())
}

/// Empirical quantile of sorted values by linear interpolation.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-column `(1 - level)/2` and `(1 + level)/2` quantiles of a `B × n`
/// prediction matrix.
pub fn quantile_band_from_predictions(predictions: &DMatrix<f64>, level: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("band level must lie in (0, 1), got {level}")));
    }
    let n = predictions.ncols();
    let mut lower = DVector::zeros(n);
    let mut upper = DVector::zeros(n);
    let mut buf = Vec::with_capacity(predictions.nrows());
    for j in 0..n {
        buf.clear();
        buf.extend(predictions.column(j).iter().copied());
        buf.sort_by(f64::total_cmp);
        lower[j] = empirical_quantile(&buf, (1.0 - level) / 2.0);
        upper[j] = empirical_quantile(&buf, (1.0 + level) / 2.0);
    }
    Ok((lower, upper))
}

/// Pointwise empirical band of the replicate predictions at `x`.
pub fn quantile_band(ens: &BootstrapEnsemble, x: &SampleMatrix, level: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("band level must lie in (0, 1), got {level}")));
    }
    quantile_band_from_predictions(&ensemble_predict(ens, x)?, level)
}
