use nalgebra::{DMatrix, DVector};

use super::pool::CandidatePool;
use crate::basis::design_matrix_raw;
use crate::bootstrap::{empirical_quantile, BootstrapEnsemble};
use crate::error::{Error, Result};
use crate::input::normal::std_normal_isf;

/// Fraction of limit-state values in the failure domain `g ≤ 0`.
pub fn mcs_pf(g: &[f64]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    g.iter().filter(|&&v| v <= 0.0).count() as f64 / g.len() as f64
}

/// Smallest and largest replicate estimate.
pub fn pf_bounds(pfs: &[f64]) -> Result<(f64, f64)> {
    if pfs.is_empty() {
        return Err(Error::EmptyInput("replicate failure probabilities".into()));
    }
    Ok(pfs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p))))
}

/// `(pf⁺ - pf⁻) / pf_hat`, infinite when `pf_hat = 0`.
pub fn convergence_criterion(pf_hat: f64, pf_minus: f64, pf_plus: f64) -> f64 {
    if pf_hat <= 0.0 {
        return f64::INFINITY;
    }
    (pf_plus - pf_minus) / pf_hat
}

/// `|B_safe - B_fail| / B`: 1 when the replicates agree, 0 when split evenly.
pub fn u_fbr(b_safe: usize, b_fail: usize) -> f64 {
    let b = b_safe + b_fail;
    if b == 0 {
        return 1.0;
    }
    b_safe.abs_diff(b_fail) as f64 / b as f64
}

/// Generalised reliability index `-Φ⁻¹(pf)`.
pub fn beta_index(pf: f64) -> f64 {
    std_normal_isf(pf)
}

/// Classification of the candidate pool by the full-design surrogate and
/// every bootstrap replicate.
#[derive(Debug, Clone)]
pub struct PoolScan {
    pub pf_hat: f64,
    pub replicate_pf: Vec<f64>,
    /// Number of replicates predicting failure, per pool point.
    pub fail_counts: Vec<u32>,
    pub replicates: usize,
}

impl PoolScan {
    pub fn u_fbr(&self, i: usize) -> f64 {
        let fail = self.fail_counts[i] as usize;
        u_fbr(self.replicates - fail, fail)
    }

    /// `|B_safe - B_fail|`, the integer numerator of U_FBR.
    pub(crate) fn disagreement_key(&self, i: usize) -> usize {
        let fail = self.fail_counts[i] as usize;
        (self.replicates - fail).abs_diff(fail)
    }

    pub fn bounds(&self) -> (f64, f64) {
        pf_bounds(&self.replicate_pf).expect("ensembles have at least two replicates")
    }

    pub fn criterion(&self) -> f64 {
        let (lo, hi) = self.bounds();
        convergence_criterion(self.pf_hat, lo, hi)
    }
}

fn stacked_coefficients(ens: &BootstrapEnsemble) -> DMatrix<f64> {
    let s = ens.basis().len();
    let b = ens.replicates();
    let mut c = DMatrix::zeros(s, b + 1);
    c.set_column(0, ens.full_coefficients());
    c.columns_mut(1, b).copy_from(ens.coefficients());
    c
}

/// Sweep the pool once, block by block, classifying every point with the
/// full-design surrogate (column 0) and each replicate.
pub fn scan_pool(ens: &BootstrapEnsemble, pool: &CandidatePool) -> Result<PoolScan> {
    if pool.dim() != ens.basis().dim() {
        return Err(Error::DimensionMismatch { expected: ens.basis().dim(), got: pool.dim() });
    }
    let b = ens.replicates();
    let coef = stacked_coefficients(ens);
    let mut full_fail = 0usize;
    let mut rep_fail = vec![0usize; b];
    let mut fail_counts = vec![0u32; pool.len()];
    for (start, len) in pool.chunks() {
        let g = design_matrix_raw(ens.basis(), &pool.chunk(start, len)) * &coef;
        full_fail += g.column(0).iter().filter(|&&v| v <= 0.0).count();
        for (r, count) in rep_fail.iter_mut().enumerate() {
            for (i, &v) in g.column(r + 1).iter().enumerate() {
                if v <= 0.0 {
                    *count += 1;
                    fail_counts[start + i] += 1;
                }
            }
        }
    }
    let n = pool.len() as f64;
    Ok(PoolScan {
        pf_hat: full_fail as f64 / n,
        replicate_pf: rep_fail.iter().map(|&c| c as f64 / n).collect(),
        fail_counts,
        replicates: b,
    })
}

/// Failure probability of each replicate on the pool.
pub fn replicate_pfs(ens: &BootstrapEnsemble, pool: &CandidatePool) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(scan_pool(ens, pool)?.replicate_pf))
}

/// Pool point whose median replicate prediction is closest to zero, skipping
/// `excluded` points; ties go to the lowest index.
pub fn closest_to_surface(ens: &BootstrapEnsemble, pool: &CandidatePool, excluded: &[bool]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    let mut buf = Vec::with_capacity(ens.replicates());
    for (start, len) in pool.chunks() {
        let g = design_matrix_raw(ens.basis(), &pool.chunk(start, len)) * ens.coefficients();
        for i in 0..len {
            if excluded[start + i] {
                continue;
            }
            buf.clear();
            buf.extend(g.row(i).iter().copied());
            buf.sort_by(f64::total_cmp);
            let m = empirical_quantile(&buf, 0.5).abs();
            if best.is_none_or(|(v, _)| m < v) {
                best = Some((m, start + i));
            }
        }
    }
    best.map(|(_, i)| i)
}
