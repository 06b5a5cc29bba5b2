use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::estimate::{closest_to_surface, PoolScan};
use super::kmeans::{kmeans, DEFAULT_MAX_ITER};
use super::pool::CandidatePool;
use crate::bootstrap::BootstrapEnsemble;
use crate::error::{Error, Result};
use crate::input::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnrichmentConfig {
    /// Points added per iteration.
    pub points_per_iteration: usize,
    pub kmeans_max_iter: usize,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        Self { points_per_iteration: 1, kmeans_max_iter: DEFAULT_MAX_ITER }
    }
}

impl EnrichmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_iteration < 1 {
            return Err(Error::InvalidParameter("points_per_iteration must be at least 1".into()));
        }
        if self.kmeans_max_iter < 1 {
            return Err(Error::InvalidParameter("kmeans_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

fn row_key(values: impl Iterator<Item = f64>) -> Vec<u64> {
    values.map(f64::to_bits).collect()
}

/// Mask of pool points whose standard coordinates coincide exactly with a
/// point of the design.
pub fn design_mask(pool: &CandidatePool, ed_standard: &SampleMatrix) -> Vec<bool> {
    let keys: HashSet<Vec<u64>> =
        (0..ed_standard.nrows()).map(|i| row_key(ed_standard.values().row(i).iter().copied())).collect();
    let u = pool.standard();
    (0..pool.len()).map(|i| keys.contains(&row_key(u.row(i).iter().copied()))).collect()
}

/// Pool points on which the replicates disagree (U_FBR < 1), outside the design.
pub fn margin_set(scan: &PoolScan, excluded: &[bool]) -> Vec<usize> {
    let b = scan.replicates as u32;
    scan.fail_counts.iter().enumerate().filter(|&(i, &f)| f > 0 && f < b && !excluded[i]).map(|(i, _)| i).collect()
}

/// Member of `candidates` with the smallest U_FBR; candidates are visited in
/// ascending index order so ties keep the lowest index.
fn argmin_u(scan: &PoolScan, candidates: &[usize]) -> Option<usize> {
    candidates.iter().copied().min_by_key(|&i| (scan.disagreement_key(i), i))
}

/// Next design point: the most disputed margin point, or, with an empty
/// margin, the point whose median replicate prediction is closest to zero.
pub fn enrich_single(
    scan: &PoolScan,
    ens: &BootstrapEnsemble,
    pool: &CandidatePool,
    excluded: &[bool],
) -> Result<usize> {
    let margin = margin_set(scan, excluded);
    if let Some(i) = argmin_u(scan, &margin) {
        return Ok(i);
    }
    closest_to_surface(ens, pool, excluded).ok_or(Error::PoolExhausted)
}

/// Up to `k` points from `k` clusters of the margin, each the most disputed
/// point of its cluster. Clustering runs in standard space.
pub fn enrich_multi<R: Rng + ?Sized>(
    scan: &PoolScan,
    ens: &BootstrapEnsemble,
    pool: &CandidatePool,
    excluded: &[bool],
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("enrichment needs k >= 1".into()));
    }
    let margin = margin_set(scan, excluded);
    if margin.is_empty() {
        return Ok(vec![enrich_single(scan, ens, pool, excluded)?]);
    }
    if margin.len() <= k {
        return Ok(margin);
    }
    if k == 1 {
        return Ok(vec![argmin_u(scan, &margin).expect("margin is non-empty")]);
    }
    let u = pool.standard();
    let points = DMatrix::from_fn(margin.len(), pool.dim(), |r, d| u[(margin[r], d)]);
    let clusters = kmeans(&points, k, max_iter, rng)?;
    let mut picked = Vec::with_capacity(clusters.k());
    for c in 0..clusters.k() {
        let members: Vec<usize> =
            margin.iter().zip(&clusters.labels).filter(|&(_, &l)| l == c).map(|(&i, _)| i).collect();
        if let Some(i) = argmin_u(scan, &members) {
            picked.push(i);
        }
    }
    picked.sort_unstable();
    picked.dedup();
    Ok(picked)
}
