//! Truncated multi-index sets and orthonormal polynomial bases.
//!
//! Every input coordinate lives in independent standard normal space, where
//! the orthonormal family is the normalised probabilists' Hermite
//! polynomials. Coordinates that carry an independent uniform marginal can
//! instead use normalised Legendre polynomials of the germ `t = 2Φ(u) - 1`,
//! which is uniform on `[-1, 1]` and affine in the physical variable.
//!
//! Basis terms are ordered by total degree, then lexicographically
//! (ascending) on the exponent vector, so term 0 is always the constant.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::input::normal::std_normal_cdf;
use crate::input::{MarginalDistribution, RandomVector, SampleMatrix};

/// Highest polynomial degree accepted anywhere in the crate.
pub const MAX_DEGREE: usize = 20;

/// Slack on the hyperbolic-norm comparison against `p`.
const QNORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyFamily {
    Hermite,
    Legendre,
}

/// Exponent vector of one multivariate basis polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of variables entering the term.
    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    pub fn q_norm(&self, q: f64) -> f64 {
        self.0.iter().map(|&a| (a as f64).powf(q)).sum::<f64>().powf(1.0 / q)
    }

    fn cmp_graded(&self, other: &Self) -> Ordering {
        self.total_degree().cmp(&other.total_degree()).then_with(|| self.0.cmp(&other.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationScheme {
    pub max_degree: usize,
    pub q_norm: f64,
    /// `None` means no limit on the interaction rank.
    pub max_interaction: Option<usize>,
}

impl TruncationScheme {
    pub fn total_degree(max_degree: usize) -> Self {
        Self { max_degree, q_norm: 1.0, max_interaction: None }
    }

    pub fn new(max_degree: usize, q_norm: f64, max_interaction: Option<usize>) -> Result<Self> {
        let scheme = Self { max_degree, q_norm, max_interaction };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_norm > 0.0 && self.q_norm <= 1.0) {
            return Err(Error::InvalidParameter(format!("q-norm must lie in (0, 1], got {}", self.q_norm)));
        }
        if self.max_degree > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "maximum degree {} exceeds the supported {MAX_DEGREE}",
                self.max_degree
            )));
        }
        if self.max_interaction == Some(0) {
            return Err(Error::InvalidParameter("maximum interaction must be >= 1".into()));
        }
        Ok(())
    }
}

/// Truncated polynomial basis over `dim` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    dim: usize,
    indices: Vec<MultiIndex>,
    families: Vec<PolyFamily>,
    scheme: TruncationScheme,
}

impl BasisSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn families(&self) -> &[PolyFamily] {
        &self.families
    }

    pub fn scheme(&self) -> &TruncationScheme {
        &self.scheme
    }

    pub fn max_degree(&self) -> usize {
        self.indices.iter().map(MultiIndex::total_degree).max().unwrap_or(0)
    }

    /// Replace the per-variable polynomial families.
    pub fn with_families(mut self, families: Vec<PolyFamily>) -> Result<Self> {
        if families.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: families.len() });
        }
        self.families = families;
        Ok(self)
    }

    /// Basis from explicit terms, sorted into the graded order with
    /// duplicates removed.
    pub fn from_indices(
        dim: usize,
        mut indices: Vec<MultiIndex>,
        families: Vec<PolyFamily>,
        scheme: TruncationScheme,
    ) -> Result<Self> {
        if families.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: families.len() });
        }
        if let Some(bad) = indices.iter().find(|a| a.0.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.0.len() });
        }
        if indices.iter().any(|a| a.0.iter().any(|&d| d > MAX_DEGREE)) {
            return Err(Error::InvalidParameter(format!("degree above {MAX_DEGREE}")));
        }
        indices.sort_by(MultiIndex::cmp_graded);
        indices.dedup();
        Ok(Self { dim, indices, families, scheme })
    }

    /// Sub-basis made of the listed terms, kept in the given order.
    pub fn subset(&self, terms: &[usize]) -> Self {
        Self {
            dim: self.dim,
            indices: terms.iter().map(|&t| self.indices[t].clone()).collect(),
            families: self.families.clone(),
            scheme: self.scheme,
        }
    }

    /// Value of every basis term at one standard-space point.
    pub fn eval_point(&self, u: &[f64], out: &mut [f64]) {
        let max_deg = self.per_dim_max_degree();
        let tables = self.univariate_tables(u, &max_deg);
        for (o, idx) in out.iter_mut().zip(&self.indices) {
            *o = idx.0.iter().enumerate().filter(|(_, &a)| a > 0).map(|(d, &a)| tables[d][a]).product();
        }
    }

    fn per_dim_max_degree(&self) -> Vec<usize> {
        let mut max_deg = vec![0; self.dim];
        for idx in &self.indices {
            for (m, &a) in max_deg.iter_mut().zip(&idx.0) {
                *m = (*m).max(a);
            }
        }
        max_deg
    }

    fn univariate_tables(&self, u: &[f64], max_deg: &[usize]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|d| {
                let mut t = vec![0.0; max_deg[d] + 1];
                match self.families[d] {
                    PolyFamily::Hermite => hermite_table(u[d], &mut t),
                    PolyFamily::Legendre => legendre_table(2.0 * std_normal_cdf(u[d]) - 1.0, &mut t),
                }
                t
            })
            .collect()
    }
}

/// Polynomial families suited to a random vector: Legendre for independent
/// uniform marginals, Hermite everywhere else.
pub fn families_for(rv: &RandomVector) -> Vec<PolyFamily> {
    rv.marginals()
        .iter()
        .enumerate()
        .map(|(i, m)| match m {
            MarginalDistribution::Uniform { .. } if rv.is_uncorrelated(i) => PolyFamily::Legendre,
            _ => PolyFamily::Hermite,
        })
        .collect()
}

/// All multi-indices with `(Σ αᵢ^q)^{1/q} ≤ p` and at most `r` non-zero
/// entries, sorted by (total degree, lexicographic).
pub fn generate_basis(dim: usize, scheme: TruncationScheme) -> Result<BasisSet> {
    if dim == 0 {
        return Err(Error::InvalidParameter("basis dimension must be >= 1".into()));
    }
    scheme.validate()?;
    let p = scheme.max_degree;
    let rank_cap = scheme.max_interaction.unwrap_or(dim).min(dim);
    let budget = (p as f64).powf(scheme.q_norm) * (1.0 + QNORM_TOL) + QNORM_TOL;

    let mut indices = Vec::new();
    let mut current = vec![0usize; dim];
    enumerate(0, p, 0.0, rank_cap, scheme.q_norm, budget, &mut current, &mut indices);
    indices.sort_by(MultiIndex::cmp_graded);
    Ok(BasisSet { dim, indices, families: vec![PolyFamily::Hermite; dim], scheme })
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    pos: usize,
    degree_left: usize,
    q_sum: f64,
    rank_left: usize,
    q: f64,
    budget: f64,
    current: &mut Vec<usize>,
    out: &mut Vec<MultiIndex>,
) {
    if pos == current.len() {
        out.push(MultiIndex(current.clone()));
        return;
    }
    current[pos] = 0;
    enumerate(pos + 1, degree_left, q_sum, rank_left, q, budget, current, out);
    if rank_left == 0 {
        return;
    }
    for a in 1..=degree_left {
        let s = q_sum + (a as f64).powf(q);
        if s > budget {
            break;
        }
        current[pos] = a;
        enumerate(pos + 1, degree_left - a, s, rank_left - 1, q, budget, current, out);
    }
    current[pos] = 0;
}

/// Orthonormal Hermite values `ψ_0(u) ..= ψ_k(u)` written into `out`,
/// using `ψ_{k+1} = (u ψ_k - √k ψ_{k-1}) / √(k+1)`, i.e. `He_k(u)/√(k!)`.
pub fn hermite_table(u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = u;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (u * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
    }
}

/// Orthonormal Legendre values on `[-1, 1]` (uniform weight), `√(2k+1) P_k(t)`.
pub fn legendre_table(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut p_prev = 1.0;
    let mut p = t;
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 3f64.sqrt() * t;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * p;
    }
}

pub fn eval_hermite_orthonormal(degree: usize, u: f64) -> f64 {
    let mut t = vec![0.0; degree + 1];
    hermite_table(u, &mut t);
    t[degree]
}

pub fn eval_legendre_orthonormal(degree: usize, t: f64) -> f64 {
    let mut v = vec![0.0; degree + 1];
    legendre_table(t, &mut v);
    v[degree]
}

/// `N × P` matrix of basis values, `Ψ[i, j] = Π_d φ_{α_j,d}(u_{i,d})`.
pub fn design_matrix(basis: &BasisSet, u: &SampleMatrix) -> Result<DMatrix<f64>> {
    if u.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: u.dim() });
    }
    Ok(design_matrix_raw(basis, u.values()))
}

/// [`design_matrix`] on a bare `N × M` matrix of standard-space points.
pub fn design_matrix_raw(basis: &BasisSet, u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut psi = DMatrix::zeros(n, basis.len());
    let terms = sparse_terms(basis);
    let max_deg = basis.per_dim_max_degree();
    let mut tables: Vec<Vec<f64>> = max_deg.iter().map(|&k| vec![0.0; k + 1]).collect();
    for i in 0..n {
        fill_tables(basis, |d| u[(i, d)], &mut tables);
        for (j, term) in terms.iter().enumerate() {
            psi[(i, j)] = term.iter().map(|&(d, a)| tables[d][a]).product();
        }
    }
    psi
}

/// Non-zero `(variable, degree)` pairs of each term.
pub(crate) fn sparse_terms(basis: &BasisSet) -> Vec<Vec<(usize, usize)>> {
    basis
        .indices
        .iter()
        .map(|idx| idx.0.iter().enumerate().filter(|(_, &a)| a > 0).map(|(d, &a)| (d, a)).collect())
        .collect()
}

pub(crate) fn fill_tables(basis: &BasisSet, coord: impl Fn(usize) -> f64, tables: &mut [Vec<f64>]) {
    for (d, table) in tables.iter_mut().enumerate() {
        if table.len() < 2 {
            if let Some(t) = table.first_mut() {
                *t = 1.0;
            }
            continue;
        }
        match basis.families[d] {
            PolyFamily::Hermite => hermite_table(coord(d), table),
            PolyFamily::Legendre => legendre_table(2.0 * std_normal_cdf(coord(d)) - 1.0, table),
        }
    }
}
