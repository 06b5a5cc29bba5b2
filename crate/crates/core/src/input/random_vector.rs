use nalgebra::{DMatrix, DVector};

use super::marginal::MarginalDistribution;
use crate::error::{Error, Result};

/// Coordinate system a [`SampleMatrix`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    StandardNormal,
}

/// `N × M` matrix of input points, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: DMatrix<f64>,
    space: Space,
}

impl SampleMatrix {
    pub fn new(values: DMatrix<f64>, space: Space) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample matrix entry {v} is not finite")));
        }
        Ok(Self { values, space })
    }

    pub fn physical(values: DMatrix<f64>) -> Result<Self> {
        Self::new(values, Space::Physical)
    }

    pub fn standard(values: DMatrix<f64>) -> Result<Self> {
        Self::new(values, Space::StandardNormal)
    }

    /// Build from a list of rows; all rows must share the dimension `dim`.
    pub fn from_rows(rows: &[Vec<f64>], dim: usize, space: Space) -> Result<Self> {
        let mut values = DMatrix::zeros(rows.len(), dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                values[(i, j)] = v;
            }
        }
        Self::new(values, space)
    }

    pub fn empty(dim: usize, space: Space) -> Self {
        Self { values: DMatrix::zeros(0, dim), space }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.nrows()).map(move |i| self.row(i))
    }

    /// Subset of rows in the given order (duplicates allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self { values: self.values.select_rows(indices), space: self.space }
    }

    /// Append the rows of `other`; spaces and dimensions must agree.
    pub fn append(&mut self, other: &SampleMatrix) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        if other.space != self.space {
            return Err(Error::InvalidParameter("cannot append samples from another space".into()));
        }
        let n = self.nrows();
        let values = std::mem::replace(&mut self.values, DMatrix::zeros(0, 0));
        let mut grown = values.resize_vertically(n + other.nrows(), 0.0);
        grown.rows_mut(n, other.nrows()).copy_from(&other.values);
        self.values = grown;
        Ok(())
    }
}

/// Joint input model: independent marginals tied together by a Gaussian copula.
///
/// The copula matrix is used as is, as the correlation of the normal scores
/// `z_i = Φ⁻¹(F_i(x_i))`; no Nataf-style correction towards a target Pearson
/// correlation of the physical variables is applied.
#[derive(Debug, Clone)]
pub struct RandomVector {
    marginals: Vec<MarginalDistribution>,
    names: Vec<String>,
    copula: DMatrix<f64>,
    cholesky: DMatrix<f64>,
    independent: bool,
}

impl RandomVector {
    /// Independent marginals, named `x1..xM`.
    pub fn independent(marginals: Vec<MarginalDistribution>) -> Result<Self> {
        let m = marginals.len();
        Self::new(marginals, DMatrix::identity(m, m))
    }

    pub fn new(marginals: Vec<MarginalDistribution>, copula: DMatrix<f64>) -> Result<Self> {
        let m = marginals.len();
        if m == 0 {
            return Err(Error::EmptyInput("random vector needs at least one marginal".into()));
        }
        if copula.nrows() != m || copula.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: copula.nrows() });
        }
        for i in 0..m {
            if copula[(i, i)] != 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "copula diagonal entry ({i},{i}) must be 1, got {}",
                    copula[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (copula[(i, j)], copula[(j, i)]);
                if !a.is_finite() || a != b {
                    return Err(Error::InvalidParameter(format!(
                        "copula matrix is not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                if a.abs() >= 1.0 {
                    return Err(Error::InvalidParameter(format!("copula entry ({i},{j}) = {a} must lie in (-1, 1)")));
                }
            }
        }
        let cholesky =
            copula.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("copula correlation".into()))?.l();
        let independent = copula == DMatrix::identity(m, m);
        let names = (1..=m).map(|i| format!("x{i}")).collect();
        Ok(Self { marginals, names, copula, cholesky, independent })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: names.len() });
        }
        self.names = names;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[MarginalDistribution] {
        &self.marginals
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn copula(&self) -> &DMatrix<f64> {
        &self.copula
    }

    /// Lower-triangular `L` with `L Lᵀ = R`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    pub fn is_independent(&self) -> bool {
        self.independent
    }

    /// Whether coordinate `i` is uncorrelated with every other coordinate.
    pub fn is_uncorrelated(&self, i: usize) -> bool {
        (0..self.dim()).all(|j| j == i || self.copula[(i, j)] == 0.0)
    }

    fn check_dim(&self, x: &SampleMatrix) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// Physical point to independent standard normal coordinates.
    pub fn point_to_standard(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, (m, &xi)) in self.marginals.iter().zip(x).enumerate() {
            out[i] = m.to_standard_normal(xi).ok_or(Error::OutsideSupport { index: i, value: xi })?;
        }
        if !self.independent {
            // u = L⁻¹ z by forward substitution
            let l = &self.cholesky;
            for i in 0..out.len() {
                let mut s = out[i];
                for j in 0..i {
                    s -= l[(i, j)] * out[j];
                }
                out[i] = s / l[(i, i)];
            }
        }
        Ok(())
    }

    /// Independent standard normal coordinates to a physical point.
    pub fn point_from_standard(&self, u: &[f64], out: &mut [f64]) {
        let l = &self.cholesky;
        for (i, m) in self.marginals.iter().enumerate() {
            let z = if self.independent { u[i] } else { (0..=i).map(|j| l[(i, j)] * u[j]).sum() };
            out[i] = m.from_standard_normal(z);
        }
    }

    /// `u = L⁻¹ Φ⁻¹(F(x))`, row by row.
    pub fn to_standard(&self, x: &SampleMatrix) -> Result<SampleMatrix> {
        self.check_dim(x)?;
        if x.space() != Space::Physical {
            return Err(Error::InvalidParameter("to_standard expects physical-space samples".into()));
        }
        let (n, m) = (x.nrows(), self.dim());
        let mut out = DMatrix::zeros(n, m);
        let mut row = vec![0.0; m];
        let mut buf = vec![0.0; m];
        for r in 0..n {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x.values()[(r, j)];
            }
            self.point_to_standard(&row, &mut buf)?;
            for (j, &v) in buf.iter().enumerate() {
                out[(r, j)] = v;
            }
        }
        SampleMatrix::standard(out)
    }

    /// Exact inverse of [`Self::to_standard`].
    pub fn from_standard(&self, u: &SampleMatrix) -> Result<SampleMatrix> {
        self.check_dim(u)?;
        if u.space() != Space::StandardNormal {
            return Err(Error::InvalidParameter("from_standard expects standard-normal samples".into()));
        }
        let (n, m) = (u.nrows(), self.dim());
        let mut out = DMatrix::zeros(n, m);
        let mut row = vec![0.0; m];
        let mut buf = vec![0.0; m];
        for r in 0..n {
            for (j, v) in row.iter_mut().enumerate() {
                *v = u.values()[(r, j)];
            }
            self.point_from_standard(&row, &mut buf);
            for (j, &v) in buf.iter().enumerate() {
                out[(r, j)] = v;
            }
        }
        SampleMatrix::physical(out)
    }

    /// Correlated normal scores `z = L u` of a standard-space point.
    pub fn correlate(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.cholesky * u
    }
}
