use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::input::{sample_mcs_standard, RandomVector, SampleMatrix};

/// Rows per block when sweeping the pool.
pub const CHUNK_ROWS: usize = 4096;

/// Monte Carlo candidate sample, drawn once and reused by every iteration.
///
/// Points are kept in standard space; physical coordinates are produced on
/// demand through the random vector's transform.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    u: DMatrix<f64>,
    random_vector: RandomVector,
}

impl CandidatePool {
    pub fn draw<R: Rng + ?Sized>(rv: &RandomVector, n: usize, rng: &mut R) -> Result<Self> {
        let u = sample_mcs_standard(rv, n, rng)?.into_values();
        Ok(Self { u, random_vector: rv.clone() })
    }

    pub fn from_standard(rv: &RandomVector, u: SampleMatrix) -> Result<Self> {
        if u.dim() != rv.dim() {
            return Err(Error::DimensionMismatch { expected: rv.dim(), got: u.dim() });
        }
        if u.nrows() == 0 {
            return Err(Error::EmptyInput("candidate pool".into()));
        }
        rv.from_standard(&u)?;
        Ok(Self { u: u.into_values(), random_vector: rv.clone() })
    }

    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.u.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn random_vector(&self) -> &RandomVector {
        &self.random_vector
    }

    /// All points in standard space, one per row.
    pub fn standard(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn standard_row(&self, i: usize) -> Vec<f64> {
        self.u.row(i).iter().copied().collect()
    }

    pub fn standard_rows(&self, indices: &[usize]) -> Result<SampleMatrix> {
        SampleMatrix::standard(self.u.select_rows(indices))
    }

    pub fn physical_rows(&self, indices: &[usize]) -> Result<SampleMatrix> {
        self.random_vector.from_standard(&self.standard_rows(indices)?)
    }

    /// Standard-space block of rows `start..start + len`.
    pub fn chunk(&self, start: usize, len: usize) -> DMatrix<f64> {
        self.u.rows(start, len).into_owned()
    }

    /// Iterate over `(start, len)` blocks covering the pool.
    pub fn chunks(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.len();
        (0..n).step_by(CHUNK_ROWS).map(move |s| (s, CHUNK_ROWS.min(n - s)))
    }
}
