use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OlsSolution {
    pub coefficients: DVector<f64>,
    pub rank: usize,
}

impl OlsSolution {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.coefficients.len()
    }
}

/// Least-squares coefficients `argmin ‖y - Ψc‖²`.
///
/// Solved through the SVD; on rank deficiency the minimum-norm minimiser is
/// returned.
pub fn ols_fit(psi: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsSolution> {
    let (n, p) = psi.shape();
    if n == 0 || p == 0 {
        return Err(Error::EmptyInput(format!("least squares on a {n}x{p} design")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let svd = psi.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = RANK_TOLERANCE * sigma_max;

    let mut coefficients = DVector::zeros(p);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let weight = u.column(k).dot(y) / s;
            coefficients.axpy(weight, &v_t.row(k).transpose(), 1.0);
        }
    }
    Ok(OlsSolution { coefficients, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn identity_design() {
        let sol = ols_fit(&DMatrix::identity(3, 3), &dvector![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sol.coefficients, dvector![1.0, 2.0, 3.0]);
        assert!(!sol.rank_deficient());
    }

    #[test]
    fn exact_representation_has_zero_residual() {
        let psi = dmatrix![1.0, 0.5; 1.0, -1.0; 1.0, 2.0; 1.0, 0.0];
        let truth = dvector![0.7, -1.9];
        let y = &psi * &truth;
        let sol = ols_fit(&psi, &y).unwrap();
        let resid = &y - &psi * &sol.coefficients;
        assert!(resid.norm() <= 1e-10 * y.norm());
        assert!((sol.coefficients - truth).norm() < 1e-12);
    }

    #[test]
    fn duplicated_column_gives_minimum_norm_solution() {
        // columns 1 and 2 are identical: minimisers are (a, b, c) with b + c fixed
        let psi = dmatrix![
            1.0, 1.0, 1.0;
            1.0, 2.0, 2.0;
            1.0, -1.0, -1.0;
            1.0, 0.5, 0.5;
            1.0, 3.0, 3.0
        ];
        let y = dvector![1.0, 2.5, -0.5, 1.2, 4.1];
        let sol = ols_fit(&psi, &y).unwrap();
        assert!(sol.rank_deficient());
        assert_eq!(sol.rank, 2);

        // oracle: fit the reduced full-rank design, then split the shared
        // coefficient evenly (the minimum-norm split)
        let reduced = psi.columns(0, 2).into_owned();
        let normal = reduced.transpose() * &reduced;
        let ab = normal.cholesky().unwrap().solve(&(reduced.transpose() * &y));
        let expected = dvector![ab[0], ab[1] / 2.0, ab[1] / 2.0];
        assert!((&sol.coefficients - &expected).norm() < 1e-12, "{sol:?} vs {expected}");

        // residual orthogonal to the column space
        let resid = &y - &psi * &sol.coefficients;
        assert!((psi.transpose() * resid).norm() < 1e-8 * y.norm());
    }

    #[test]
    fn rejects_empty_inputs() {
        assert!(ols_fit(&DMatrix::zeros(0, 2), &DVector::zeros(0)).is_err());
        assert!(ols_fit(&DMatrix::zeros(3, 0), &DVector::zeros(3)).is_err());
        assert!(ols_fit(&DMatrix::zeros(3, 2), &DVector::zeros(2)).is_err());
    }
}
