//! Least-angle regression and the hybrid LARS fit.
//!
//! Column 0 of the design is the constant term. It is kept in every support
//! and handled by centring `y` and the remaining columns; those columns are
//! then scaled to unit norm. The path is plain LARS: one column enters per
//! step and none leaves.

use nalgebra::{DMatrix, DVector};

use super::loo::{loo_error, mean_square, mean_squared_loo_residual, relative_loo, sample_variance};
use super::ols::ols_fit;
use super::RegressionResult;
use crate::error::{Error, Result};

/// Columns whose centred norm is below this fraction of their raw norm are
/// treated as constant and never enter.
const CONSTANT_COLUMN_TOL: f64 = 1e-10;
/// A column is rejected when its component outside the active span has
/// squared unit-norm length below this.
const COLLINEAR_TOL: f64 = 1e-10;
/// The path stops once the maximal correlation has dropped to this fraction
/// of its starting value.
const CORRELATION_TOL: f64 = 1e-10;
/// Errors below this are indistinguishable from an exact fit.
const LOO_FLOOR: f64 = 1e-20;
/// Relative margin an error must beat to count as an improvement.
const LOO_REL_MARGIN: f64 = 1e-10;

/// `true` when `candidate` is a genuine improvement over `incumbent`.
pub(crate) fn improves(candidate: f64, incumbent: f64) -> bool {
    if !candidate.is_finite() {
        return false;
    }
    if !incumbent.is_finite() {
        return true;
    }
    candidate < incumbent * (1.0 - LOO_REL_MARGIN) - LOO_FLOOR
}

/// Packed lower-triangular Cholesky factor grown one column at a time.
struct GrowingCholesky {
    rows: Vec<Vec<f64>>,
}

impl GrowingCholesky {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; b.len()];
        for i in 0..b.len() {
            let row = &self.rows[i];
            let s: f64 = (0..i).map(|k| row[k] * z[k]).sum();
            z[i] = (b[i] - s) / row[i];
        }
        z
    }

    fn backward(&self, z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.rows[k][i] * x[k]).sum();
            x[i] = (z[i] - s) / self.rows[i][i];
        }
        x
    }

    /// Append a unit-norm column with cross products `g` against the active
    /// ones; returns `false` if it is numerically in their span.
    fn push(&mut self, g: &[f64]) -> bool {
        let l = self.forward(g);
        let d2 = 1.0 - l.iter().map(|v| v * v).sum::<f64>();
        if d2 <= COLLINEAR_TOL {
            return false;
        }
        let mut row = l;
        row.push(d2.sqrt());
        self.rows.push(row);
        true
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }
}

/// Active-set sequence of plain LARS on `(Ψ, y)`.
///
/// Element `k` of the result is the support after `k` steps, in entry order,
/// starting with `[0]`. At most `max_steps` columns enter, and never so many
/// that the support reaches `N` terms.
pub fn lars_path(psi: &DMatrix<f64>, y: &DVector<f64>, max_steps: usize) -> Result<Vec<Vec<usize>>> {
    let (n, p) = psi.shape();
    if max_steps < 1 {
        return Err(Error::InvalidParameter("LARS needs max_steps >= 1".into()));
    }
    if n == 0 || p == 0 {
        return Err(Error::EmptyInput(format!("LARS on a {n}x{p} design")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }

    let mut path = vec![vec![0]];
    let cap = max_steps.min(p - 1).min(n.saturating_sub(2));
    if cap == 0 {
        return Ok(path);
    }

    // centred, unit-norm candidate columns (candidate j is basis column j + 1)
    let mut x = psi.columns(1, p - 1).into_owned();
    let mut usable = vec![true; p - 1];
    for (mut col, ok) in x.column_iter_mut().zip(usable.iter_mut()) {
        let raw = col.norm();
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm <= CONSTANT_COLUMN_TOL * raw || norm == 0.0 {
            *ok = false;
            col.fill(0.0);
        } else {
            col.unscale_mut(norm);
        }
    }
    let y_mean = y.mean();
    let yc = y.add_scalar(-y_mean);

    let mut c = x.tr_mul(&yc);
    let first = (0..p - 1).filter(|&j| usable[j]).max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()).then(b.cmp(&a)));
    let Some(first) = first else {
        return Ok(path);
    };
    let c0 = c[first].abs();
    if c0 == 0.0 || c0 <= CORRELATION_TOL * yc.norm() {
        return Ok(path);
    }

    let mut chol = GrowingCholesky::new();
    chol.push(&[]);
    let mut active = vec![first];
    let mut signs = vec![c[first].signum()];
    let mut inactive: Vec<bool> = usable.clone();
    inactive[first] = false;
    path.push(vec![0, first + 1]);

    while active.len() < cap {
        let big_c = active.iter().map(|&j| c[j].abs()).fold(0.0, f64::max);
        if big_c <= CORRELATION_TOL * c0 {
            break;
        }
        let z = chol.solve(&signs);
        let s_dot_z: f64 = signs.iter().zip(&z).map(|(s, v)| s * v).sum();
        if s_dot_z <= 0.0 {
            break;
        }
        let a_a = 1.0 / s_dot_z.sqrt();
        let mut u = DVector::zeros(n);
        for (k, &j) in active.iter().enumerate() {
            u.axpy(a_a * z[k], &x.column(j), 1.0);
        }
        let a = x.tr_mul(&u);

        let mut candidates: Vec<(f64, usize)> = (0..p - 1)
            .filter(|&j| inactive[j])
            .filter_map(|j| {
                let g1 = (big_c - c[j]) / (a_a - a[j]);
                let g2 = (big_c + c[j]) / (a_a + a[j]);
                [g1, g2].into_iter().filter(|g| *g > 0.0 && g.is_finite()).min_by(f64::total_cmp).map(|g| (g, j))
            })
            .collect();
        candidates.sort_by(|l, r| l.0.total_cmp(&r.0).then(l.1.cmp(&r.1)));

        let mut entered = None;
        for (gamma, j) in candidates {
            let g: Vec<f64> = active.iter().map(|&k| x.column(k).dot(&x.column(j))).collect();
            if chol.push(&g) {
                entered = Some((gamma, j));
                break;
            }
            inactive[j] = false;
        }
        let Some((gamma, j)) = entered else {
            break;
        };
        c.axpy(-gamma, &a, 1.0);
        inactive[j] = false;
        active.push(j);
        signs.push(c[j].signum());
        let mut support = path.last().expect("path starts non-empty").clone();
        support.push(j + 1);
        path.push(support);
        debug_assert_eq!(chol.len(), active.len());
    }
    Ok(path)
}

/// Score each prefix of `order` by the corrected LOO error of its OLS fit.
///
/// Uses Gram–Schmidt on the columns in entry order, so residuals, leverages
/// and `tr((ΨᵀΨ)⁻¹)` are all updated in `O(N k)` per prefix. Returns the
/// length of the best prefix (ties go to the shorter one).
fn best_prefix(psi: &DMatrix<f64>, y: &DVector<f64>, order: &[usize]) -> usize {
    let n = psi.nrows();
    let variance = sample_variance(y);
    let y_sq = mean_square(y);
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(order.len());
    // columns of R⁻¹ (upper triangular), stored by column
    let mut r_inv: Vec<Vec<f64>> = Vec::with_capacity(order.len());
    let mut residual = y.clone();
    let mut leverage = DVector::zeros(n);
    let mut trace = 0.0;
    let mut best = (f64::INFINITY, 1);

    for (k, &col) in order.iter().enumerate() {
        let raw = psi.column(col).into_owned();
        let mut v = raw.clone();
        let mut r = vec![0.0; k];
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj = qi.dot(&v);
                r[i] += proj;
                v.axpy(-proj, qi, 1.0);
            }
        }
        let rho = v.norm();
        if rho <= COLLINEAR_TOL.sqrt() * raw.norm() || rho == 0.0 {
            break;
        }
        v.unscale_mut(rho);

        let mut new_col = vec![0.0; k + 1];
        for (j, col_j) in r_inv.iter().enumerate() {
            for (i, value) in col_j.iter().enumerate() {
                new_col[i] -= value * r[j] / rho;
            }
        }
        new_col[k] = 1.0 / rho;
        trace += new_col.iter().map(|v| v * v).sum::<f64>();
        r_inv.push(new_col);

        let proj = v.dot(&residual);
        residual.axpy(-proj, &v, 1.0);
        leverage += v.component_mul(&v);
        q.push(v);

        let score = relative_loo(mean_squared_loo_residual(&residual, &leverage), n, k + 1, trace, variance, y_sq);
        if improves(score, best.0) {
            best = (score, k + 1);
        }
    }
    best.1
}

/// Hybrid LARS: LARS proposes nested supports, each is refitted by OLS and
/// scored by the corrected LOO error, and the best one is refitted.
pub fn hybrid_lars_fit(psi: &DMatrix<f64>, y: &DVector<f64>) -> Result<RegressionResult> {
    let (n, p) = psi.shape();
    let path = lars_path(psi, y, usize::MAX)?;
    let order = path.last().expect("LARS path is never empty");
    let k = best_prefix(psi, y, order);
    let mut support = order[..k].to_vec();
    support.sort_unstable();

    let sub = psi.select_columns(&support);
    let sol = ols_fit(&sub, y)?;
    let loo = loo_error(&sub, y, &sol.coefficients);
    let mut coefficients = DVector::zeros(p);
    for (value, &j) in sol.coefficients.iter().zip(&support) {
        coefficients[j] = *value;
    }
    Ok(RegressionResult { coefficients, support, loo_error: loo, n_samples: n, rank_deficient: sol.rank_deficient() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, 0);
        let mut psi = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        psi.column_mut(0).fill(1.0);
        psi
    }

    #[test]
    fn proportional_column_enters_first() {
        let psi = gaussian_design(30, 8, 1);
        let y = psi.column(5) * 2.5;
        let path = lars_path(&psi, &y, 10).unwrap();
        assert_eq!(path[0], vec![0]);
        assert_eq!(path[1], vec![0, 5]);
    }

    #[test]
    fn zero_response_stops_after_constant() {
        let psi = gaussian_design(20, 6, 2);
        let path = lars_path(&psi, &DVector::zeros(20), 10).unwrap();
        assert_eq!(path, vec![vec![0]]);
    }

    #[test]
    fn rejects_zero_steps() {
        let psi = gaussian_design(10, 3, 3);
        assert!(lars_path(&psi, &DVector::zeros(10), 0).is_err());
    }

    #[test]
    fn orthonormal_design_enters_by_correlation() {
        // QR of a centred random matrix gives columns orthonormal to each
        // other and to the constant
        let n = 40;
        let p = 7;
        let raw = gaussian_design(n, p, 4);
        let mut aug = raw.clone();
        aug.column_mut(0).fill(1.0);
        let q = aug.qr().q();
        let mut psi = q.clone();
        psi.column_mut(0).fill(1.0);
        let mut rng = substream(4, 1);
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let corr = psi.tr_mul(&y);
        let mut expected: Vec<usize> = (1..p).collect();
        expected.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()));
        let path = lars_path(&psi, &y, 100).unwrap();
        let order = path.last().unwrap();
        assert_eq!(&order[1..], &expected[..]);
        for (k, support) in path.iter().enumerate() {
            assert_eq!(support.len(), k + 1);
            assert_eq!(&support[..], &order[..k + 1]);
        }
    }

    #[test]
    fn recovers_exactly_sparse_model() {
        let n = 60;
        let psi = gaussian_design(n, 20, 5);
        let mut truth = DVector::zeros(20);
        truth[0] = 1.5;
        truth[3] = -2.0;
        truth[11] = 0.8;
        truth[17] = 1.1;
        let y = &psi * &truth;
        let res = hybrid_lars_fit(&psi, &y).unwrap();
        assert_eq!(res.support, vec![0, 3, 11, 17]);
        assert!((&res.coefficients - &truth).amax() < 1e-8);
        assert!(res.loo_error < 1e-10);
    }

    #[test]
    fn support_is_capped_below_sample_count() {
        let n = 8;
        let psi = gaussian_design(n, 30, 6);
        let mut rng = substream(6, 1);
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let path = lars_path(&psi, &y, usize::MAX).unwrap();
        assert!(path.last().unwrap().len() < n);
        let res = hybrid_lars_fit(&psi, &y).unwrap();
        assert!(res.support.len() < n);
        assert!(res.loo_error >= 0.0);
    }

    #[test]
    fn final_coefficients_are_the_support_ols_fit() {
        let n = 50;
        let psi = gaussian_design(n, 12, 7);
        let mut rng = substream(7, 1);
        let y = DVector::from_fn(n, |i, _| {
            psi[(i, 2)] + 0.5 * psi[(i, 4)] * psi[(i, 4)] + 0.1 * rng.sample::<f64, _>(StandardNormal)
        });
        let res = hybrid_lars_fit(&psi, &y).unwrap();
        let sol = ols_fit(&psi.select_columns(&res.support), &y).unwrap();
        for (value, &j) in sol.coefficients.iter().zip(&res.support) {
            assert_eq!(res.coefficients[j], *value);
        }
        for j in 0..12 {
            if !res.support.contains(&j) {
                assert_eq!(res.coefficients[j], 0.0);
            }
        }
    }

    #[test]
    fn scaling_response_scales_coefficients() {
        let n = 45;
        let psi = gaussian_design(n, 10, 8);
        let mut rng = substream(8, 1);
        let y = DVector::from_fn(n, |i, _| {
            1.0 + psi[(i, 1)] - 0.7 * psi[(i, 6)] + 0.2 * rng.sample::<f64, _>(StandardNormal)
        });
        let base = hybrid_lars_fit(&psi, &y).unwrap();
        for c in [2.0, -3.7, 1e-3, 250.0] {
            let scaled = hybrid_lars_fit(&psi, &(&y * c)).unwrap();
            assert_eq!(scaled.support, base.support, "c = {c}");
            let diff = (&scaled.coefficients - &base.coefficients * c).amax();
            assert!(diff <= 1e-10 * c.abs() * base.coefficients.amax(), "c = {c}");
        }
    }

    #[test]
    fn incremental_scores_match_direct_loo() {
        let n = 40;
        let psi = gaussian_design(n, 9, 9);
        let mut rng = substream(9, 1);
        let y = DVector::from_fn(n, |i, _| psi[(i, 1)] * psi[(i, 2)] + 0.3 * rng.sample::<f64, _>(StandardNormal));
        let order: Vec<usize> = vec![0, 4, 1, 7, 2, 8];
        let direct: Vec<f64> = (1..=order.len())
            .map(|k| {
                let sub = psi.select_columns(&order[..k]);
                let c = ols_fit(&sub, &y).unwrap().coefficients;
                loo_error(&sub, &y, &c)
            })
            .collect();
        let mut best = 1;
        for k in 2..=order.len() {
            if improves(direct[k - 1], direct[best - 1]) {
                best = k;
            }
        }
        assert_eq!(best_prefix(&psi, &y, &order), best);
    }
}
