//! Leave-one-out error of a least-squares fit without refitting.
//!
//! For a least-squares fit with hat matrix `H = Ψ(ΨᵀΨ)⁺Ψᵀ`, the prediction
//! error on sample `i` when the model is refitted without it equals
//! `(yᵢ - ŷᵢ) / (1 - hᵢ)`. The relative error is
//!
//! ```text
//! ε_LOO = T(P, N) · [ (1/N) Σᵢ ((yᵢ - ŷᵢ)/(1 - hᵢ))² ] / Var[y]
//! ```
//!
//! where `Var[y]` is the unbiased sample variance and `T` is the
//! small-sample correction
//!
//! ```text
//! T(P, N) = N/(N - P) · (1 + tr(C⁻¹)/N),   C = ΨᵀΨ / N,
//! ```
//!
//! i.e. `N/(N - P) · (1 + tr((ΨᵀΨ)⁻¹))`, with `P` the number of regressors.

use nalgebra::{DMatrix, DVector};

use super::ols::RANK_TOLERANCE;

/// Residuals below this fraction of the response magnitude count as exact.
const EXACT_FIT_TOL: f64 = 1e-12;

/// Leverages at or above `1 - LEVERAGE_SLACK` count as interpolated samples.
const LEVERAGE_SLACK: f64 = 1e-10;

pub fn sample_variance(y: &DVector<f64>) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let mean = y.mean();
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub(crate) fn mean_square(y: &DVector<f64>) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.norm_squared() / y.len() as f64
}

/// `N/(N - P) · (1 + tr((ΨᵀΨ)⁻¹))`; infinite when `N ≤ P`.
pub fn correction_factor(n: usize, p: usize, trace_inverse_gram: f64) -> f64 {
    if n <= p {
        return f64::INFINITY;
    }
    n as f64 / (n - p) as f64 * (1.0 + trace_inverse_gram)
}

/// Leverages and `tr((ΨᵀΨ)⁺)` from the SVD of `Ψ`.
pub fn leverages(psi: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let n = psi.nrows();
    if psi.ncols() == 0 {
        return (DVector::zeros(n), 0.0);
    }
    let svd = psi.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let cutoff = RANK_TOLERANCE * svd.singular_values.max();
    let mut h = DVector::zeros(n);
    let mut trace = 0.0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            trace += 1.0 / (s * s);
            h += u.column(k).component_mul(&u.column(k));
        }
    }
    (h, trace)
}

/// Mean squared leave-one-out residual, or `None` if some sample is interpolated.
pub fn mean_squared_loo_residual(residuals: &DVector<f64>, leverage: &DVector<f64>) -> Option<f64> {
    let n = residuals.len();
    let mut acc = 0.0;
    for (r, h) in residuals.iter().zip(leverage.iter()) {
        if *h >= 1.0 - LEVERAGE_SLACK {
            return None;
        }
        acc += (r / (1.0 - h)).powi(2);
    }
    Some(acc / n as f64)
}

/// Combine the pieces into the corrected relative error.
pub fn relative_loo(
    mean_sq_loo: Option<f64>,
    n: usize,
    n_regressors: usize,
    trace_inverse_gram: f64,
    variance: f64,
    mean_square_y: f64,
) -> f64 {
    let Some(msq) = mean_sq_loo else {
        return f64::INFINITY;
    };
    let t = correction_factor(n, n_regressors, trace_inverse_gram);
    if !t.is_finite() {
        return f64::INFINITY;
    }
    if variance <= 0.0 {
        // constant response: only a fit exact to rounding has zero error
        return if msq <= EXACT_FIT_TOL * EXACT_FIT_TOL * mean_square_y { 0.0 } else { f64::INFINITY };
    }
    t * msq / variance
}

/// Corrected relative leave-one-out error of `coefficients` on `(Ψ, y)`.
/// Returns `+∞` when the fit interpolates a sample or `N ≤ P`.
pub fn loo_error(psi: &DMatrix<f64>, y: &DVector<f64>, coefficients: &DVector<f64>) -> f64 {
    let n = psi.nrows();
    let residuals = y - psi * coefficients;
    let (h, trace) = leverages(psi);
    relative_loo(mean_squared_loo_residual(&residuals, &h), n, psi.ncols(), trace, sample_variance(y), mean_square(y))
}
