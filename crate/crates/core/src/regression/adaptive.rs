use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{hybrid_lars_fit, improves, RegressionResult};
use crate::basis::{design_matrix, families_for, generate_basis, BasisSet, PolyFamily, TruncationScheme, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::input::{RandomVector, SampleMatrix, Space};

/// Input points paired with model responses.
#[derive(Debug, Clone)]
pub struct ExperimentalDesign {
    x: SampleMatrix,
    y: DVector<f64>,
}

impl ExperimentalDesign {
    pub fn new(x: SampleMatrix, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model response".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn inputs(&self) -> &SampleMatrix {
        &self.x
    }

    pub fn responses(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn push(&mut self, x: &SampleMatrix, y: &DVector<f64>) -> Result<()> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model response".into()));
        }
        self.x.append(x)?;
        let old = std::mem::replace(&mut self.y, DVector::zeros(0));
        let n_old = old.len();
        self.y = old.resize_vertically(n_old + y.len(), 0.0);
        self.y.rows_mut(n_old, y.len()).copy_from(y);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveConfig {
    pub degree_min: usize,
    pub degree_max: usize,
    pub q_norm: f64,
    pub max_interaction: Option<usize>,
    pub early_stop_patience: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { degree_min: 2, degree_max: 10, q_norm: 1.0, max_interaction: None, early_stop_patience: 2 }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree_min < 1 || self.degree_min > self.degree_max || self.degree_max > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "degree range [{}, {}] must satisfy 1 <= min <= max <= {MAX_DEGREE}",
                self.degree_min, self.degree_max
            )));
        }
        if self.early_stop_patience < 1 {
            return Err(Error::InvalidParameter("early_stop_patience must be at least 1".into()));
        }
        TruncationScheme::new(self.degree_max, self.q_norm, self.max_interaction)?;
        Ok(())
    }

    fn scheme(&self, degree: usize) -> TruncationScheme {
        TruncationScheme { max_degree: degree, q_norm: self.q_norm, max_interaction: self.max_interaction }
    }
}

/// Sparse chaos expansion: the selected basis terms and their coefficients.
#[derive(Debug, Clone)]
pub struct PceModel {
    random_vector: RandomVector,
    basis: BasisSet,
    coefficients: DVector<f64>,
    loo_error: f64,
    degree: usize,
}

impl PceModel {
    pub fn new(
        random_vector: RandomVector,
        basis: BasisSet,
        coefficients: DVector<f64>,
        loo_error: f64,
        degree: usize,
    ) -> Result<Self> {
        if basis.len() != coefficients.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coefficients.len() });
        }
        if basis.dim() != random_vector.dim() {
            return Err(Error::DimensionMismatch { expected: random_vector.dim(), got: basis.dim() });
        }
        Ok(Self { random_vector, basis, coefficients, loo_error, degree })
    }

    pub fn random_vector(&self) -> &RandomVector {
        &self.random_vector
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn loo_error(&self) -> f64 {
        self.loo_error
    }

    /// Maximal degree of the truncation the model was selected from.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Surrogate mean, the coefficient of the constant term.
    pub fn mean(&self) -> f64 {
        self.basis.indices().iter().position(|a| a.total_degree() == 0).map_or(0.0, |k| self.coefficients[k])
    }

    pub fn predict(&self, x: &SampleMatrix) -> Result<DVector<f64>> {
        if x.nrows() == 0 {
            return Ok(DVector::zeros(0));
        }
        let u = self.random_vector.to_standard(x)?;
        self.predict_standard(&u)
    }

    pub fn predict_standard(&self, u: &SampleMatrix) -> Result<DVector<f64>> {
        if u.space() != Space::StandardNormal {
            return Err(Error::InvalidParameter("expected standard-normal points".into()));
        }
        if u.nrows() == 0 {
            return Ok(DVector::zeros(0));
        }
        Ok(design_matrix(&self.basis, u)? * &self.coefficients)
    }
}

/// Degree-adaptive hybrid LARS on points already in standard space.
///
/// Returns the selected basis (restricted to the support), its fit and the
/// maximal degree it came from.
pub fn adaptive_fit_standard(
    u: &SampleMatrix,
    y: &DVector<f64>,
    families: &[PolyFamily],
    cfg: &AdaptiveConfig,
) -> Result<(BasisSet, RegressionResult, usize)> {
    cfg.validate()?;
    let n = u.nrows();
    if n < 3 {
        return Err(Error::EmptyInput(format!("adaptive fit needs at least 3 samples, got {n}")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if families.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: families.len() });
    }
    let mut best: Option<(BasisSet, RegressionResult, usize)> = None;
    let mut stale = 0;
    for degree in cfg.degree_min..=cfg.degree_max {
        let basis = generate_basis(u.dim(), cfg.scheme(degree))?.with_families(families.to_vec())?;
        let psi: DMatrix<f64> = design_matrix(&basis, u)?;
        let fit = hybrid_lars_fit(&psi, y)?;
        let better = best.as_ref().is_none_or(|(_, b, _)| improves(fit.loo_error, b.loo_error));
        if better {
            best = Some((basis, fit, degree));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
        }
    }
    let (basis, fit, degree) = best.expect("at least one degree is tried");
    let sub = basis.subset(&fit.support);
    let coefficients = DVector::from_iterator(fit.support.len(), fit.support.iter().map(|&k| fit.coefficients[k]));
    let fit = RegressionResult { coefficients, support: (0..fit.support.len()).collect(), ..fit };
    Ok((sub, fit, degree))
}

/// Degree-adaptive sparse chaos expansion of an experimental design.
pub fn adaptive_fit(ed: &ExperimentalDesign, rv: &RandomVector, cfg: &AdaptiveConfig) -> Result<PceModel> {
    if ed.len() < 3 {
        return Err(Error::EmptyInput(format!("adaptive fit needs at least 3 samples, got {}", ed.len())));
    }
    let u = rv.to_standard(ed.inputs())?;
    let (basis, fit, degree) = adaptive_fit_standard(&u, ed.responses(), &families_for(rv), cfg)?;
    PceModel::new(rv.clone(), basis, fit.coefficients, fit.loo_error, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_hermite_orthonormal;
    use crate::input::{sample_lhs, sample_mcs, LhsVariant, MarginalDistribution};
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn std_normal_rv(m: usize) -> RandomVector {
        RandomVector::independent(vec![MarginalDistribution::gaussian(0.0, 1.0).unwrap(); m]).unwrap()
    }

    fn evaluate(x: &SampleMatrix, f: impl Fn(&[f64]) -> f64) -> DVector<f64> {
        DVector::from_iterator(x.nrows(), x.rows().map(|r| f(&r)))
    }

    #[test]
    fn degree_two_polynomial_is_recovered() {
        let rv = std_normal_rv(2);
        let x = x_clone(&rv, 40, 11);
        let f = |u: &[f64]| 1.0 + 2.0 * u[0] - u[1] + 0.5 * u[0] * u[1] + 0.3 * (u[1] * u[1] - 1.0);
        let y = evaluate(&x, f);
        let ed = ExperimentalDesign::new(x, y).unwrap();
        let cfg = AdaptiveConfig { degree_min: 1, degree_max: 5, ..Default::default() };
        let model = adaptive_fit(&ed, &rv, &cfg).unwrap();
        assert!(model.loo_error() < 1e-10, "loo {}", model.loo_error());
        assert!(model.basis().indices().iter().all(|a| a.total_degree() <= 2));
        assert!((model.mean() - 1.0).abs() < 1e-10);

        let again = adaptive_fit(&ed, &rv, &cfg).unwrap();
        assert_eq!(again.coefficients(), model.coefficients());
        assert_eq!(again.basis().indices(), model.basis().indices());

        let pred = model.predict(ed.inputs()).unwrap();
        for (p, y) in pred.iter().zip(ed.responses().iter()) {
            assert!((p - y).abs() <= 1e-8 * y.abs().max(1.0));
        }
    }

    fn x_clone(rv: &RandomVector, n: usize, seed: u64) -> SampleMatrix {
        let mut rng = substream(seed, 0);
        sample_lhs(rv, n, LhsVariant::Jittered, &mut rng).unwrap()
    }

    #[test]
    fn polynomial_exactness_at_fresh_points() {
        let rv = std_normal_rv(3);
        // degree-3 polynomial in standard space: P = 20 terms, N = 3P
        let f = |u: &[f64]| {
            0.4 + u[0] - 0.5 * u[1] * u[2] + 0.2 * eval_hermite_orthonormal(3, u[0])
                - 0.8 * eval_hermite_orthonormal(2, u[2]) * u[1]
        };
        let x = x_clone(&rv, 60, 12);
        let y = evaluate(&x, f);
        let ed = ExperimentalDesign::new(x, y).unwrap();
        let model =
            adaptive_fit(&ed, &rv, &AdaptiveConfig { degree_min: 1, degree_max: 6, ..Default::default() }).unwrap();
        let mut rng = substream(12, 1);
        let fresh = sample_mcs(&rv, 1000, &mut rng).unwrap();
        let truth = evaluate(&fresh, f);
        let pred = model.predict(&fresh).unwrap();
        for (p, t) in pred.iter().zip(truth.iter()) {
            assert!((p - t).abs() <= 1e-6 * t.abs().max(1.0), "{p} vs {t}");
        }
    }

    #[test]
    fn tiny_design_with_huge_basis_does_not_fail() {
        let rv = std_normal_rv(4);
        let x = x_clone(&rv, 10, 13);
        let y = evaluate(&x, |u| (u[0] + u[1]).exp() + u[2] * u[3]);
        let ed = ExperimentalDesign::new(x, y).unwrap();
        let model =
            adaptive_fit(&ed, &rv, &AdaptiveConfig { degree_min: 1, degree_max: 8, ..Default::default() }).unwrap();
        assert!(model.basis().len() <= 9);
        assert!(model.loo_error() >= 0.0);
        let pred = model.predict(ed.inputs()).unwrap();
        assert!(pred.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_designs_below_three_points() {
        let rv = std_normal_rv(1);
        let x = x_clone(&rv, 2, 14);
        let ed = ExperimentalDesign::new(x, DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert!(adaptive_fit(&ed, &rv, &AdaptiveConfig::default()).is_err());
    }

    #[test]
    fn constant_model_predicts_constant() {
        let rv = std_normal_rv(2);
        let basis = generate_basis(2, TruncationScheme::total_degree(0)).unwrap();
        let model = PceModel::new(rv.clone(), basis, DVector::from_vec(vec![3.25]), 0.0, 0).unwrap();
        let x = x_clone(&rv, 7, 15);
        assert!(model.predict(&x).unwrap().iter().all(|&v| v == 3.25));
        assert_eq!(model.predict(&SampleMatrix::empty(2, Space::Physical)).unwrap().len(), 0);
        assert_eq!(model.mean(), 3.25);
    }

    #[test]
    fn pure_noise_selects_the_constant() {
        let rv = std_normal_rv(1);
        let cfg = AdaptiveConfig { degree_min: 2, degree_max: 2, ..Default::default() };
        let mut constant_only = 0;
        for seed in 0..100 {
            let x = x_clone(&rv, 50, 1000 + seed);
            let mut rng = substream(1000 + seed, 7);
            let y = DVector::from_fn(50, |_, _| rng.sample::<f64, _>(StandardNormal));
            let ed = ExperimentalDesign::new(x, y).unwrap();
            let model = adaptive_fit(&ed, &rv, &cfg).unwrap();
            if model.basis().len() == 1 {
                constant_only += 1;
            }
        }
        assert!(constant_only >= 90, "constant-only in {constant_only}/100 trials");
    }
}
