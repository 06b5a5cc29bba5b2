use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::input::SampleMatrix;

/// Anything that maps a batch of physical points to scalar responses.
pub trait Model {
    fn evaluate(&mut self, x: &SampleMatrix) -> Result<DVector<f64>>;
}

/// Pointwise model from a closure.
pub struct FnModel<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Model for FnModel<F> {
    fn evaluate(&mut self, x: &SampleMatrix) -> Result<DVector<f64>> {
        Ok(DVector::from_iterator(x.nrows(), x.rows().map(|row| (self.0)(&row))))
    }
}

/// Rule turning a model response into a limit-state value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Comparison {
    /// The response is `g` itself.
    #[default]
    Identity,
    /// `g = τ - response`.
    Threshold { tau: f64 },
}

impl Comparison {
    pub fn apply(&self, response: f64) -> f64 {
        match *self {
            Comparison::Identity => response,
            Comparison::Threshold { tau } => tau - response,
        }
    }
}

/// A model together with its comparison rule; failure is `g ≤ 0`.
pub struct LimitState {
    model: Box<dyn Model>,
    comparison: Comparison,
}

impl LimitState {
    pub fn new(model: Box<dyn Model>, comparison: Comparison) -> Self {
        Self { model, comparison }
    }

    pub fn from_fn(f: impl FnMut(&[f64]) -> f64 + 'static, comparison: Comparison) -> Self {
        Self::new(Box::new(FnModel(f)), comparison)
    }

    pub fn comparison(&self) -> Comparison {
        self.comparison
    }

    /// Raw model responses at `x`; non-finite values are reported with the
    /// offending point.
    pub fn responses(&mut self, x: &SampleMatrix) -> Result<DVector<f64>> {
        let y = self.model.evaluate(x)?;
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation { point: x.row(i), message: format!("model returned {}", y[i]) });
        }
        Ok(y)
    }

    pub fn to_g(&self, responses: &DVector<f64>) -> DVector<f64> {
        responses.map(|r| self.comparison.apply(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn threshold_form() {
        let c = Comparison::Threshold { tau: 0.12 };
        assert!((c.apply(0.1) - 0.02).abs() < 1e-15);
        assert!(c.apply(0.13) < 0.0);
        assert_eq!(Comparison::Identity.apply(-2.0), -2.0);
    }

    #[test]
    fn non_finite_response_names_the_point() {
        let mut ls = LimitState::from_fn(|x| if x[0] > 1.0 { f64::NAN } else { x[0] }, Comparison::Identity);
        let x = SampleMatrix::physical(dmatrix![0.5; 2.0]).unwrap();
        match ls.responses(&x) {
            Err(Error::ModelEvaluation { point, .. }) => assert_eq!(point, vec![2.0]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
