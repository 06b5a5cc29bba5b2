//! Built-in limit states and input models.

mod sinc;
pub mod truss;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;

use crate::active::{Comparison, LimitState};
use crate::error::Result;
use crate::input::normal::std_normal_cdf;
use crate::input::{Family, MarginalDistribution, RandomVector};

pub use sinc::{sinc_band, SincBand, SincBandConfig};
pub use truss::truss_displacement;

/// A named reliability problem.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: &'static str,
    pub random_vector: RandomVector,
    /// Raw model response at a physical point.
    pub model: fn(&[f64]) -> f64,
    pub comparison: Comparison,
    pub reference_pf: Option<f64>,
    pub reference_source: &'static str,
}

impl BenchmarkSpec {
    pub fn limit_state(&self) -> LimitState {
        LimitState::from_fn(self.model, self.comparison)
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        self.comparison.apply((self.model)(x))
    }
}

pub const BENCHMARK_NAMES: [&str; 4] = ["sinc_1d", "four_branch", "truss", "linear_oracle"];

/// Benchmark by name; `frame_inputs` has no model and is served by
/// [`frame_input_spec`] instead.
pub fn by_name(name: &str) -> Option<BenchmarkSpec> {
    match name {
        "sinc_1d" => Some(sinc_1d_spec()),
        "four_branch" => Some(four_branch_spec()),
        "truss" => Some(truss_spec()),
        "linear_oracle" => Some(linear_oracle_spec()),
        _ => None,
    }
}

pub fn sinc_1d(x: f64) -> f64 {
    x * x.sin()
}

pub fn sinc_1d_spec() -> BenchmarkSpec {
    BenchmarkSpec {
        name: "sinc_1d",
        random_vector: RandomVector::independent(vec![
            MarginalDistribution::uniform(0.0, 2.0 * PI).expect("valid bounds")
        ])
        .expect("one marginal")
        .with_names(vec!["x".into()])
        .expect("one name"),
        model: |x| sinc_1d(x[0]),
        comparison: Comparison::Identity,
        reference_pf: None,
        reference_source: "",
    }
}

/// Series system of four components.
///
/// The quadratic term of the first two branches is `0.1·(x₁ - x₂)²`, the
/// form whose failure probability under independent standard normal inputs
/// is 4.46e-3.
pub fn four_branch(x1: f64, x2: f64) -> f64 {
    let s = x1 + x2;
    let d = x1 - x2;
    let k = 6.0 * FRAC_1_SQRT_2;
    let quad = 3.0 + 0.1 * d * d;
    (quad - s * FRAC_1_SQRT_2).min(quad + s * FRAC_1_SQRT_2).min(d + k).min(-d + k)
}

pub fn four_branch_spec() -> BenchmarkSpec {
    let n = MarginalDistribution::gaussian(0.0, 1.0).expect("valid");
    BenchmarkSpec {
        name: "four_branch",
        random_vector: RandomVector::independent(vec![n, n])
            .expect("two marginals")
            .with_names(vec!["x1".into(), "x2".into()])
            .expect("two names"),
        model: |x| four_branch(x[0], x[1]),
        comparison: Comparison::Identity,
        reference_pf: Some(4.460e-3),
        reference_source: "Monte Carlo with 1e8 samples",
    }
}

/// Midspan deflection threshold of the truss benchmark (m).
pub const TRUSS_THRESHOLD: f64 = 0.12;

pub fn truss_spec() -> BenchmarkSpec {
    let ln = |m, s| MarginalDistribution::from_moments(Family::Lognormal, m, s).expect("valid moments");
    let gumbel = MarginalDistribution::from_moments(Family::Gumbel, 5.0e4, 7.5e3).expect("valid moments");
    let mut marginals = vec![ln(2.0e-3, 2.0e-4), ln(1.0e-3, 1.0e-4), ln(2.1e11, 2.1e10), ln(2.1e11, 2.1e10)];
    marginals.extend(std::iter::repeat_n(gumbel, 6));
    let names = ["A1", "A2", "E1", "E2", "P1", "P2", "P3", "P4", "P5", "P6"].map(String::from).to_vec();
    BenchmarkSpec {
        name: "truss",
        random_vector: RandomVector::independent(marginals)
            .expect("ten marginals")
            .with_names(names)
            .expect("ten names"),
        model: |x| truss_displacement(x).unwrap_or(f64::NAN),
        comparison: Comparison::Threshold { tau: TRUSS_THRESHOLD },
        reference_pf: Some(1.52e-3),
        reference_source: "Monte Carlo with 1e6 samples",
    }
}

pub fn linear_oracle_spec() -> BenchmarkSpec {
    BenchmarkSpec {
        name: "linear_oracle",
        random_vector: RandomVector::independent(vec![MarginalDistribution::gaussian(0.0, 1.0).expect("valid")])
            .expect("one marginal")
            .with_names(vec!["x1".into()])
            .expect("one name"),
        model: |x| 3.0 - x[0],
        comparison: Comparison::Identity,
        reference_pf: Some(std_normal_cdf(-3.0)),
        reference_source: "closed form",
    }
}

/// Names of the frame inputs in order: loads, moduli, inertias, areas.
pub fn frame_input_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=3).map(|i| format!("P{i}")).collect();
    names.extend(["E4".to_string(), "E5".to_string()]);
    names.extend((6..=13).map(|i| format!("I{i}")));
    names.extend((14..=21).map(|i| format!("A{i}")));
    names
}

/// Copula correlation of the frame inputs.
pub fn frame_copula() -> DMatrix<f64> {
    let mut r = DMatrix::identity(21, 21);
    // 0-based positions: E4 = 3, E5 = 4, I6..I13 = 5..12, A14..A21 = 13..20
    r[(3, 4)] = 0.9;
    r[(4, 3)] = 0.9;
    let section: Vec<usize> = (5..21).collect();
    for &i in &section {
        for &j in &section {
            if i != j {
                r[(i, j)] = 0.13;
            }
        }
    }
    // each element pairs I_k with A_{k+8}
    for k in 0..8 {
        let (inertia, area) = (5 + k, 13 + k);
        r[(inertia, area)] = 0.95;
        r[(area, inertia)] = 0.95;
    }
    r
}

/// 21-dimensional correlated input model of the multi-storey frame.
pub fn frame_input_spec() -> Result<RandomVector> {
    let ln = |m, s| MarginalDistribution::from_moments(Family::Lognormal, m, s);
    let tg = |m, s| MarginalDistribution::truncated_gaussian(m, s, 0.0, f64::INFINITY);
    let marginals = vec![
        ln(133.454, 40.04)?,
        ln(88.97, 35.59)?,
        ln(71.175, 28.47)?,
        tg(2.1738e7, 1.9152e6)?,
        tg(2.3796e7, 1.9152e6)?,
        tg(8.1344e-3, 1.0834e-3)?,
        tg(1.1509e-2, 1.2980e-3)?,
        tg(2.1375e-2, 2.5961e-3)?,
        tg(2.5961e-2, 3.0288e-3)?,
        tg(1.0812e-2, 2.5961e-3)?,
        tg(1.4105e-2, 3.4615e-3)?,
        tg(2.3279e-2, 5.6249e-3)?,
        tg(2.5961e-2, 6.4902e-3)?,
        tg(3.1256e-1, 5.5815e-2)?,
        tg(3.7210e-1, 7.4420e-2)?,
        tg(5.0606e-1, 9.3025e-2)?,
        tg(5.5815e-1, 1.1163e-1)?,
        tg(2.5302e-1, 9.3025e-2)?,
        tg(2.9117e-1, 1.0232e-1)?,
        tg(3.7303e-1, 1.2093e-1)?,
        tg(4.1860e-1, 1.9537e-1)?,
    ];
    RandomVector::new(marginals, frame_copula())?.with_names(frame_input_names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active::{mcs_pf, reference_pf};
    use crate::input::{sample_mcs, sample_mcs_standard};
    use crate::rng::substream;

    #[test]
    fn sinc_values() {
        assert_eq!(sinc_1d(0.0), 0.0);
        assert!((sinc_1d(PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert!(sinc_1d(PI).abs() < 1e-12);
    }

    #[test]
    fn four_branch_values() {
        assert_eq!(four_branch(0.0, 0.0), 3.0);
        assert!((four_branch(0.0, 5.0) - (-5.0 + 6.0 / 2f64.sqrt())).abs() < 1e-14);
        assert!((four_branch(0.0, 5.0) + 0.75736).abs() < 1e-5);
        let mut rng = substream(3, 0);
        for _ in 0..100 {
            let a: f64 = rand::Rng::random_range(&mut rng, -6.0..6.0);
            let b: f64 = rand::Rng::random_range(&mut rng, -6.0..6.0);
            assert_eq!(four_branch(a, b), four_branch(b, a));
        }
    }

    #[test]
    fn four_branch_reference_estimate() {
        let spec = four_branch_spec();
        let x = sample_mcs(&spec.random_vector, 1_000_000, &mut substream(2024, 0)).unwrap();
        let g: Vec<f64> = x.rows().map(|r| spec.g(&r)).collect();
        let pf = mcs_pf(&g);
        assert!((4.1e-3..=4.8e-3).contains(&pf), "{pf}");
    }

    #[test]
    fn linear_oracle_reference() {
        let spec = linear_oracle_spec();
        assert!((spec.reference_pf.unwrap() - 1.3499e-3).abs() < 1e-7);
        assert!((crate::active::beta_index(spec.reference_pf.unwrap()) - 3.0).abs() < 1e-12);
        assert_eq!(spec.random_vector.dim(), 1);
        let pf = reference_pf(&spec.random_vector, &mut spec.limit_state(), 1_000_000, 5).unwrap();
        let p = spec.reference_pf.unwrap();
        let three_sigma = 3.0 * (p * (1.0 - p) / 1e6).sqrt();
        assert!((pf - p).abs() < three_sigma, "{pf}");
    }

    #[test]
    fn truss_input_model() {
        let spec = truss_spec();
        let rv = &spec.random_vector;
        assert_eq!(rv.dim(), 10);
        let p = &rv.marginals()[4];
        assert!((p.mean() - 5.0e4).abs() < 1e-8 * 5.0e4);
        assert!((p.std() - 7.5e3).abs() < 1e-8 * 7.5e3);
        assert!((rv.marginals()[0].mean() - 2.0e-3).abs() < 1e-15);
        assert!(spec.g(&[2.0e-3, 1.0e-3, 2.1e11, 2.1e11, 5e4, 5e4, 5e4, 5e4, 5e4, 5e4]) > 0.0);
    }

    #[test]
    fn frame_copula_structure() {
        let r = frame_copula();
        assert_eq!(r, r.transpose());
        assert!((0..21).all(|i| r[(i, i)] == 1.0));
        let names = frame_input_names();
        let at = |a: &str, b: &str| {
            let i = names.iter().position(|n| n == a).unwrap();
            let j = names.iter().position(|n| n == b).unwrap();
            r[(i, j)]
        };
        assert_eq!(at("A14", "I6"), 0.95);
        assert_eq!(at("A21", "I13"), 0.95);
        assert_eq!(at("E4", "E5"), 0.9);
        assert_eq!(at("A14", "I7"), 0.13);
        assert_eq!(at("I6", "I7"), 0.13);
        assert_eq!(at("A15", "A20"), 0.13);
        assert_eq!(at("P1", "P2"), 0.0);
        assert_eq!(at("E4", "I6"), 0.0);
        let eig = r.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        // closed form: the smallest eigenvalue of the section block is 1 - 0.95 = 0.05
        assert!((min - 0.05).abs() < 1e-10, "{min}");
        assert!(frame_input_spec().is_ok());
    }

    #[test]
    fn frame_empirical_correlations() {
        let rv = frame_input_spec().unwrap();
        let u = sample_mcs_standard(&rv, 100_000, &mut substream(8, 0)).unwrap();
        let x = rv.from_standard(&u).unwrap();
        assert!(x.values().iter().all(|v| v.is_finite()));
        // normal scores of the physical sample recover the copula matrix
        let n = x.nrows();
        let mut z = DMatrix::zeros(n, 21);
        for i in 0..n {
            let row = x.row(i);
            for (j, m) in rv.marginals().iter().enumerate() {
                z[(i, j)] = m.to_standard_normal(row[j]).unwrap();
            }
        }
        let r = frame_copula();
        for a in 0..21 {
            for b in a + 1..21 {
                let (ca, cb) = (z.column(a), z.column(b));
                let (ma, mb) = (ca.mean(), cb.mean());
                let cov = ca.iter().zip(cb.iter()).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>();
                let va = ca.iter().map(|p| (p - ma).powi(2)).sum::<f64>();
                let vb = cb.iter().map(|q| (q - mb).powi(2)).sum::<f64>();
                let rho = cov / (va * vb).sqrt();
                assert!((rho - r[(a, b)]).abs() < 0.02, "({a}, {b}): {rho} vs {}", r[(a, b)]);
            }
        }
    }

    #[test]
    fn names_resolve() {
        for name in BENCHMARK_NAMES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
        assert!(by_name("frame_inputs").is_none());
    }
}
