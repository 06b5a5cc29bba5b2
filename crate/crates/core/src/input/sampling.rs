//! Input samplers. All of them draw in independent standard normal space and
//! map the result to physical space through the random vector's transform.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::normal::std_normal_icdf;
use super::random_vector::{RandomVector, SampleMatrix};
use crate::error::{Error, Result};

/// Placement of the point inside its Latin hypercube stratum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LhsVariant {
    /// Uniformly jittered inside the stratum.
    #[default]
    Jittered,
    /// Stratum midpoint.
    Centered,
}

fn require_points(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    Ok(())
}

/// `n × m` matrix of independent standard normal draws.
pub fn standard_normal_matrix<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> DMatrix<f64> {
    // Fill row by row so that the i-th point does not depend on `n`.
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out[(i, j)] = rng.sample(StandardNormal);
        }
    }
    out
}

/// Plain Monte Carlo sample in standard normal space.
pub fn sample_mcs_standard<R: Rng + ?Sized>(rv: &RandomVector, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    require_points(n)?;
    SampleMatrix::standard(standard_normal_matrix(n, rv.dim(), rng))
}

pub fn sample_mcs<R: Rng + ?Sized>(rv: &RandomVector, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    rv.from_standard(&sample_mcs_standard(rv, n, rng)?)
}

/// Latin hypercube on the unit cube: column `j` holds one value per stratum
/// `[k/n, (k+1)/n)`, in an independent random order per column.
pub fn lhs_unit<R: Rng + ?Sized>(n: usize, m: usize, variant: LhsVariant, rng: &mut R) -> Result<DMatrix<f64>> {
    require_points(n)?;
    let mut out = DMatrix::zeros(n, m);
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..m {
        strata.shuffle(rng);
        for (i, &k) in strata.iter().enumerate() {
            let offset = match variant {
                LhsVariant::Jittered => rng.random::<f64>(),
                LhsVariant::Centered => 0.5,
            };
            out[(i, j)] = (k as f64 + offset) / n as f64;
        }
    }
    Ok(out)
}

pub fn sample_lhs_standard<R: Rng + ?Sized>(
    rv: &RandomVector,
    n: usize,
    variant: LhsVariant,
    rng: &mut R,
) -> Result<SampleMatrix> {
    let mut unit = lhs_unit(n, rv.dim(), variant, rng)?;
    unit.apply(|p| {
        // a zero jitter in the first stratum would map to -inf
        *p = std_normal_icdf(p.max(f64::MIN_POSITIVE));
    });
    SampleMatrix::standard(unit)
}

pub fn sample_lhs<R: Rng + ?Sized>(
    rv: &RandomVector,
    n: usize,
    variant: LhsVariant,
    rng: &mut R,
) -> Result<SampleMatrix> {
    rv.from_standard(&sample_lhs_standard(rv, n, variant, rng)?)
}

/// Default radius of the uniform ball design.
pub const DEFAULT_BALL_RADIUS: f64 = 5.0;

/// Points uniformly distributed inside the standard-space ball of `radius`:
/// isotropic direction times `radius · U^{1/M}`.
pub fn sample_uniform_ball_standard<R: Rng + ?Sized>(
    rv: &RandomVector,
    n: usize,
    radius: f64,
    rng: &mut R,
) -> Result<SampleMatrix> {
    require_points(n)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be > 0, got {radius}")));
    }
    let m = rv.dim();
    let mut out = DMatrix::zeros(n, m);
    let mut dir = vec![0.0; m];
    for i in 0..n {
        let norm = loop {
            for d in dir.iter_mut() {
                *d = rng.sample(StandardNormal);
            }
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        let r = radius * rng.random::<f64>().powf(1.0 / m as f64);
        for (j, d) in dir.iter().enumerate() {
            out[(i, j)] = r * d / norm;
        }
    }
    SampleMatrix::standard(out)
}

pub fn sample_uniform_ball<R: Rng + ?Sized>(
    rv: &RandomVector,
    n: usize,
    radius: f64,
    rng: &mut R,
) -> Result<SampleMatrix> {
    rv.from_standard(&sample_uniform_ball_standard(rv, n, radius, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::marginal::MarginalDistribution;
    use crate::rng::substream;
    use nalgebra::dmatrix;

    fn gauss(m: usize) -> RandomVector {
        RandomVector::independent(vec![MarginalDistribution::gaussian(0.0, 1.0).unwrap(); m]).unwrap()
    }

    #[test]
    fn zero_points_rejected() {
        let mut rng = substream(1, 0);
        assert!(sample_mcs(&gauss(2), 0, &mut rng).is_err());
        assert!(sample_lhs(&gauss(2), 0, LhsVariant::Jittered, &mut rng).is_err());
        assert!(sample_uniform_ball(&gauss(2), 0, 5.0, &mut rng).is_err());
        assert!(sample_uniform_ball(&gauss(2), 10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn mcs_moments_and_independence() {
        let mut rng = substream(2, 0);
        let n = 100_000;
        let x = sample_mcs(&gauss(2), n, &mut rng).unwrap();
        let v = x.values();
        let m0 = v.column(0).mean();
        let m1 = v.column(1).mean();
        let corr = v.column(0).dot(&v.column(1)) / n as f64;
        assert!(m0.abs() < 0.02 && m1.abs() < 0.02);
        assert!(corr.abs() < 0.02);
    }

    #[test]
    fn mcs_respects_copula() {
        let rv =
            RandomVector::new(vec![MarginalDistribution::gaussian(0.0, 1.0).unwrap(); 2], dmatrix![1.0, 0.9; 0.9, 1.0])
                .unwrap();
        let mut rng = substream(3, 0);
        let n = 100_000;
        let x = sample_mcs(&rv, n, &mut rng).unwrap();
        let v = x.values();
        let (c0, c1) = (v.column(0), v.column(1));
        let (m0, m1) = (c0.mean(), c1.mean());
        let cov = c0.iter().zip(c1.iter()).map(|(a, b)| (a - m0) * (b - m1)).sum::<f64>();
        let s0 = c0.iter().map(|a| (a - m0).powi(2)).sum::<f64>().sqrt();
        let s1 = c1.iter().map(|b| (b - m1).powi(2)).sum::<f64>().sqrt();
        assert!((cov / (s0 * s1) - 0.9).abs() < 0.02);
    }

    #[test]
    fn lhs_uniform_strata() {
        let rv = RandomVector::independent(vec![MarginalDistribution::uniform(0.0, 1.0).unwrap()]).unwrap();
        let mut rng = substream(4, 0);
        let x = sample_lhs(&rv, 4, LhsVariant::Jittered, &mut rng).unwrap();
        let mut pts: Vec<f64> = x.values().iter().copied().collect();
        pts.sort_by(f64::total_cmp);
        for (k, p) in pts.iter().enumerate() {
            assert!(*p >= k as f64 / 4.0 && *p < (k + 1) as f64 / 4.0, "{pts:?}");
        }
    }

    #[test]
    fn lhs_columns_are_permutations_of_strata() {
        let mut rng = substream(5, 0);
        for (n, m) in [(1, 1), (7, 3), (50, 5)] {
            for variant in [LhsVariant::Jittered, LhsVariant::Centered] {
                let u = lhs_unit(n, m, variant, &mut rng).unwrap();
                for j in 0..m {
                    let mut strata: Vec<usize> = u.column(j).iter().map(|p| (p * n as f64).floor() as usize).collect();
                    strata.sort_unstable();
                    assert_eq!(strata, (0..n).collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn lhs_is_deterministic_per_seed() {
        let rv = gauss(2);
        let a = sample_lhs(&rv, 20, LhsVariant::Jittered, &mut substream(9, 1)).unwrap();
        let b = sample_lhs(&rv, 20, LhsVariant::Jittered, &mut substream(9, 1)).unwrap();
        let c = sample_lhs(&rv, 20, LhsVariant::Jittered, &mut substream(10, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ball_containment_and_uniformity() {
        let mut rng = substream(6, 0);
        let u = sample_uniform_ball_standard(&gauss(3), 2000, 2.5, &mut rng).unwrap();
        for i in 0..u.nrows() {
            assert!(u.values().row(i).norm() <= 2.5 + 1e-12);
        }

        let u1 = sample_uniform_ball_standard(&gauss(1), 10_000, 5.0, &mut rng).unwrap();
        assert!(u1.values().iter().all(|v| v.abs() <= 5.0));
        assert!(u1.values().mean().abs() < 0.1);

        let u2 = sample_uniform_ball_standard(&gauss(2), 10_000, 5.0, &mut rng).unwrap();
        let inner =
            (0..u2.nrows()).filter(|&i| u2.values().row(i).norm() <= 5.0 / 2f64.sqrt()).count() as f64 / 10_000.0;
        // binomial sd at p = 0.5 is 0.005
        assert!((inner - 0.5).abs() < 0.02, "{inner}");
    }
}
