use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::normal::{std_normal_cdf, std_normal_icdf, std_normal_isf, std_normal_pdf, std_normal_sf};
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Distribution families accepted by [`MarginalDistribution::from_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Lognormal,
    Gumbel,
    Uniform,
    TruncatedGaussian,
}

/// A univariate input distribution.
///
/// `Lognormal` is parameterised by the mean `lambda` and standard deviation
/// `zeta` of `ln X`; `Gumbel` is the maximum-value type I law with
/// `F(x) = exp(-exp(-(x - location)/scale))`. `TruncatedGaussian` stores the
/// parameters of the parent (untruncated) normal and renormalises by the mass
/// inside `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MarginalDistribution {
    Gaussian { mean: f64, std: f64 },
    Lognormal { lambda: f64, zeta: f64 },
    Gumbel { location: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
    TruncatedGaussian { mu: f64, sigma: f64, lower: f64, upper: f64 },
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {value}")))
    }
}

fn finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {value}")))
    }
}

impl MarginalDistribution {
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("std", std)?;
        Ok(Self::Gaussian { mean, std })
    }

    pub fn lognormal(lambda: f64, zeta: f64) -> Result<Self> {
        finite("lambda", lambda)?;
        positive("zeta", zeta)?;
        Ok(Self::Lognormal { lambda, zeta })
    }

    pub fn gumbel(location: f64, scale: f64) -> Result<Self> {
        finite("location", location)?;
        positive("scale", scale)?;
        Ok(Self::Gumbel { location, scale })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        finite("lower", lower)?;
        finite("upper", upper)?;
        if lower >= upper {
            return Err(Error::InvalidParameter(format!(
                "uniform bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self::Uniform { lower, upper })
    }

    /// Truncated normal from the moments of the parent normal. Either bound
    /// may be infinite.
    pub fn truncated_gaussian(mu: f64, sigma: f64, lower: f64, upper: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma", sigma)?;
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidParameter(format!(
                "truncation bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        let dist = Self::TruncatedGaussian { mu, sigma, lower, upper };
        if dist.truncation_mass() <= 0.0 {
            return Err(Error::InvalidParameter("truncation interval carries no probability mass".into()));
        }
        Ok(dist)
    }

    /// Build a marginal whose mean and standard deviation equal the given
    /// values, by inverting the closed-form moment expressions.
    pub fn from_moments(family: Family, mean: f64, std: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("std", std)?;
        match family {
            Family::Gaussian => Self::gaussian(mean, std),
            Family::Lognormal => {
                if mean <= 0.0 {
                    return Err(Error::InvalidParameter(format!("lognormal mean must be > 0, got {mean}")));
                }
                let cov = std / mean;
                let zeta = (cov * cov).ln_1p().sqrt();
                let lambda = mean.ln() - 0.5 * zeta * zeta;
                Self::lognormal(lambda, zeta)
            }
            Family::Gumbel => {
                let scale = std * 6f64.sqrt() / PI;
                Self::gumbel(mean - EULER_GAMMA * scale, scale)
            }
            Family::Uniform | Family::TruncatedGaussian => Err(Error::InvalidParameter(format!(
                "moment specification is not supported for {family:?}; use the direct constructor"
            ))),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Gaussian { .. } => Family::Gaussian,
            Self::Lognormal { .. } => Family::Lognormal,
            Self::Gumbel { .. } => Family::Gumbel,
            Self::Uniform { .. } => Family::Uniform,
            Self::TruncatedGaussian { .. } => Family::TruncatedGaussian,
        }
    }

    /// Closed support `[lo, hi]` (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Gaussian { .. } | Self::Gumbel { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Lognormal { .. } => (0.0, f64::INFINITY),
            Self::Uniform { lower, upper } | Self::TruncatedGaussian { lower, upper, .. } => (lower, upper),
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x >= lo && x <= hi
    }

    /// Standardised truncation bounds and the probability mass between them.
    fn truncation(&self) -> (f64, f64, f64) {
        match *self {
            Self::TruncatedGaussian { mu, sigma, lower, upper } => {
                let a = (lower - mu) / sigma;
                let b = (upper - mu) / sigma;
                let mass =
                    if a > 0.0 { std_normal_sf(a) - std_normal_sf(b) } else { std_normal_cdf(b) - std_normal_cdf(a) };
                (a, b, mass)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY, 1.0),
        }
    }

    fn truncation_mass(&self) -> f64 {
        self.truncation().2
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mean, .. } => mean,
            Self::Lognormal { lambda, zeta } => (lambda + 0.5 * zeta * zeta).exp(),
            Self::Gumbel { location, scale } => location + EULER_GAMMA * scale,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
            Self::TruncatedGaussian { mu, sigma, .. } => {
                let (a, b, mass) = self.truncation();
                mu + sigma * (std_normal_pdf(a) - std_normal_pdf(b)) / mass
            }
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Self::Gaussian { std, .. } => std,
            Self::Lognormal { lambda, zeta } => {
                let z2 = zeta * zeta;
                (z2.exp_m1()).sqrt() * (lambda + 0.5 * z2).exp()
            }
            Self::Gumbel { scale, .. } => PI * scale / 6f64.sqrt(),
            Self::Uniform { lower, upper } => (upper - lower) / 12f64.sqrt(),
            Self::TruncatedGaussian { sigma, .. } => {
                let (a, b, mass) = self.truncation();
                let xphi = |t: f64| if t.is_finite() { t * std_normal_pdf(t) } else { 0.0 };
                let shift = (std_normal_pdf(a) - std_normal_pdf(b)) / mass;
                let var = 1.0 + (xphi(a) - xphi(b)) / mass - shift * shift;
                sigma * var.sqrt()
            }
        }
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        match *self {
            Self::Gaussian { mean, std } => std_normal_pdf((x - mean) / std) / std,
            Self::Lognormal { lambda, zeta } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_pdf((x.ln() - lambda) / zeta) / (zeta * x)
                }
            }
            Self::Gumbel { location, scale } => {
                let t = (x - location) / scale;
                (-(t + (-t).exp())).exp() / scale
            }
            Self::Uniform { lower, upper } => 1.0 / (upper - lower),
            Self::TruncatedGaussian { mu, sigma, .. } => {
                std_normal_pdf((x - mu) / sigma) / (sigma * self.truncation_mass())
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match *self {
            Self::Gaussian { mean, std } => std_normal_cdf((x - mean) / std),
            Self::Lognormal { lambda, zeta } => std_normal_cdf((x.ln() - lambda) / zeta),
            Self::Gumbel { location, scale } => (-(-(x - location) / scale).exp()).exp(),
            Self::Uniform { lower, upper } => (x - lower) / (upper - lower),
            Self::TruncatedGaussian { mu, sigma, .. } => {
                let (a, _, mass) = self.truncation();
                let s = (x - mu) / sigma;
                if a > 0.0 {
                    ((std_normal_sf(a) - std_normal_sf(s)) / mass).clamp(0.0, 1.0)
                } else {
                    ((std_normal_cdf(s) - std_normal_cdf(a)) / mass).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Survival function `1 - F(x)`, evaluated without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 1.0;
        }
        if x >= hi {
            return 0.0;
        }
        match *self {
            Self::Gaussian { mean, std } => std_normal_sf((x - mean) / std),
            Self::Lognormal { lambda, zeta } => std_normal_sf((x.ln() - lambda) / zeta),
            Self::Gumbel { location, scale } => -(-(-(x - location) / scale).exp()).exp_m1(),
            Self::Uniform { lower, upper } => (upper - x) / (upper - lower),
            Self::TruncatedGaussian { mu, sigma, .. } => {
                let (_, b, mass) = self.truncation();
                let s = (x - mu) / sigma;
                if s > 0.0 {
                    ((std_normal_sf(s) - std_normal_sf(b)) / mass).clamp(0.0, 1.0)
                } else {
                    ((std_normal_cdf(b) - std_normal_cdf(s)) / mass).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Quantile function on the open interval `(0, 1)`.
    pub fn icdf(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("probability must lie in (0, 1), got {p}")));
        }
        Ok(match *self {
            Self::Gaussian { mean, std } => mean + std * std_normal_icdf(p),
            Self::Lognormal { lambda, zeta } => (lambda + zeta * std_normal_icdf(p)).exp(),
            Self::Gumbel { location, scale } => location - scale * (-p.ln()).ln(),
            Self::Uniform { lower, upper } => lower + (upper - lower) * p,
            Self::TruncatedGaussian { .. } => {
                if p <= 0.5 {
                    self.truncated_from_lower(p)
                } else {
                    self.truncated_from_upper(1.0 - p)
                }
            }
        })
    }

    fn truncated_from_lower(&self, p: f64) -> f64 {
        let Self::TruncatedGaussian { mu, sigma, lower, upper } = *self else { unreachable!() };
        let (a, _, mass) = self.truncation();
        let s = if a > 0.0 {
            std_normal_isf(std_normal_sf(a) - p * mass)
        } else {
            std_normal_icdf(std_normal_cdf(a) + p * mass)
        };
        (mu + sigma * s).clamp(lower, upper)
    }

    fn truncated_from_upper(&self, q: f64) -> f64 {
        let Self::TruncatedGaussian { mu, sigma, lower, upper } = *self else { unreachable!() };
        let (_, b, mass) = self.truncation();
        let s = if b < 0.0 {
            std_normal_icdf(std_normal_cdf(b) - q * mass)
        } else {
            std_normal_isf(std_normal_sf(b) + q * mass)
        };
        (mu + sigma * s).clamp(lower, upper)
    }

    /// Map a physical value to the standard normal variable with the same
    /// probability rank, `Φ⁻¹(F(x))`. The tail with the smaller probability is
    /// used so that neither tail loses precision.
    pub fn to_standard_normal(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return None;
        }
        let z = match *self {
            Self::Gaussian { mean, std } => (x - mean) / std,
            Self::Lognormal { lambda, zeta } => (x.ln() - lambda) / zeta,
            _ => {
                let p = self.cdf(x);
                if p <= 0.5 {
                    std_normal_icdf(p)
                } else {
                    std_normal_isf(self.sf(x))
                }
            }
        };
        z.is_finite().then_some(z)
    }

    /// Inverse of [`Self::to_standard_normal`]: `F⁻¹(Φ(z))`.
    pub fn from_standard_normal(&self, z: f64) -> f64 {
        match *self {
            Self::Gaussian { mean, std } => mean + std * z,
            Self::Lognormal { lambda, zeta } => (lambda + zeta * z).exp(),
            Self::Gumbel { location, scale } => {
                // -ln F = -ln Φ(z); for z > 0 use -ln(1 - Q(z)) = -ln1p(-Q)
                let neg_log_p = if z <= 0.0 { -std_normal_cdf(z).ln() } else { -(-std_normal_sf(z)).ln_1p() };
                location - scale * neg_log_p.ln()
            }
            Self::Uniform { lower, upper } => {
                if z <= 0.0 {
                    lower + (upper - lower) * std_normal_cdf(z)
                } else {
                    upper - (upper - lower) * std_normal_sf(z)
                }
            }
            Self::TruncatedGaussian { .. } => {
                if z <= 0.0 {
                    self.truncated_from_lower(std_normal_cdf(z))
                } else {
                    self.truncated_from_upper(std_normal_sf(z))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn gaussian_from_moments_is_identity() {
        let m = MarginalDistribution::from_moments(Family::Gaussian, 0.0, 1.0).unwrap();
        assert_eq!(m, MarginalDistribution::Gaussian { mean: 0.0, std: 1.0 });
    }

    #[test]
    fn lognormal_from_moments() {
        let m = MarginalDistribution::from_moments(Family::Lognormal, 2.0e-3, 2.0e-4).unwrap();
        let MarginalDistribution::Lognormal { lambda, zeta } = m else { panic!() };
        let expected_zeta = (1.0f64 + 0.01).ln().sqrt();
        assert!((zeta - 0.099_751_3).abs() < 1e-7);
        assert!(rel(zeta, expected_zeta) < 1e-15);
        assert!(rel(lambda, 2.0e-3f64.ln() - 0.5 * expected_zeta * expected_zeta) < 1e-15);
        assert!(rel(m.mean(), 2.0e-3) < 1e-12);
        assert!(rel(m.std(), 2.0e-4) < 1e-12);
    }

    #[test]
    fn gumbel_from_moments() {
        let m = MarginalDistribution::from_moments(Family::Gumbel, 5.0e4, 7.5e3).unwrap();
        let MarginalDistribution::Gumbel { location, scale } = m else { panic!() };
        assert!((scale - 5847.726).abs() < 1e-3, "{scale}");
        assert!((location - 46624.6).abs() < 0.1, "{location}");
        assert!(rel(m.mean(), 5.0e4) < 1e-12);
        assert!(rel(m.std(), 7.5e3) < 1e-12);
    }

    #[test]
    fn sampled_moments_match_within_one_percent() {
        let mut rng = crate::rng::substream(11, 0);
        for (family, mean, std) in [(Family::Lognormal, 2.0e-3, 2.0e-4), (Family::Gumbel, 5.0e4, 7.5e3)] {
            let m = MarginalDistribution::from_moments(family, mean, std).unwrap();
            let n = 1_000_000;
            let xs: Vec<f64> = (0..n).map(|_| m.icdf(rng.random_range(1e-300..1.0)).unwrap()).collect();
            let mu = xs.iter().sum::<f64>() / n as f64;
            let sd = (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            assert!(rel(mu, mean) < 0.01 && rel(sd, std) < 0.01, "{family:?}: {mu} {sd}");
        }
    }

    #[test]
    fn moment_errors() {
        assert!(MarginalDistribution::from_moments(Family::Gaussian, 0.0, 0.0).is_err());
        assert!(MarginalDistribution::from_moments(Family::Gaussian, 0.0, -1.0).is_err());
        assert!(MarginalDistribution::from_moments(Family::Lognormal, -1.0, 1.0).is_err());
        assert!(MarginalDistribution::from_moments(Family::Uniform, 0.0, 1.0).is_err());
        assert!(MarginalDistribution::from_moments(Family::TruncatedGaussian, 0.0, 1.0).is_err());
        assert!(MarginalDistribution::uniform(1.0, 1.0).is_err());
        assert!(MarginalDistribution::truncated_gaussian(0.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_cdf_examples() {
        let m = MarginalDistribution::gaussian(0.0, 1.0).unwrap();
        assert_eq!(m.cdf(0.0), 0.5);
        let p = std_normal_cdf(-3.0);
        assert!((m.icdf(p).unwrap() + 3.0).abs() < 1e-9);
        assert!(m.icdf(0.0).is_err());
        assert!(m.icdf(1.0).is_err());
    }

    #[test]
    fn truncated_gaussian_lower_bound() {
        let m = MarginalDistribution::truncated_gaussian(0.0, 1.0, 0.0, f64::INFINITY).unwrap();
        assert_eq!(m.cdf(0.0), 0.0);
        assert_eq!(m.pdf(-0.5), 0.0);
        // half-normal: density doubles
        assert!(rel(m.pdf(1.0), 2.0 * std_normal_pdf(1.0)) < 1e-14);
        assert!(rel(m.cdf(1.0), 2.0 * std_normal_cdf(1.0) - 1.0) < 1e-14);
        // half-normal moments
        assert!(rel(m.mean(), (2.0 / PI).sqrt()) < 1e-14);
        assert!(rel(m.std(), (1.0 - 2.0 / PI).sqrt()) < 1e-12);
    }

    #[test]
    fn pdf_outside_support_is_zero() {
        let ln = MarginalDistribution::lognormal(0.0, 1.0).unwrap();
        assert_eq!(ln.pdf(-1.0), 0.0);
        let u = MarginalDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.pdf(1.5), 0.0);
        assert_eq!(u.cdf(-1.0), 0.0);
        assert_eq!(u.cdf(2.0), 1.0);
    }

    #[test]
    fn lognormal_median_maps_to_zero() {
        let m = MarginalDistribution::lognormal(0.3, 0.2).unwrap();
        assert!(m.to_standard_normal(0.3f64.exp()).unwrap().abs() < 1e-14);
    }

    fn all_families() -> Vec<MarginalDistribution> {
        vec![
            MarginalDistribution::gaussian(1.0, 2.0).unwrap(),
            MarginalDistribution::from_moments(Family::Lognormal, 2.1e11, 2.1e10).unwrap(),
            MarginalDistribution::from_moments(Family::Gumbel, 5.0e4, 7.5e3).unwrap(),
            MarginalDistribution::uniform(0.0, 2.0 * PI).unwrap(),
            MarginalDistribution::truncated_gaussian(0.4186, 0.19537, 0.0, f64::INFINITY).unwrap(),
            MarginalDistribution::truncated_gaussian(2.1738e7, 1.9152e6, 0.0, f64::INFINITY).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn icdf_inverts_cdf_on_central_range(p in 5e-5f64..(1.0 - 5e-5)) {
            for m in all_families() {
                let x = m.icdf(p).unwrap();
                let back = m.icdf(m.cdf(x)).unwrap();
                prop_assert!(rel(back, x) < 1e-9 || (back - x).abs() < 1e-12, "{m:?}: {x} {back}");
            }
        }

        #[test]
        fn standard_normal_round_trip(z in -6.0f64..6.0) {
            for m in all_families() {
                let x = m.from_standard_normal(z);
                let back = m.to_standard_normal(x).unwrap();
                prop_assert!((back - z).abs() < 1e-8 * z.abs().max(1.0), "{m:?}: {z} -> {x} -> {back}");
            }
        }

        #[test]
        fn cdf_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for m in all_families() {
                let scale = m.std();
                let mid = m.mean();
                prop_assert!(m.cdf(mid + lo * scale) <= m.cdf(mid + hi * scale));
            }
        }
    }
}
