//! Run configuration file.
//!
//! A run is described by one TOML document:
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//!
//! [input]
//! marginals = [
//!     { name = "x1", family = "gaussian", mean = 0.0, std = 1.0 },
//!     { name = "x2", family = "lognormal", mean = 2.0, std = 0.2 },
//! ]
//! copula = [[1.0, 0.3], [0.3, 1.0]]
//!
//! [limit_state]
//! command = "./model.sh"
//! threshold = 0.12
//!
//! [algorithm]
//! initial_size = 20
//! points_per_iteration = 3
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::external::ExternalModel;
use crate::active::{
    AbpceConfig, Comparison, ConvergenceConfig, EnrichmentConfig, InitialDesign, InitialDesignKind, LimitState,
};
use crate::benchmarks::{by_name, frame_input_spec, BENCHMARK_NAMES};
use crate::bootstrap::{BootstrapMode, MIN_REPLICATES_ACTIVE};
use crate::error::{Error, Result};
use crate::input::{Family, MarginalDistribution, RandomVector, DEFAULT_BALL_RADIUS};
use crate::regression::AdaptiveConfig;

/// Smallest candidate pool accepted from a configuration file.
pub const MIN_POOL_SIZE: usize = 1000;

pub const DEFAULT_OUTPUT_DIR: &str = "abpce_output";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    pub limit_state: LimitStateConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
}

/// Input model: either a named preset or explicit marginals and copula.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// `frame_inputs` or the name of a built-in benchmark.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marginals: Vec<MarginalConfig>,
    /// Correlation matrix of the Gaussian copula, row by row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copula: Option<Vec<Vec<f64>>>,
}

/// One marginal, given by its mean and standard deviation or by the
/// family's own parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitStateConfig {
    /// Name of a built-in benchmark model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// External model executable, called with a batch directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    /// Where batch directories are created; defaults to `<output>/batches`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_dir: Option<PathBuf>,
    /// When set, `g = threshold - response`; otherwise the response is `g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Evaluate each point of a batch in its own directory, concurrently.
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignType {
    #[default]
    Lhs,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmConfig {
    /// Initial design size; `max(12, 2M)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_size: Option<usize>,
    pub initial_design: DesignType,
    pub ball_radius: f64,
    pub replicates: usize,
    pub bootstrap_mode: BootstrapMode,
    pub points_per_iteration: usize,
    pub epsilon_pf: f64,
    pub pool_size: usize,
    pub degree_min: usize,
    pub degree_max: usize,
    pub q_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_interaction: Option<usize>,
    pub max_evaluations: usize,
    pub required_consecutive: usize,
    pub early_stop_patience: usize,
    pub kmeans_max_iter: usize,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        let conv = ConvergenceConfig::default();
        let adaptive = AdaptiveConfig::default();
        let enrichment = EnrichmentConfig::default();
        Self {
            initial_size: None,
            initial_design: DesignType::Lhs,
            ball_radius: DEFAULT_BALL_RADIUS,
            replicates: conv.replicates,
            bootstrap_mode: BootstrapMode::Fast,
            points_per_iteration: enrichment.points_per_iteration,
            epsilon_pf: conv.epsilon_pf,
            pool_size: conv.pool_size,
            degree_min: adaptive.degree_min,
            degree_max: adaptive.degree_max,
            q_norm: adaptive.q_norm,
            max_interaction: adaptive.max_interaction,
            max_evaluations: conv.max_evaluations,
            required_consecutive: conv.required_consecutive,
            early_stop_patience: adaptive.early_stop_patience,
            kmeans_max_iter: enrichment.kmeans_max_iter,
        }
    }
}

impl AlgorithmConfig {
    pub fn to_abpce(&self) -> AbpceConfig {
        let kind = match self.initial_design {
            DesignType::Lhs => InitialDesignKind::Lhs,
            DesignType::Ball => InitialDesignKind::Ball { radius: self.ball_radius },
        };
        AbpceConfig {
            initial: InitialDesign { kind, size: self.initial_size },
            enrichment: EnrichmentConfig {
                points_per_iteration: self.points_per_iteration,
                kmeans_max_iter: self.kmeans_max_iter,
            },
            convergence: ConvergenceConfig {
                epsilon_pf: self.epsilon_pf,
                required_consecutive: self.required_consecutive,
                max_evaluations: self.max_evaluations,
                replicates: self.replicates,
                pool_size: self.pool_size,
            },
            adaptive: AdaptiveConfig {
                degree_min: self.degree_min,
                degree_max: self.degree_max,
                q_norm: self.q_norm,
                max_interaction: self.max_interaction,
                early_stop_patience: self.early_stop_patience,
            },
            bootstrap_mode: self.bootstrap_mode,
        }
    }

    fn check_ranges(&self) -> Result<()> {
        if !(self.epsilon_pf > 0.0 && self.epsilon_pf < 1.0) {
            return Err(config_error(format!("algorithm.epsilon_pf must lie in (0, 1), got {}", self.epsilon_pf)));
        }
        if self.replicates < MIN_REPLICATES_ACTIVE {
            return Err(config_error(format!(
                "algorithm.replicates = {} is below the floor B >= {MIN_REPLICATES_ACTIVE}",
                self.replicates
            )));
        }
        if self.points_per_iteration < 1 {
            return Err(config_error("algorithm.points_per_iteration must satisfy K >= 1"));
        }
        if self.pool_size < MIN_POOL_SIZE {
            return Err(config_error(format!(
                "algorithm.pool_size = {} is below the floor N_MCS >= {MIN_POOL_SIZE}",
                self.pool_size
            )));
        }
        Ok(())
    }
}

fn config_error(message: impl Into<String>) -> Error {
    Error::Config(message.into())
}

fn required(value: Option<f64>, key: &str, index: usize) -> Result<f64> {
    value.ok_or_else(|| config_error(format!("input.marginals[{index}] is missing `{key}`")))
}

impl MarginalConfig {
    fn given(&self) -> Vec<&'static str> {
        let fields = [
            ("mean", self.mean),
            ("std", self.std),
            ("lambda", self.lambda),
            ("zeta", self.zeta),
            ("location", self.location),
            ("scale", self.scale),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("lower", self.lower),
            ("upper", self.upper),
        ];
        fields.iter().filter(|(_, v)| v.is_some()).map(|(k, _)| *k).collect()
    }

    pub fn to_distribution(&self, index: usize) -> Result<MarginalDistribution> {
        let given = self.given();
        let only = |allowed: &[&str]| -> Result<()> {
            match given.iter().find(|k| !allowed.contains(k)) {
                Some(k) => Err(config_error(format!(
                    "input.marginals[{index}]: `{k}` does not apply to family {:?} with these parameters",
                    self.family
                ))),
                None => Ok(()),
            }
        };
        let by_moments = self.mean.is_some() || self.std.is_some();
        let dist = match self.family {
            Family::Gaussian => {
                only(&["mean", "std"])?;
                MarginalDistribution::gaussian(required(self.mean, "mean", index)?, required(self.std, "std", index)?)
            }
            Family::Lognormal if by_moments => {
                only(&["mean", "std"])?;
                MarginalDistribution::from_moments(
                    Family::Lognormal,
                    required(self.mean, "mean", index)?,
                    required(self.std, "std", index)?,
                )
            }
            Family::Lognormal => {
                only(&["lambda", "zeta"])?;
                MarginalDistribution::lognormal(
                    required(self.lambda, "lambda", index)?,
                    required(self.zeta, "zeta", index)?,
                )
            }
            Family::Gumbel if by_moments => {
                only(&["mean", "std"])?;
                MarginalDistribution::from_moments(
                    Family::Gumbel,
                    required(self.mean, "mean", index)?,
                    required(self.std, "std", index)?,
                )
            }
            Family::Gumbel => {
                only(&["location", "scale"])?;
                MarginalDistribution::gumbel(
                    required(self.location, "location", index)?,
                    required(self.scale, "scale", index)?,
                )
            }
            Family::Uniform => {
                only(&["lower", "upper"])?;
                MarginalDistribution::uniform(
                    required(self.lower, "lower", index)?,
                    required(self.upper, "upper", index)?,
                )
            }
            Family::TruncatedGaussian => {
                only(&["mu", "sigma", "lower", "upper"])?;
                MarginalDistribution::truncated_gaussian(
                    required(self.mu, "mu", index)?,
                    required(self.sigma, "sigma", index)?,
                    self.lower.unwrap_or(f64::NEG_INFINITY),
                    self.upper.unwrap_or(f64::INFINITY),
                )
            }
        };
        dist.map_err(|e| config_error(format!("input.marginals[{index}]: {e}")))
    }
}

fn preset_input(name: &str) -> Result<RandomVector> {
    if name == "frame_inputs" {
        return frame_input_spec();
    }
    by_name(name).map(|spec| spec.random_vector).ok_or_else(|| config_error(format!("unknown input preset `{name}`")))
}

impl InputConfig {
    pub fn to_random_vector(&self) -> Result<RandomVector> {
        if let Some(name) = &self.preset {
            if !self.marginals.is_empty() || self.copula.is_some() {
                return Err(config_error("input.preset cannot be combined with marginals or copula"));
            }
            return preset_input(name);
        }
        if self.marginals.is_empty() {
            return Err(config_error("input needs a preset or at least one marginal"));
        }
        let m = self.marginals.len();
        let marginals =
            self.marginals.iter().enumerate().map(|(i, c)| c.to_distribution(i)).collect::<Result<Vec<_>>>()?;
        let copula = match &self.copula {
            None => DMatrix::identity(m, m),
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(config_error(format!("input.copula must be a {m}x{m} matrix")));
                }
                DMatrix::from_fn(m, m, |i, j| rows[i][j])
            }
        };
        let rv = RandomVector::new(marginals, copula).map_err(|e| match e {
            Error::NotPositiveDefinite(_) => config_error("matrix `input.copula` is not positive definite"),
            other => config_error(format!("input.copula: {other}")),
        })?;
        let names = self
            .marginals
            .iter()
            .enumerate()
            .map(|(i, c)| c.name.clone().unwrap_or_else(|| format!("x{}", i + 1)))
            .collect();
        rv.with_names(names)
    }
}

impl LimitStateConfig {
    fn comparison(&self, default: Comparison) -> Comparison {
        match self.threshold {
            Some(tau) => Comparison::Threshold { tau },
            None => default,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serialises to TOML")
    }

    /// Input model; a built-in limit state supplies its own when `input` is
    /// absent.
    pub fn random_vector(&self) -> Result<RandomVector> {
        match (&self.input, &self.limit_state.builtin) {
            (Some(input), _) => input.to_random_vector(),
            (None, Some(name)) => preset_input(name),
            (None, None) => Err(config_error("an external limit state needs an [input] section")),
        }
    }

    /// Checks every setting without evaluating any model.
    pub fn validate(&self) -> Result<RandomVector> {
        let ls = &self.limit_state;
        match (&ls.builtin, &ls.command) {
            (Some(_), Some(_)) => {
                return Err(config_error("limit_state takes either `builtin` or `command`, not both"))
            }
            (None, None) => return Err(config_error("limit_state needs `builtin` or `command`")),
            (Some(name), None) => {
                if by_name(name).is_none() {
                    return Err(config_error(format!(
                        "unknown builtin limit state `{name}`; expected one of {}",
                        BENCHMARK_NAMES.join(", ")
                    )));
                }
                if !ls.args.is_empty() || ls.working_dir.is_some() || ls.parallel {
                    return Err(config_error("args, working_dir and parallel apply to external commands only"));
                }
            }
            (None, Some(cmd)) => {
                if cmd.trim().is_empty() {
                    return Err(config_error("limit_state.command is empty"));
                }
            }
        }
        if let Some(tau) = ls.threshold {
            if !tau.is_finite() {
                return Err(config_error(format!("limit_state.threshold must be finite, got {tau}")));
            }
        }
        let rv = self.random_vector()?;
        if let Some(name) = &ls.builtin {
            let expected = by_name(name).expect("checked above").random_vector.dim();
            if rv.dim() != expected {
                return Err(config_error(format!(
                    "builtin `{name}` takes {expected} inputs but the input model has {}",
                    rv.dim()
                )));
            }
        }
        self.algorithm.check_ranges()?;
        self.algorithm.to_abpce().validate(rv.dim()).map_err(|e| config_error(format!("algorithm: {e}")))?;
        Ok(rv)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// Builds the limit state. Relative external paths resolve against
    /// `base_dir`, batch directories default to `<output>/batches`.
    pub fn limit_state(&self, base_dir: &Path, output_dir: &Path) -> Result<LimitState> {
        let ls = &self.limit_state;
        if let Some(name) = &ls.builtin {
            let spec = by_name(name).ok_or_else(|| config_error(format!("unknown builtin limit state `{name}`")))?;
            return Ok(LimitState::from_fn(spec.model, ls.comparison(spec.comparison)));
        }
        let cmd = ls.command.as_deref().ok_or_else(|| config_error("limit_state needs `builtin` or `command`"))?;
        let command = if Path::new(cmd).components().count() > 1 && Path::new(cmd).is_relative() {
            base_dir.join(cmd)
        } else {
            PathBuf::from(cmd)
        };
        let work_dir = match &ls.working_dir {
            Some(d) if d.is_relative() => base_dir.join(d),
            Some(d) => d.clone(),
            None => output_dir.join("batches"),
        };
        let model = ExternalModel::new(command, ls.args.clone(), work_dir).parallel(ls.parallel);
        Ok(LimitState::new(Box::new(model), ls.comparison(Comparison::Identity)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_BRANCH: &str = r#"
seed = 3
[limit_state]
builtin = "four_branch"
[algorithm]
initial_size = 20
points_per_iteration = 3
epsilon_pf = 0.05
"#;

    #[test]
    fn parses_a_builtin_run() {
        let cfg = RunConfig::from_toml_str(FOUR_BRANCH).unwrap();
        let rv = cfg.validate().unwrap();
        assert_eq!(rv.dim(), 2);
        assert_eq!(cfg.seed, 3);
        let a = cfg.algorithm.to_abpce();
        assert_eq!(a.initial.size, Some(20));
        assert_eq!(a.enrichment.points_per_iteration, 3);
        assert_eq!(a.convergence.replicates, 100);
        // the echo reparses to the same configuration
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn replicate_floor_is_cited() {
        let text = format!("{FOUR_BRANCH}replicates = 10\n");
        let err = RunConfig::from_toml_str(&text).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("B >= 20"), "{err}");
    }

    #[test]
    fn numeric_ranges() {
        for extra in ["epsilon_pf = 1.0", "epsilon_pf = 0.0", "points_per_iteration = 0", "pool_size = 999"] {
            let base = "[limit_state]\nbuiltin = \"four_branch\"\n[algorithm]\n";
            let text = format!("{base}{extra}\n");
            assert!(RunConfig::from_toml_str(&text).unwrap().validate().is_err(), "{extra}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str(&format!("{FOUR_BRANCH}colour = 1\n")).is_err());
        assert!(RunConfig::from_toml_str("bogus = 1\n[limit_state]\nbuiltin = \"truss\"\n").is_err());
        let marg = r#"
[input]
marginals = [{ family = "gaussian", mean = 0.0, std = 1.0, shape = 2.0 }]
[limit_state]
command = "m"
"#;
        assert!(RunConfig::from_toml_str(marg).is_err());
    }

    #[test]
    fn non_pd_copula_names_the_matrix() {
        let text = r#"
[input]
marginals = [
    { family = "gaussian", mean = 0.0, std = 1.0 },
    { family = "gaussian", mean = 0.0, std = 1.0 },
]
copula = [[1.0, 1.5], [1.5, 1.0]]
[limit_state]
command = "model"
"#;
        let err = RunConfig::from_toml_str(text).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("input.copula"), "{err}");
    }

    #[test]
    fn marginal_parameterisations() {
        let m = |s: &str| -> Result<MarginalDistribution> {
            let c: MarginalConfig = toml::from_str(s).map_err(|e| config_error(e.to_string()))?;
            c.to_distribution(0)
        };
        let a = m("family = \"lognormal\"\nmean = 2.0\nstd = 0.2").unwrap();
        assert!((a.mean() - 2.0).abs() < 1e-12 && (a.std() - 0.2).abs() < 1e-12);
        let b = m("family = \"lognormal\"\nlambda = 0.1\nzeta = 0.3").unwrap();
        assert_eq!(b, MarginalDistribution::lognormal(0.1, 0.3).unwrap());
        let g = m("family = \"gumbel\"\nmean = 5.0e4\nstd = 7.5e3").unwrap();
        assert!((g.std() - 7.5e3).abs() < 1e-6);
        let t = m("family = \"truncated_gaussian\"\nmu = 1.0\nsigma = 0.5\nlower = 0.0").unwrap();
        assert_eq!(t.support(), (0.0, f64::INFINITY));
        assert!(m("family = \"uniform\"\nlower = 0.0\nupper = 1.0").is_ok());
        assert!(m("family = \"lognormal\"\nmean = 2.0\nzeta = 0.3").is_err());
        assert!(m("family = \"gaussian\"\nmean = 2.0").is_err());
        assert!(m("family = \"uniform\"\nmean = 0.5\nstd = 0.1").is_err());
    }

    #[test]
    fn limit_state_choice() {
        let both = "[limit_state]\nbuiltin = \"truss\"\ncommand = \"x\"\n";
        assert!(RunConfig::from_toml_str(both).unwrap().validate().is_err());
        let none = "[limit_state]\nthreshold = 1.0\n";
        assert!(RunConfig::from_toml_str(none).unwrap().validate().is_err());
        let unknown = "[limit_state]\nbuiltin = \"bridge\"\n";
        assert!(RunConfig::from_toml_str(unknown).unwrap().validate().is_err());
        let external_without_input = "[limit_state]\ncommand = \"./m.sh\"\n";
        assert!(RunConfig::from_toml_str(external_without_input).unwrap().validate().is_err());
        let frame = "[input]\npreset = \"frame_inputs\"\n[limit_state]\ncommand = \"./frame\"\n[algorithm]\nmax_evaluations = 2000\n";
        assert_eq!(RunConfig::from_toml_str(frame).unwrap().validate().unwrap().dim(), 21);
        let wrong_dim = "[input]\npreset = \"linear_oracle\"\n[limit_state]\nbuiltin = \"truss\"\n";
        assert!(RunConfig::from_toml_str(wrong_dim).unwrap().validate().is_err());
    }
}
