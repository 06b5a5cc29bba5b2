use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::enrichment::{design_mask, enrich_multi, enrich_single, margin_set, EnrichmentConfig};
use super::estimate::{beta_index, scan_pool};
use super::limit_state::LimitState;
use super::pool::CandidatePool;
use crate::basis::families_for;
use crate::bootstrap::{fit_ensemble_standard, BootstrapMode, DEFAULT_REPLICATES, MIN_REPLICATES_ACTIVE};
use crate::error::{Error, Result};
use crate::input::{
    sample_lhs_standard, sample_uniform_ball_standard, LhsVariant, RandomVector, SampleMatrix, DEFAULT_BALL_RADIUS,
};
use crate::regression::{adaptive_fit_standard, AdaptiveConfig, ExperimentalDesign, PceModel};
use crate::rng::{stream, substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDesignKind {
    Lhs,
    Ball {
        #[serde(default = "default_radius")]
        radius: f64,
    },
}

fn default_radius() -> f64 {
    DEFAULT_BALL_RADIUS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDesign {
    pub kind: InitialDesignKind,
    /// Defaults to `max(12, 2M)`.
    pub size: Option<usize>,
}

impl Default for InitialDesign {
    fn default() -> Self {
        Self { kind: InitialDesignKind::Lhs, size: None }
    }
}

impl InitialDesign {
    pub fn resolved_size(&self, dim: usize) -> usize {
        self.size.unwrap_or(12.max(2 * dim))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    pub epsilon_pf: f64,
    pub required_consecutive: usize,
    /// Total model evaluations allowed, initial design included.
    pub max_evaluations: usize,
    pub replicates: usize,
    pub pool_size: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            epsilon_pf: 0.05,
            required_consecutive: 2,
            max_evaluations: 1000,
            replicates: DEFAULT_REPLICATES,
            pool_size: 1_000_000,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_pf > 0.0 && self.epsilon_pf < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon_pf must lie in (0, 1), got {}", self.epsilon_pf)));
        }
        if self.required_consecutive < 1 {
            return Err(Error::InvalidParameter("required_consecutive must be at least 1".into()));
        }
        if self.replicates < MIN_REPLICATES_ACTIVE {
            return Err(Error::InvalidParameter(format!(
                "bootstrap replicates B = {} is below the floor B >= {MIN_REPLICATES_ACTIVE}",
                self.replicates
            )));
        }
        if self.pool_size < 1 {
            return Err(Error::InvalidParameter("pool_size must be positive".into()));
        }
        Ok(())
    }
}

/// Complete settings of one active-learning run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AbpceConfig {
    pub initial: InitialDesign,
    pub enrichment: EnrichmentConfig,
    pub convergence: ConvergenceConfig,
    pub adaptive: AdaptiveConfig,
    pub bootstrap_mode: BootstrapMode,
}

impl AbpceConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.enrichment.validate()?;
        self.convergence.validate()?;
        self.adaptive.validate()?;
        let n0 = self.initial.resolved_size(dim);
        if n0 < 3 {
            return Err(Error::InvalidParameter(format!("initial design size {n0} is below 3")));
        }
        if let InitialDesignKind::Ball { radius } = self.initial.kind {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(Error::InvalidParameter(format!("ball radius must be > 0, got {radius}")));
            }
        }
        if self.convergence.max_evaluations < n0 {
            return Err(Error::InvalidParameter(format!(
                "budget {} is smaller than the initial design ({n0})",
                self.convergence.max_evaluations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_total: usize,
    pub pf_hat: f64,
    pub pf_minus: f64,
    pub pf_plus: f64,
    pub beta: f64,
    pub criterion: f64,
    pub loo_error: f64,
    pub degree: usize,
    pub support_size: usize,
    pub margin_size: usize,
    /// Physical points selected for enrichment after this iteration.
    pub added: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct AbpceResult {
    pub pf_hat: f64,
    pub pf_minus: f64,
    pub pf_plus: f64,
    pub beta: f64,
    /// `-Φ⁻¹(pf⁺)`.
    pub beta_lower: f64,
    /// `-Φ⁻¹(pf⁻)`.
    pub beta_upper: f64,
    pub n_total: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    /// Replicate estimates of the final iteration.
    pub replicate_pf: Vec<f64>,
    /// Final design with raw model responses.
    pub design: ExperimentalDesign,
    /// Limit-state values of the final design.
    pub g: DVector<f64>,
    pub model: PceModel,
    pub diagnostics: Vec<String>,
}

fn append_rows(a: &mut DVector<f64>, b: &DVector<f64>) {
    let n = a.len();
    let old = std::mem::replace(a, DVector::zeros(0));
    *a = old.resize_vertically(n + b.len(), 0.0);
    a.rows_mut(n, b.len()).copy_from(b);
}

/// Active bootstrap-PCE estimation of `P(g(X) ≤ 0)`.
///
/// Initial design and pool are drawn from independent substreams of `seed`;
/// iteration `t` uses its own substreams for resampling and clustering, so a
/// run is fully determined by its inputs and seed.
pub fn run_abpce(rv: &RandomVector, limit_state: &mut LimitState, cfg: &AbpceConfig, seed: u64) -> Result<AbpceResult> {
    run_abpce_observed(rv, limit_state, cfg, seed, &mut |_| {})
}

/// Like [`run_abpce`], calling `observer` with every iteration record as
/// soon as it is complete, before the selected points are evaluated.
pub fn run_abpce_observed(
    rv: &RandomVector,
    limit_state: &mut LimitState,
    cfg: &AbpceConfig,
    seed: u64,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<AbpceResult> {
    cfg.validate(rv.dim())?;
    let conv = &cfg.convergence;
    let families = families_for(rv);

    let n0 = cfg.initial.resolved_size(rv.dim());
    let mut init_rng = substream(seed, stream::INITIAL_DESIGN);
    let mut u_ed = match cfg.initial.kind {
        InitialDesignKind::Lhs => sample_lhs_standard(rv, n0, LhsVariant::Jittered, &mut init_rng)?,
        InitialDesignKind::Ball { radius } => sample_uniform_ball_standard(rv, n0, radius, &mut init_rng)?,
    };
    let x0 = rv.from_standard(&u_ed)?;
    let y0 = limit_state.responses(&x0)?;
    let mut g_ed = limit_state.to_g(&y0);
    let mut design = ExperimentalDesign::new(x0, y0)?;

    let pool = CandidatePool::draw(rv, conv.pool_size, &mut substream(seed, stream::POOL))?;
    let mut excluded = design_mask(&pool, &u_ed);

    let mut history = Vec::new();
    let mut consecutive = 0;
    let mut iteration = 0;
    loop {
        let (basis, fit, degree) = adaptive_fit_standard(&u_ed, &g_ed, &families, &cfg.adaptive)?;
        let model = PceModel::new(rv.clone(), basis, fit.coefficients, fit.loo_error, degree)?;
        let ens = fit_ensemble_standard(
            &u_ed,
            &g_ed,
            &model,
            cfg.bootstrap_mode,
            conv.replicates,
            &cfg.adaptive,
            &mut substream(seed, stream::BOOTSTRAP + iteration as u64),
        )?;
        let scan = scan_pool(&ens, &pool)?;
        let (pf_minus, pf_plus) = scan.bounds();
        let criterion = scan.criterion();
        consecutive = if criterion <= conv.epsilon_pf { consecutive + 1 } else { 0 };
        let converged = consecutive >= conv.required_consecutive;
        let n_total = design.len();
        let mut record = IterationRecord {
            iteration,
            n_total,
            pf_hat: scan.pf_hat,
            pf_minus,
            pf_plus,
            beta: beta_index(scan.pf_hat),
            criterion,
            loo_error: model.loo_error(),
            degree,
            support_size: model.basis().len(),
            margin_size: margin_set(&scan, &excluded).len(),
            added: Vec::new(),
        };

        let budget_left = conv.max_evaluations.saturating_sub(n_total);
        if converged || budget_left == 0 {
            observer(&record);
            history.push(record);
            let mut diagnostics = Vec::new();
            if history.iter().all(|r| r.pf_hat == 0.0) {
                diagnostics.push("the surrogate predicted no failures on the pool in any iteration".to_string());
            }
            if !converged {
                diagnostics.push(format!("evaluation budget of {} exhausted before convergence", conv.max_evaluations));
            }
            return Ok(AbpceResult {
                pf_hat: scan.pf_hat,
                pf_minus,
                pf_plus,
                beta: beta_index(scan.pf_hat),
                beta_lower: beta_index(pf_plus),
                beta_upper: beta_index(pf_minus),
                n_total,
                converged,
                history,
                replicate_pf: scan.replicate_pf,
                design,
                g: g_ed,
                model,
                diagnostics,
            });
        }

        let k = cfg.enrichment.points_per_iteration.min(budget_left);
        let picked = if k == 1 {
            vec![enrich_single(&scan, &ens, &pool, &excluded)?]
        } else {
            enrich_multi(
                &scan,
                &ens,
                &pool,
                &excluded,
                k,
                cfg.enrichment.kmeans_max_iter,
                &mut substream(seed, stream::KMEANS + iteration as u64),
            )?
        };
        let u_new = pool.standard_rows(&picked)?;
        let x_new = rv.from_standard(&u_new)?;
        record.added = x_new.rows().collect();
        observer(&record);
        history.push(record);
        let y_new = limit_state.responses(&x_new)?;
        let g_new = limit_state.to_g(&y_new);
        for &i in &picked {
            excluded[i] = true;
        }

        u_ed.append(&u_new)?;
        design.push(&x_new, &y_new)?;
        append_rows(&mut g_ed, &g_new);
        iteration += 1;
    }
}

/// Exact-model Monte Carlo estimate on the same candidate pool a run uses.
pub fn reference_pf(rv: &RandomVector, limit_state: &mut LimitState, pool_size: usize, seed: u64) -> Result<f64> {
    let pool = CandidatePool::draw(rv, pool_size, &mut substream(seed, stream::POOL))?;
    let mut failed = 0usize;
    for (start, len) in pool.chunks() {
        let x = rv.from_standard(&SampleMatrix::standard(pool.chunk(start, len))?)?;
        let y = limit_state.responses(&x)?;
        let g = limit_state.to_g(&y);
        failed += g.iter().filter(|&&v| v <= 0.0).count();
    }
    Ok(failed as f64 / pool.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active::limit_state::Comparison;
    use crate::input::normal::std_normal_cdf;
    use crate::input::MarginalDistribution;

    fn linear_setup() -> (RandomVector, AbpceConfig) {
        let rv = RandomVector::independent(vec![MarginalDistribution::gaussian(0.0, 1.0).unwrap()]).unwrap();
        let cfg = AbpceConfig {
            initial: InitialDesign { kind: InitialDesignKind::Lhs, size: Some(12) },
            enrichment: EnrichmentConfig { points_per_iteration: 1, ..Default::default() },
            convergence: ConvergenceConfig {
                epsilon_pf: 0.05,
                max_evaluations: 60,
                pool_size: 200_000,
                ..Default::default()
            },
            adaptive: AdaptiveConfig { degree_min: 1, degree_max: 5, ..Default::default() },
            bootstrap_mode: BootstrapMode::Fast,
        };
        (rv, cfg)
    }

    #[test]
    fn linear_limit_state_converges() {
        let (rv, cfg) = linear_setup();
        let mut ls = LimitState::from_fn(|x| 3.0 - x[0], Comparison::Identity);
        let res = run_abpce(&rv, &mut ls, &cfg, 7).unwrap();
        assert!(res.converged);
        assert!(res.n_total <= 60);
        let exact = std_normal_cdf(-3.0);
        assert!((res.pf_hat - exact).abs() / exact < 0.15, "{}", res.pf_hat);
        // saturation: an exactly representable limit state reproduces the
        // exact-model estimate on the same pool
        let mut ls2 = LimitState::from_fn(|x| 3.0 - x[0], Comparison::Identity);
        assert_eq!(res.pf_hat, reference_pf(&rv, &mut ls2, cfg.convergence.pool_size, 7).unwrap());
    }

    #[test]
    fn history_invariants_and_determinism() {
        let (rv, mut cfg) = linear_setup();
        cfg.enrichment.points_per_iteration = 2;
        let f = |x: &[f64]| 2.5 - x[0] - 0.2 * x[0] * x[0];
        let a = run_abpce(&rv, &mut LimitState::from_fn(f, Comparison::Identity), &cfg, 3).unwrap();
        let b = run_abpce(&rv, &mut LimitState::from_fn(f, Comparison::Identity), &cfg, 3).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.replicate_pf, b.replicate_pf);
        for w in a.history.windows(2) {
            assert_eq!(w[1].n_total, w[0].n_total + w[0].added.len());
            assert!(w[0].added.len() <= 2);
        }
        for r in &a.history {
            assert!(r.pf_minus <= r.pf_plus);
            assert!(r.n_total <= cfg.convergence.max_evaluations);
        }
        let (lo, hi) = (a.pf_minus, a.pf_plus);
        assert!(a.replicate_pf.iter().all(|&p| lo <= p && p <= hi));
        // converged only after the required run of satisfying iterations
        if a.converged {
            let tail = &a.history[a.history.len() - cfg.convergence.required_consecutive..];
            assert!(tail.iter().all(|r| r.criterion <= cfg.convergence.epsilon_pf));
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let (rv, mut cfg) = linear_setup();
        cfg.convergence.max_evaluations = 14;
        cfg.convergence.epsilon_pf = 1e-6;
        let mut ls = LimitState::from_fn(|x| (2.0 - x[0]).sin() + 0.3, Comparison::Identity);
        let res = run_abpce(&rv, &mut ls, &cfg, 1).unwrap();
        assert!(!res.converged);
        assert_eq!(res.n_total, 14);
        assert!(!res.diagnostics.is_empty());
    }

    #[test]
    fn rejects_bad_settings() {
        let (rv, mut cfg) = linear_setup();
        cfg.convergence.replicates = 10;
        let mut ls = LimitState::from_fn(|x| x[0], Comparison::Identity);
        assert!(run_abpce(&rv, &mut ls, &cfg, 0).is_err());
        let (_, mut cfg) = linear_setup();
        cfg.convergence.max_evaluations = 5;
        assert!(run_abpce(&rv, &mut ls, &cfg, 0).is_err());
    }

    #[test]
    fn model_failure_carries_the_point() {
        let (rv, cfg) = linear_setup();
        let mut ls = LimitState::from_fn(|x| if x[0] > 0.0 { f64::NAN } else { 1.0 }, Comparison::Identity);
        match run_abpce(&rv, &mut ls, &cfg, 0) {
            Err(Error::ModelEvaluation { point, .. }) => assert!(point[0] > 0.0),
            other => panic!("unexpected {:?}", other.map(|r| r.pf_hat)),
        }
    }
}
