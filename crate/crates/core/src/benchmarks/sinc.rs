//! Bootstrap band of a sparse expansion of `x·sin(x)` on `[0, 2π]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{sinc_1d, sinc_1d_spec};
use crate::bootstrap::{ensemble_predict, fit_ensemble, quantile_band_from_predictions, BootstrapMode};
use crate::error::Result;
use crate::input::{sample_lhs, LhsVariant, SampleMatrix};
use crate::regression::{adaptive_fit, AdaptiveConfig, ExperimentalDesign};
use crate::rng::{stream, substream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincBandConfig {
    pub design_size: usize,
    pub replicates: usize,
    pub level: f64,
    pub grid_size: usize,
    pub adaptive: AdaptiveConfig,
    pub seed: u64,
}

impl Default for SincBandConfig {
    fn default() -> Self {
        Self {
            design_size: 8,
            replicates: 100,
            level: 0.95,
            grid_size: 200,
            adaptive: AdaptiveConfig { degree_min: 1, degree_max: 10, ..Default::default() },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SincBand {
    /// Grid at cell midpoints of `[0, 2π]`.
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub surrogate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub design_x: Vec<f64>,
    pub design_y: Vec<f64>,
    pub design_lower: Vec<f64>,
    pub design_upper: Vec<f64>,
    /// Largest `|surrogate - y|` over the design, relative to `max |y|`.
    pub design_residual: f64,
}

impl SincBand {
    /// Largest band width at the design points, relative to `max |y|`.
    pub fn design_band_width(&self) -> f64 {
        let scale = self.design_y.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        self.design_lower.iter().zip(&self.design_upper).map(|(l, u)| u - l).fold(0.0, f64::max) / scale
    }

    /// Share of grid points where the band contains the true function.
    pub fn coverage(&self) -> f64 {
        let inside = self
            .truth
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(t, (l, u))| *l <= *t && *t <= *u)
            .count();
        inside as f64 / self.grid.len() as f64
    }
}

pub fn sinc_band(cfg: &SincBandConfig) -> Result<SincBand> {
    let spec = sinc_1d_spec();
    let rv = &spec.random_vector;
    let x = sample_lhs(rv, cfg.design_size, LhsVariant::Jittered, &mut substream(cfg.seed, stream::INITIAL_DESIGN))?;
    let y = DVector::from_iterator(x.nrows(), x.rows().map(|r| sinc_1d(r[0])));
    let ed = ExperimentalDesign::new(x, y)?;
    let model = adaptive_fit(&ed, rv, &cfg.adaptive)?;
    let ens = fit_ensemble(
        &ed,
        &model,
        BootstrapMode::Fast,
        cfg.replicates,
        &cfg.adaptive,
        &mut substream(cfg.seed, stream::BOOTSTRAP),
    )?;

    let step = 2.0 * PI / cfg.grid_size as f64;
    let grid: Vec<f64> = (0..cfg.grid_size).map(|k| (k as f64 + 0.5) * step).collect();
    let grid_x = SampleMatrix::physical(DMatrix::from_column_slice(grid.len(), 1, &grid))?;
    let (lower, upper) = quantile_band_from_predictions(&ensemble_predict(&ens, &grid_x)?, cfg.level)?;
    let (design_lower, design_upper) =
        quantile_band_from_predictions(&ensemble_predict(&ens, ed.inputs())?, cfg.level)?;
    let surrogate = model.predict(&grid_x)?;
    let fitted = model.predict(ed.inputs())?;
    let scale = ed.responses().amax();
    let design_residual = (fitted - ed.responses()).amax() / scale;

    Ok(SincBand {
        truth: grid.iter().map(|&g| sinc_1d(g)).collect(),
        grid,
        surrogate: surrogate.iter().copied().collect(),
        lower: lower.iter().copied().collect(),
        upper: upper.iter().copied().collect(),
        design_x: ed.inputs().values().iter().copied().collect(),
        design_y: ed.responses().iter().copied().collect(),
        design_lower: design_lower.iter().copied().collect(),
        design_upper: design_upper.iter().copied().collect(),
        design_residual,
    })
}
