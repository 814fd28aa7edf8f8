//! Sample-size sweeps: how excess risk decays as the training set grows.
//!
//! A sweep trains one model per `(sample size, repetition)` cell, stopping
//! each run at `ceil(m^gamma)` iterations, then estimates the excess risk of
//! the last, averaged, and best iterates by Monte Carlo against the
//! distribution's analytic target risk. Cells run in parallel (when the
//! `parallel` feature is active) with seeds derived per cell, so results do
//! not depend on thread count or scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::engine::{
    max_eta1, EngineError, ScheduleMode, StepSchedule, TrainOptions, Trainer,
};
use crate::evaluation::{excess_risk, EvalError};
use crate::exec::{map_indexed, mix_seed, ExecMode};
use crate::kernel::{Kernel, KernelError, KernelExpansion};
use crate::loss::Loss;
use crate::stopping::{theoretical_t, StoppingError};
use crate::synth::{SynthError, SyntheticDist};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sample-size grid must be nonempty")]
    EmptyGrid,
    #[error("repetitions must be positive")]
    ZeroReps,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Stopping(#[from] StoppingError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Everything needed to run one sweep.
#[derive(Clone)]
pub struct SweepConfig {
    pub kernel: Kernel,
    pub loss: Loss,
    pub dist: SyntheticDist,
    /// First step size; `None` uses the largest admissible value.
    pub eta1: Option<f64>,
    pub theta: f64,
    pub mode: ScheduleMode,
    /// Skip step-size admissibility validation.
    pub forced: bool,
    /// User-supplied kernel bound, if any; otherwise analytic or estimated.
    pub kappa: Option<f64>,
    /// Stopping exponent: each run stops at `ceil(m^gamma)`.
    pub gamma: f64,
    pub grid: Vec<usize>,
    pub repetitions: usize,
    /// Monte Carlo sample count per risk estimate.
    pub mc_samples: usize,
    pub incremental: bool,
    pub seed: u64,
}

/// One `(sample size, repetition)` cell of a sweep.
///
/// `wall_seconds` covers data generation, Gram assembly, and training;
/// risk estimation is excluded.
#[derive(Debug, Clone)]
pub struct RateCell {
    pub m: usize,
    pub rep: usize,
    pub stop_t: usize,
    pub excess_last: f64,
    pub excess_averaged: f64,
    pub excess_best: f64,
    pub wall_seconds: f64,
}

/// Per-variant aggregation: median excess risk at each sample size, and the
/// least-squares slope of `ln(median)` against `ln(m)`.
#[derive(Debug, Clone)]
pub struct VariantSummary {
    pub medians: Vec<(usize, f64)>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RateSweep {
    pub cells: Vec<RateCell>,
    pub last: VariantSummary,
    pub averaged: VariantSummary,
    pub best: VariantSummary,
}

/// Runs the sweep in the default execution mode.
pub fn rate_sweep(cfg: &SweepConfig) -> Result<RateSweep, ExperimentError> {
    rate_sweep_with(ExecMode::default(), cfg)
}

/// Runs the sweep, parallelizing over cells in `Parallel` mode. Cell seeds
/// are derived from `cfg.seed` and the cell index alone, so both modes and
/// any thread count produce identical numbers.
pub fn rate_sweep_with(mode: ExecMode, cfg: &SweepConfig) -> Result<RateSweep, ExperimentError> {
    if cfg.grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    if cfg.repetitions == 0 {
        return Err(ExperimentError::ZeroReps);
    }
    let cells: Vec<(usize, usize)> = cfg
        .grid
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |rep| (m, rep)))
        .collect();
    let results = map_indexed(mode, cells.len(), |i| {
        let (m, rep) = cells[i];
        run_cell(cfg, m, rep, mix_seed(cfg.seed, i as u64))
    });
    let cells = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summarize = |pick: fn(&RateCell) -> f64| {
        let mut by_m: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for cell in &cells {
            by_m.entry(cell.m).or_default().push(pick(cell));
        }
        let medians: Vec<(usize, f64)> =
            by_m.into_iter().map(|(m, vals)| (m, median(vals))).collect();
        let slope = log_log_slope(&medians);
        VariantSummary { medians, slope }
    };
    Ok(RateSweep {
        last: summarize(|c| c.excess_last),
        averaged: summarize(|c| c.excess_averaged),
        best: summarize(|c| c.excess_best),
        cells,
    })
}

fn run_cell(
    cfg: &SweepConfig,
    m: usize,
    rep: usize,
    cell_seed: u64,
) -> Result<RateCell, ExperimentError> {
    let start = Instant::now();
    let sample = cfg.dist.sample(m, cell_seed)?;
    let bound = cfg.kernel.kappa(Some(&sample.points), cfg.kappa)?;
    let eta1 = match cfg.eta1 {
        Some(v) => v,
        None => max_eta1(&cfg.loss, bound.kappa, cfg.theta, cfg.mode)?,
    };
    let schedule = if cfg.forced {
        StepSchedule::forced(eta1, cfg.theta)?
    } else {
        StepSchedule::new(eta1, cfg.theta, &cfg.loss, bound.kappa, cfg.mode)?
    };
    let stop_t = theoretical_t(m, cfg.gamma);
    let gram = cfg.kernel.gram(&sample.points);
    let mut trainer = Trainer::new(
        gram,
        sample.labels.clone(),
        cfg.loss.clone(),
        schedule,
        TrainOptions { incremental: cfg.incremental, validation: None },
    )?;
    let stopped = trainer.run_stopped(stop_t)?;
    let wall_seconds = start.elapsed().as_secs_f64();

    // Evaluation seeds are double-mixed so they cannot collide with the
    // block seeds `mix_seed(cell_seed, block)` used to draw the training
    // sample itself.
    let excess = |coeffs: &[f64], salt: u64| -> Result<f64, ExperimentError> {
        let f = KernelExpansion::new(
            cfg.kernel.clone(),
            sample.points.clone(),
            coeffs.to_vec(),
        )?;
        Ok(excess_risk(
            &cfg.loss,
            &f,
            &cfg.dist,
            cfg.mc_samples,
            mix_seed(mix_seed(cell_seed, u64::MAX - 64), salt),
        )?)
    };
    Ok(RateCell {
        m,
        rep,
        stop_t,
        excess_last: excess(&stopped.last, 1)?,
        excess_averaged: excess(&stopped.averaged, 2)?,
        excess_best: excess(&stopped.best, 3)?,
        wall_seconds,
    })
}

/// Median of the values; the mean of the two middle order statistics when
/// the count is even.
pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in median"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares slope of `ln(y)` against `ln(m)`; `y` is floored at 1e-12
/// so a chance nonpositive excess estimate cannot poison the fit. `None`
/// when fewer than two distinct sample sizes are present.
pub fn log_log_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(m, _)| (m as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.max(1e-12).ln()).collect();
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
