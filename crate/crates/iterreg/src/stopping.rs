//! Stopping rules: theory-driven stopping indices, the step-decay diagnostic
//! factor, and data-driven hold-out stopping.
//!
//! The theoretical rules map regime parameters (growth exponent `q`,
//! variance exponent `tau`, approximation exponent `beta`, capacity exponent
//! `zeta`, step decay `theta`) to a pair of power indices: run `T = ceil(m^gamma)`
//! iterations to earn an excess-risk rate of `m^(-alpha)`, possibly with a
//! logarithmic factor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{DataError, LabeledSample};
use crate::engine::{
    averaged_iterate, best_iterate, EngineError, StepSchedule, TrainOptions, TrainRecord,
    Trainer, ValidationSet,
};
use crate::kernel::Kernel;
use crate::loss::Loss;

/// Stand-in for the open capacity limit `zeta -> 2` (capacity-independent
/// analysis); the exact value 2 is outside the admissible range.
pub const ZETA_NEAR_TWO: f64 = 2.0 - 1e-9;

#[derive(Debug, Error)]
pub enum StoppingError {
    #[error("growth exponent must be nonnegative and finite, got {0}")]
    BadQ(f64),
    #[error("variance exponent must lie in [0, 1], got {0}")]
    BadTau(f64),
    #[error("approximation exponent must lie in (0, 1], got {0}")]
    BadBeta(f64),
    #[error("capacity exponent must lie in (0, 2), got {0}")]
    BadZeta(f64),
    #[error("step decay exponent {theta} must lie in [0, 1)")]
    ThetaRange { theta: f64 },
    #[error("step decay exponent {theta} must exceed q/(q+1) = {min} in nonsmooth mode")]
    ThetaVsGrowth { theta: f64, min: f64 },
    #[error("hinge rate needs a step decay exponent in (1/2, 1), got {0}")]
    HingeTheta(f64),
    #[error("schedule margin must lie in (0, 1/3), got {0}")]
    BadMargin(f64),
    #[error("approximation exponent {beta} must exceed {min} for this schedule margin")]
    BetaBelowThreshold { beta: f64, min: f64 },
    #[error("step-decay factor needs T >= 2, got {0}")]
    LambdaRange(f64),
    #[error("hold-out split must lie strictly between 0 and 1, got {0}")]
    BadSplit(f64),
    #[error("hold-out needs at least 2 samples to partition, got {0}")]
    DegeneratePartition(usize),
    #[error("stopping horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Problem-regime parameters the stopping theory consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    /// Loss growth exponent, `q >= 0`.
    pub q: f64,
    /// Variance-bound exponent, `tau` in `[0, 1]` (0 = no variance bound).
    pub tau: f64,
    /// Approximation-error exponent, `beta` in `(0, 1]`.
    pub beta: f64,
    /// Effective-dimension capacity exponent, `zeta` in `(0, 2)`;
    /// use [`ZETA_NEAR_TWO`] for the capacity-independent limit.
    pub zeta: f64,
    /// Step decay exponent of the schedule.
    pub theta: f64,
    /// Whether the smooth-loss analysis applies.
    pub smooth: bool,
}

impl RegimeParams {
    pub fn validate(&self) -> Result<(), StoppingError> {
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(StoppingError::BadQ(self.q));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(StoppingError::BadTau(self.tau));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(StoppingError::BadBeta(self.beta));
        }
        if !(self.zeta > 0.0 && self.zeta < 2.0) {
            return Err(StoppingError::BadZeta(self.zeta));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(StoppingError::ThetaRange { theta: self.theta });
        }
        if !self.smooth {
            let min = self.q / (self.q + 1.0);
            if self.theta <= min {
                return Err(StoppingError::ThetaVsGrowth { theta: self.theta, min });
            }
        }
        Ok(())
    }
}

/// The stopping-rule exponent `gamma` (`T = ceil(m^gamma)`) and the
/// excess-risk exponent `alpha` (rate `m^(-alpha)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateIndices {
    pub gamma: f64,
    pub alpha: f64,
    /// Whether the LAST-iterate guarantee carries a logarithmic factor.
    /// The averaged/best variants have their own rule; see
    /// [`log_factor_averaged`].
    pub has_log_factor: bool,
}

/// Power indices for the general convex regime.
///
/// Writing `S = 2 - tau + zeta*tau/2` and `Q = q (1 + zeta/2)`, the fast-decay
/// branch (`theta >= (q+1)/(q+2)`, always used in smooth mode) is
///
/// ```text
/// gamma = 2 / ((1-theta) ((1+2 beta) S + Q))
/// alpha = beta / (beta S + S/2 + Q/2)
/// ```
///
/// and the slow-decay branch (`theta < (q+1)/(q+2)`, nonsmooth only) replaces
/// the `beta` weights using the effective decay `theta(1+q) - q`:
///
/// ```text
/// gamma = 2 / ((1-theta) ((1 + 2 beta (theta(1+q)-q)/(1-theta)) S + Q))
/// alpha = beta / (beta S + ((1-theta)/(theta(1+q)-q)) (S/2 + Q/2))
/// ```
///
/// The two branches agree exactly at the boundary.
pub fn compute_indices(p: &RegimeParams) -> Result<RateIndices, StoppingError> {
    p.validate()?;
    let s = 2.0 - p.tau + p.zeta * p.tau / 2.0;
    let qq = p.q * (1.0 + p.zeta / 2.0);
    let boundary = (p.q + 1.0) / (p.q + 2.0);
    let fast_branch = p.smooth || p.theta >= boundary;
    let (gamma, alpha) = if fast_branch {
        let gamma = 2.0 / ((1.0 - p.theta) * ((1.0 + 2.0 * p.beta) * s + qq));
        let alpha = p.beta / (p.beta * s + s / 2.0 + qq / 2.0);
        (gamma, alpha)
    } else {
        // Effective decay exponent of the slow branch; positive because
        // theta > q/(q+1).
        let d = p.theta * (1.0 + p.q) - p.q;
        let gamma =
            2.0 / ((1.0 - p.theta) * ((1.0 + 2.0 * p.beta * d / (1.0 - p.theta)) * s + qq));
        let alpha = p.beta / (p.beta * s + ((1.0 - p.theta) / d) * (s / 2.0 + qq / 2.0));
        (gamma, alpha)
    };
    debug_assert!(gamma.is_finite() && gamma > 0.0);
    debug_assert!(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0);
    let has_log_factor = !p.smooth && p.theta <= boundary;
    Ok(RateIndices { gamma, alpha, has_log_factor })
}

/// Whether the AVERAGED and BEST iterate guarantees carry a logarithmic
/// factor: only at the exact branch boundary, and never in smooth mode.
pub fn log_factor_averaged(p: &RegimeParams) -> bool {
    !p.smooth && p.theta == (p.q + 1.0) / (p.q + 2.0)
}

/// Closed-form indices for hinge-loss classification:
/// `gamma = 1/((1-theta)(2 beta + 1))`, `alpha = beta/(2 beta + 1)`,
/// no logarithmic factor. Valid for `theta` in `(1/2, 1)`.
pub fn hinge_indices(beta: f64, theta: f64) -> Result<RateIndices, StoppingError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(StoppingError::BadBeta(beta));
    }
    if !(theta > 0.5 && theta < 1.0) {
        return Err(StoppingError::HingeTheta(theta));
    }
    Ok(RateIndices {
        gamma: 1.0 / ((1.0 - theta) * (2.0 * beta + 1.0)),
        alpha: beta / (2.0 * beta + 1.0),
        has_log_factor: false,
    })
}

/// Step decay chosen so the hinge stopping horizon is a fixed power of `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeFixedSchedule {
    pub theta: f64,
    /// Always `2/3 + margin`.
    pub gamma: f64,
}

/// Picks `theta` so that running `T = ceil(m^(2/3 + margin))` hinge steps is
/// rate-optimal for approximation exponent `beta`. Requires
/// `beta > (4 - 3 margin) / (4 + 6 margin)` strictly.
pub fn hinge_fixed_t_schedule(beta: f64, margin: f64) -> Result<HingeFixedSchedule, StoppingError> {
    if !(margin > 0.0 && margin < 1.0 / 3.0) {
        return Err(StoppingError::BadMargin(margin));
    }
    let min_beta = (4.0 - 3.0 * margin) / (4.0 + 6.0 * margin);
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(StoppingError::BadBeta(beta));
    }
    if beta <= min_beta {
        return Err(StoppingError::BetaBelowThreshold { beta, min: min_beta });
    }
    let theta = (4.0 * beta - 1.0 + 3.0 * margin * (2.0 * beta + 1.0))
        / ((2.0 * beta + 1.0) * (2.0 + 3.0 * margin));
    debug_assert!(theta > 0.5 && theta < 1.0);
    Ok(HingeFixedSchedule { theta, gamma: 2.0 / 3.0 + margin })
}

/// Theory-driven stopping horizon `ceil(m^gamma)`, at least 1.
///
/// Values within relative 1e-9 of an integer are snapped to it before the
/// ceiling, so that e.g. `m = 1000, gamma = 2/3` yields 100 rather than 101
/// despite `powf` landing just below an exact power.
pub fn theoretical_t(m: usize, gamma: f64) -> usize {
    let raw = (m as f64).powf(gamma);
    let nearest = raw.round();
    let snapped = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { raw.ceil() };
    snapped.max(1.0) as usize
}

/// Cumulative step-decay factor governing the optimization error after `T`
/// iterations of a `t^(-theta)` schedule with loss growth `q`:
///
/// - `theta > (q+1)/(q+2)`: `T^-(1-theta)`
/// - `theta = (q+1)/(q+2)`: `ln(T) * T^-(1-theta)`
/// - `theta < (q+1)/(q+2)`: `ln(T) * T^-(theta(1+q)-q)`
///
/// `t` may be any real value `>= 2` (the logarithmic branches are
/// meaningless below that).
pub fn lambda_t(t: f64, q: f64, theta: f64) -> Result<f64, StoppingError> {
    if !(t >= 2.0 && t.is_finite()) {
        return Err(StoppingError::LambdaRange(t));
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(StoppingError::BadQ(q));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(StoppingError::ThetaRange { theta });
    }
    let min = q / (q + 1.0);
    if theta <= min {
        return Err(StoppingError::ThetaVsGrowth { theta, min });
    }
    let boundary = (q + 1.0) / (q + 2.0);
    let value = if theta > boundary {
        t.powf(-(1.0 - theta))
    } else if theta == boundary {
        t.ln() * t.powf(-(1.0 - theta))
    } else {
        t.ln() * t.powf(-(theta * (1.0 + q) - q))
    };
    Ok(value)
}

/// Result of hold-out stopping: the chosen index, the validation risk curve,
/// the full training log, the partition, and the three iterate variants of
/// the partition-trained model at the chosen index.
#[derive(Debug, Clone)]
pub struct HoldoutOutcome {
    /// Smallest index minimizing validation risk over `1..=t_max`.
    pub stop_t: usize,
    /// Validation risk of `f_t` for `t = 1..=t_max`.
    pub validation_curve: Vec<f64>,
    /// One record per iterate, validation risk included.
    pub records: Vec<TrainRecord>,
    /// Indices (into the original sample, ascending) used for training.
    pub train_indices: Vec<usize>,
    /// Indices held out for validation (ascending).
    pub validation_indices: Vec<usize>,
    /// Coefficients of `f_(stop_t)` over the training partition.
    pub last: Vec<f64>,
    /// Weighted-average iterate at `stop_t`.
    pub averaged: Vec<f64>,
    /// Minimum-empirical-risk iterate among `1..=stop_t`.
    pub best: Vec<f64>,
    pub best_t: usize,
}

/// Splits the sample by a seeded shuffle, trains on one side for `t_max`
/// steps, scores every iterate on the held-out side, and returns the
/// smallest index minimizing validation risk (ties go to the earlier,
/// more regularized iterate).
#[allow(clippy::too_many_arguments)]
pub fn holdout_stop(
    kernel: &Kernel,
    data: &LabeledSample,
    loss: Loss,
    schedule: StepSchedule,
    t_max: usize,
    split: f64,
    seed: u64,
    incremental: bool,
) -> Result<HoldoutOutcome, StoppingError> {
    if t_max == 0 {
        return Err(StoppingError::ZeroHorizon);
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(StoppingError::BadSplit(split));
    }
    let m = data.len();
    if m < 2 {
        return Err(StoppingError::DegeneratePartition(m));
    }
    let mut indices: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let train_count = ((split * m as f64).floor() as usize).clamp(1, m - 1);
    let mut train_indices = indices[..train_count].to_vec();
    let mut validation_indices = indices[train_count..].to_vec();
    train_indices.sort_unstable();
    validation_indices.sort_unstable();

    let train = data.select(&train_indices)?;
    let validation = data.select(&validation_indices)?;
    let gram = kernel.gram(&train.points);
    let cross = kernel.cross_gram(&validation.points, &train.points);
    let mut trainer = Trainer::new(
        gram,
        train.labels.clone(),
        loss,
        schedule,
        TrainOptions {
            incremental,
            validation: Some(ValidationSet { cross, labels: validation.labels.clone() }),
        },
    )?;

    let n = train.len();
    let mut records = Vec::with_capacity(t_max);
    let mut curve = Vec::with_capacity(t_max);
    let mut stop_t = 0usize;
    let mut best_val = f64::INFINITY;
    let mut last = vec![0.0; n];
    let mut averaged = vec![0.0; n];
    let mut best = vec![0.0; n];
    let mut best_t = 1usize;
    for _ in 0..t_max {
        // Snapshot the candidate iterates BEFORE stepping; the record the
        // step returns describes exactly this pre-step iterate.
        let cand_last = trainer.coefficients().to_vec();
        let cand_avg = averaged_iterate(trainer.state());
        let cand_best = best_iterate(trainer.state()).to_vec();
        let cand_best_t = trainer.state().best_t;
        let record = trainer.step()?;
        let val = record.validation_risk.expect("validation hook installed");
        curve.push(val);
        if val < best_val {
            best_val = val;
            stop_t = record.t;
            last = cand_last;
            averaged = cand_avg;
            best = cand_best;
            best_t = cand_best_t;
        }
        records.push(record);
    }

    Ok(HoldoutOutcome {
        stop_t,
        validation_curve: curve,
        records,
        train_indices,
        validation_indices,
        last,
        averaged,
        best,
        best_t,
    })
}
