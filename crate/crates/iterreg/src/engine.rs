//! Kernel-space subgradient descent with polynomially decaying steps.
//!
//! The iteration keeps a coefficient vector `c` over the training points and
//! updates `c_{t+1} = c_t - (eta_t / m) g_t`, where `g_t[i]` is the left
//! derivative of the loss at `(y_i, f_t(x_i))` and `f_t = sum_j c[j] K_{x_j}`.
//! Early stopping is the only regularization: the schedule and stopping index
//! carry the statistical guarantees, and the engine just runs the recursion
//! faithfully and observably.
//!
//! Indexing convention: a fresh `Trainer` sits at iterate index `t = 1` with
//! `f_1 = 0`. Each `step()` emits a record describing the CURRENT iterate
//! `f_t`, then advances to `f_{t+1}`. Running `T` steps therefore logs
//! records for `t = 1..=T` and leaves the state at index `T + 1`. The
//! averaged and best trackers always cover iterates `1..=t` inclusive.

use thiserror::Error;

use crate::data::LabeledSample;
use crate::evaluation::{empirical_risk, EvalError};
use crate::kernel::{CrossGram, GramMatrix, Kernel};
use crate::loss::{Loss, LossError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("step decay exponent {theta} must lie in [0, 1)")]
    ThetaRange { theta: f64 },
    #[error("step decay exponent {theta} must exceed q/(q+1) = {min} for this loss")]
    ThetaVsGrowth { theta: f64, min: f64 },
    #[error("smooth-mode schedule needs a loss with a Lipschitz derivative")]
    NotSmooth,
    #[error("initial step size must be positive and finite, got {0}")]
    BadEta(f64),
    #[error("kernel bound must be positive and finite, got {0}")]
    BadKappa(f64),
    #[error("initial step size {eta1} exceeds the admissible maximum {max}")]
    StepTooLarge { eta1: f64, max: f64 },
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("training sample is empty")]
    EmptySample,
    #[error("stop index {stop_t} already passed (trainer is at iterate {t})")]
    StopIndexPassed { stop_t: usize, t: usize },
    #[error("iterate norm {norm} exceeded the divergence guard {bound} at t = {t}; the step schedule is too aggressive")]
    Diverged { t: usize, norm: f64, bound: f64 },
    #[error("non-finite value at t = {t}; the step schedule is too aggressive")]
    NonFinite { t: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which admissibility regime governs the schedule bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// General convex losses; requires `theta > q/(q+1)` strictly.
    Nonsmooth,
    /// Losses with Lipschitz derivative; allows any `theta` in `[0, 1)`.
    Smooth,
}

/// Largest admissible initial step size for the given loss, kernel bound,
/// and decay exponent.
///
/// Nonsmooth mode: `min( sqrt(1-theta) / (sqrt(2) c_q (kappa+1)^(q+1)),
/// (1-theta) / (4 v0) )`. Smooth mode: `min( (1-theta) / (2 v0),
/// 1 / (L kappa^2) )`.
pub fn max_eta1(
    loss: &Loss,
    kappa: f64,
    theta: f64,
    mode: ScheduleMode,
) -> Result<f64, EngineError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(EngineError::BadKappa(kappa));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(EngineError::ThetaRange { theta });
    }
    let growth = loss.growth();
    match mode {
        ScheduleMode::Nonsmooth => {
            let min = growth.q / (growth.q + 1.0);
            if theta <= min {
                return Err(EngineError::ThetaVsGrowth { theta, min });
            }
            let curvature_cap = (1.0 - theta).sqrt()
                / (std::f64::consts::SQRT_2 * growth.c_q * (kappa + 1.0).powf(growth.q + 1.0));
            let value_cap = (1.0 - theta) / (4.0 * growth.sup_at_zero);
            Ok(curvature_cap.min(value_cap))
        }
        ScheduleMode::Smooth => {
            let l = growth.grad_lipschitz.ok_or(EngineError::NotSmooth)?;
            let value_cap = (1.0 - theta) / (2.0 * growth.sup_at_zero);
            let smooth_cap = 1.0 / (l * kappa * kappa);
            Ok(value_cap.min(smooth_cap))
        }
    }
}

/// Polynomially decaying step sizes `eta_t = eta1 * t^(-theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    eta1: f64,
    theta: f64,
    forced: bool,
}

impl StepSchedule {
    /// Validated construction: rejects schedules outside the admissible
    /// region for the loss, kernel bound, and mode.
    pub fn new(
        eta1: f64,
        theta: f64,
        loss: &Loss,
        kappa: f64,
        mode: ScheduleMode,
    ) -> Result<Self, EngineError> {
        if !(eta1 > 0.0 && eta1.is_finite()) {
            return Err(EngineError::BadEta(eta1));
        }
        let max = max_eta1(loss, kappa, theta, mode)?;
        if eta1 > max {
            return Err(EngineError::StepTooLarge { eta1, max });
        }
        Ok(StepSchedule { eta1, theta, forced: false })
    }

    /// Unvalidated construction for experimentation; every record produced
    /// under a forced schedule is marked. The divergence guard still applies.
    pub fn forced(eta1: f64, theta: f64) -> Result<Self, EngineError> {
        if !(eta1 > 0.0 && eta1.is_finite()) {
            return Err(EngineError::BadEta(eta1));
        }
        if !(0.0..1.0).contains(&theta) {
            return Err(EngineError::ThetaRange { theta });
        }
        Ok(StepSchedule { eta1, theta, forced: true })
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_forced(&self) -> bool {
        self.forced
    }

    /// `eta_t = eta1 * t^(-theta)`.
    pub fn eta(&self, t: usize) -> f64 {
        self.eta1 * (t as f64).powf(-self.theta)
    }
}

/// One completed iterate, as visible from outside: everything describes the
/// iterate `f_t` BEFORE the step that consumed `eta_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub t: usize,
    pub eta: f64,
    pub empirical_risk: f64,
    pub rkhs_norm: f64,
    pub subgradient_norm: f64,
    pub validation_risk: Option<f64>,
    pub forced: bool,
}

/// Mutable trajectory state: current coefficients plus the running
/// accumulators for the averaged and best iterates over `f_1..=f_t`.
#[derive(Debug, Clone)]
pub struct IterationState {
    /// Coefficients of the current iterate `f_t`.
    pub coefficients: Vec<f64>,
    /// Index of the current iterate (1-based; `t = 1` is `f_1 = 0`).
    pub t: usize,
    /// `sum_{s<=t} eta_s * c_s`, the unnormalized weighted average.
    pub avg_coefficients: Vec<f64>,
    /// `sum_{s<=t} eta_s`.
    pub weight_sum: f64,
    /// Index of the lowest-empirical-risk iterate so far (ties: smallest t).
    pub best_t: usize,
    /// Coefficients of that iterate.
    pub best_coefficients: Vec<f64>,
    /// Its empirical risk.
    pub best_risk: f64,
    /// `c_s' G c_s` for `s = 1..=t` (index `s - 1`).
    pub norm_sq_history: Vec<f64>,
}

/// Weighted average `a_t = (sum eta_s c_s) / (sum eta_s)` in coefficient
/// space; valid because every iterate shares the training centers.
pub fn averaged_iterate(state: &IterationState) -> Vec<f64> {
    state.avg_coefficients.iter().map(|v| v / state.weight_sum).collect()
}

/// Coefficients of the minimum-empirical-risk iterate seen so far.
pub fn best_iterate(state: &IterationState) -> &[f64] {
    &state.best_coefficients
}

/// Validation data scored once per step: a kernel matrix from the held-out
/// points to the training centers, plus the held-out labels.
#[derive(Debug, Clone)]
pub struct ValidationSet {
    pub cross: CrossGram,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Update sample predictions incrementally from the subgradient product
    /// instead of recomputing `G c` each step. Exact up to roundoff; pays
    /// off when most left derivatives are zero (hinge, insensitive tubes).
    pub incremental: bool,
    pub validation: Option<ValidationSet>,
}

/// Captured output of a run that stops at a chosen iterate index: the full
/// record log through `stop_t` plus the three iterate variants at `stop_t`.
#[derive(Debug, Clone)]
pub struct StoppedRun {
    pub records: Vec<TrainRecord>,
    pub stop_t: usize,
    pub last: Vec<f64>,
    pub averaged: Vec<f64>,
    pub best: Vec<f64>,
    pub best_t: usize,
}

/// Drives the iteration over one fixed training sample.
#[derive(Debug, Clone)]
pub struct Trainer {
    gram: GramMatrix,
    labels: Vec<f64>,
    loss: Loss,
    schedule: StepSchedule,
    incremental: bool,
    validation: Option<ValidationSet>,
    state: IterationState,
    /// `f_t(x_i)` at the training points, kept in lockstep with `state`.
    f_values: Vec<f64>,
    current_risk: f64,
}

impl Trainer {
    pub fn new(
        gram: GramMatrix,
        labels: Vec<f64>,
        loss: Loss,
        schedule: StepSchedule,
        options: TrainOptions,
    ) -> Result<Self, EngineError> {
        let m = labels.len();
        if m == 0 {
            return Err(EngineError::EmptySample);
        }
        if gram.n() != m {
            return Err(EngineError::DimensionMismatch {
                what: "gram size vs labels",
                expected: m,
                got: gram.n(),
            });
        }
        loss.check_labels(&labels)?;
        if let Some(v) = &options.validation {
            if v.cross.cols() != m {
                return Err(EngineError::DimensionMismatch {
                    what: "validation kernel columns vs training size",
                    expected: m,
                    got: v.cross.cols(),
                });
            }
            if v.cross.rows() != v.labels.len() {
                return Err(EngineError::DimensionMismatch {
                    what: "validation kernel rows vs validation labels",
                    expected: v.labels.len(),
                    got: v.cross.rows(),
                });
            }
            loss.check_labels(&v.labels)?;
        }

        let f_values = vec![0.0; m];
        let current_risk = empirical_risk(&loss, &labels, &f_values)?;
        let state = IterationState {
            coefficients: vec![0.0; m],
            t: 1,
            avg_coefficients: vec![0.0; m],
            weight_sum: schedule.eta(1),
            best_t: 1,
            best_coefficients: vec![0.0; m],
            best_risk: current_risk,
            norm_sq_history: vec![0.0],
        };
        Ok(Trainer {
            gram,
            labels,
            loss,
            schedule,
            incremental: options.incremental,
            validation: options.validation,
            state,
            f_values,
            current_risk,
        })
    }

    pub fn state(&self) -> &IterationState {
        &self.state
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    /// Index of the current iterate.
    pub fn t(&self) -> usize {
        self.state.t
    }

    /// Coefficients of the current iterate `f_t`.
    pub fn coefficients(&self) -> &[f64] {
        &self.state.coefficients
    }

    /// `f_t(x_i)` at the training points.
    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Empirical risk of the current iterate.
    pub fn current_risk(&self) -> f64 {
        self.current_risk
    }

    /// `||f_t||^2` as the Gram quadratic form of the current coefficients.
    pub fn current_norm_sq(&self) -> f64 {
        *self.state.norm_sq_history.last().expect("history never empty")
    }

    /// Advances one step: records `f_t`, then moves to `f_{t+1}`.
    ///
    /// On error the trainer may be mid-update and must be discarded.
    pub fn step(&mut self) -> Result<TrainRecord, EngineError> {
        let m = self.labels.len();
        let mf = m as f64;
        let t = self.state.t;
        let eta = self.schedule.eta(t);

        let mut g = vec![0.0; m];
        for i in 0..m {
            g[i] = self.loss.left_derivative(self.labels[i], self.f_values[i])?;
        }

        // u = G g feeds both the subgradient norm and (in incremental mode)
        // the prediction update, since f_{t+1} = f_t - (eta/m) G g.
        let mut u = vec![0.0; m];
        if self.incremental {
            let active: Vec<usize> = (0..m).filter(|&j| g[j] != 0.0).collect();
            for (i, out) in u.iter_mut().enumerate() {
                let row = self.gram.row(i);
                *out = active.iter().map(|&j| row[j] * g[j]).sum();
            }
        } else {
            self.gram.matvec(&g, &mut u);
        }
        let grad_norm_sq = (dot(&g, &u) / (mf * mf)).max(0.0);

        let validation_risk = match &self.validation {
            Some(v) => {
                let mut preds = vec![0.0; v.labels.len()];
                v.cross.apply(&self.state.coefficients, &mut preds);
                Some(empirical_risk(&self.loss, &v.labels, &preds)?)
            }
            None => None,
        };

        let record = TrainRecord {
            t,
            eta,
            empirical_risk: self.current_risk,
            rkhs_norm: self.current_norm_sq().sqrt(),
            subgradient_norm: grad_norm_sq.sqrt(),
            validation_risk,
            forced: self.schedule.is_forced(),
        };

        // Advance the coefficients and the cached predictions.
        let scale = eta / mf;
        for i in 0..m {
            self.state.coefficients[i] -= scale * g[i];
        }
        if self.incremental {
            for i in 0..m {
                self.f_values[i] -= scale * u[i];
            }
        } else {
            self.gram.matvec(&self.state.coefficients, &mut self.f_values);
        }

        let new_t = t + 1;
        let norm_sq = dot(&self.state.coefficients, &self.f_values).max(0.0);
        let norm = norm_sq.sqrt();
        if !norm.is_finite() {
            return Err(EngineError::NonFinite { t: new_t });
        }
        // Guard: admissible schedules keep ||f_{t+1}|| <= t^((1-theta)/2), so
        // a 10x overshoot means the schedule has broken down.
        let bound = 10.0 * (t as f64).powf((1.0 - self.schedule.theta()) / 2.0);
        if norm > bound {
            return Err(EngineError::Diverged { t: new_t, norm, bound });
        }
        let risk = empirical_risk(&self.loss, &self.labels, &self.f_values)?;
        if !risk.is_finite() {
            return Err(EngineError::NonFinite { t: new_t });
        }

        self.state.t = new_t;
        self.current_risk = risk;
        self.state.norm_sq_history.push(norm_sq);
        let weight = self.schedule.eta(new_t);
        for i in 0..m {
            self.state.avg_coefficients[i] += weight * self.state.coefficients[i];
        }
        self.state.weight_sum += weight;
        if risk < self.state.best_risk {
            self.state.best_t = new_t;
            self.state.best_risk = risk;
            self.state.best_coefficients.clear();
            self.state.best_coefficients.extend_from_slice(&self.state.coefficients);
        }

        Ok(record)
    }

    /// Runs exactly `steps` steps, returning their records.
    pub fn run(&mut self, steps: usize) -> Result<Vec<TrainRecord>, EngineError> {
        let mut records = Vec::with_capacity(steps);
        for _ in 0..steps {
            records.push(self.step()?);
        }
        Ok(records)
    }

    /// Runs until the current iterate is `stop_t`, captures the last,
    /// averaged, and best iterates there, then takes one more step so the
    /// record log covers `1..=stop_t`.
    pub fn run_stopped(&mut self, stop_t: usize) -> Result<StoppedRun, EngineError> {
        if stop_t < self.state.t {
            return Err(EngineError::StopIndexPassed { stop_t, t: self.state.t });
        }
        let mut records = self.run(stop_t - self.state.t)?;
        let last = self.state.coefficients.clone();
        let averaged = averaged_iterate(&self.state);
        let best = best_iterate(&self.state).to_vec();
        let best_t = self.state.best_t;
        records.push(self.step()?);
        Ok(StoppedRun { records, stop_t, last, averaged, best, best_t })
    }
}

/// Builds the Gram matrix for `sample`, then runs `steps` steps from zero.
pub fn train(
    kernel: &Kernel,
    sample: &LabeledSample,
    loss: Loss,
    schedule: StepSchedule,
    steps: usize,
    options: TrainOptions,
) -> Result<(Trainer, Vec<TrainRecord>), EngineError> {
    let gram = kernel.gram(&sample.points);
    let mut trainer = Trainer::new(gram, sample.labels.clone(), loss, schedule, options)?;
    let records = trainer.run(steps)?;
    Ok((trainer, records))
}

/// `||(1/m) sum_j g[j] K_{x_j}||^2 = g' G g / m^2`, clamped at zero.
pub fn subgradient_norm_sq(gram: &GramMatrix, g: &[f64]) -> f64 {
    let m = gram.n() as f64;
    (gram.quad_form(g) / (m * m)).max(0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
