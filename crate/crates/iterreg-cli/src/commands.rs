//! The four subcommands: train, indices, rates, sample.

use std::fs;
use std::path::Path;

use iterreg::data::LabeledSample;
use iterreg::engine::{
    max_eta1, ScheduleMode, StepSchedule, TrainOptions, TrainRecord, Trainer,
};
use iterreg::evaluation::{
    expected_risk_mc, misclassification_risk_mc, RiskReport,
};
use iterreg::exec::mix_seed;
use iterreg::kernel::{Kernel, KappaBound, KappaSource, KernelExpansion};
use iterreg::loss::Loss;
use iterreg::model::{LossSpec, ModelMetadata, TrainedModel};
use iterreg::stopping::{
    compute_indices, hinge_fixed_t_schedule, hinge_indices, holdout_stop, theoretical_t,
    RateIndices, RegimeParams, ZETA_NEAR_TWO,
};
use iterreg::synth::SyntheticDist;

use crate::config::{
    load_config, DataSpec, Failure, RunConfig, StoppingSpec, TheoreticalSpec,
};
use crate::csvio::{
    fmt_float, read_sample_csv, write_path_csv, write_rates_csv, write_sample_csv,
};

/// Default Monte Carlo sample count for risk reports and sweeps.
const DEFAULT_MC_SAMPLES: usize = 100_000;
/// Seed streams for evaluation, distinct from training-sample block indices.
const RISK_STREAM: u64 = 0x5249_534b;
const MISCLASS_STREAM: u64 = 0x4d49_5343;

fn kappa_source_name(source: KappaSource) -> &'static str {
    match source {
        KappaSource::Analytic => "analytic",
        KappaSource::DataEstimated => "data_estimated",
        KappaSource::UserSupplied => "user_supplied",
    }
}

fn schedule_mode(cfg: &RunConfig) -> ScheduleMode {
    if cfg.schedule.smooth {
        ScheduleMode::Smooth
    } else {
        ScheduleMode::Nonsmooth
    }
}

/// Builds the validated (or forced) step schedule from the config.
fn build_schedule(
    cfg: &RunConfig,
    loss: &Loss,
    kappa: f64,
) -> Result<(StepSchedule, f64), Failure> {
    let mode = schedule_mode(cfg);
    let eta1 = match cfg.schedule.eta1 {
        Some(v) => v,
        None => max_eta1(loss, kappa, cfg.schedule.theta, mode)?,
    };
    let schedule = if cfg.schedule.force {
        StepSchedule::forced(eta1, cfg.schedule.theta)?
    } else {
        StepSchedule::new(eta1, cfg.schedule.theta, loss, kappa, mode)?
    };
    Ok((schedule, eta1))
}

/// Resolves the theoretical-regime parameters, defaulting `q` from the
/// loss and `theta`/`smooth` from the schedule.
fn resolve_regime(spec: &TheoreticalSpec, cfg: &RunConfig, loss: &Loss) -> RegimeParams {
    RegimeParams {
        q: spec.q.unwrap_or_else(|| loss.growth().q),
        tau: spec.tau,
        beta: spec.beta,
        zeta: spec.zeta.unwrap_or(ZETA_NEAR_TWO),
        theta: spec.theta.unwrap_or(cfg.schedule.theta),
        smooth: spec.smooth.unwrap_or(cfg.schedule.smooth),
    }
}

struct TrainOutcome {
    records: Vec<TrainRecord>,
    stop_t: usize,
    best_t: usize,
    last: Vec<f64>,
    averaged: Vec<f64>,
    best: Vec<f64>,
    /// Sample the coefficients index into (hold-out: the training partition).
    train_sample: LabeledSample,
    marker_t: Option<usize>,
    stopping_rule: &'static str,
    gamma: Option<f64>,
    alpha: Option<f64>,
    holdout_split: Option<f64>,
    train_indices: Option<Vec<usize>>,
}

fn run_training(
    cfg: &RunConfig,
    kernel: &Kernel,
    loss: &Loss,
    schedule: StepSchedule,
    sample: LabeledSample,
) -> Result<TrainOutcome, Failure> {
    match &cfg.stopping {
        StoppingSpec::Fixed { t } => {
            if *t == 0 {
                return Err(Failure::config("fixed stopping index must be at least 1"));
            }
            let run = stopped_run(kernel, &sample, loss, schedule, *t, cfg.incremental)?;
            Ok(TrainOutcome {
                records: run.0,
                stop_t: *t,
                best_t: run.4,
                last: run.1,
                averaged: run.2,
                best: run.3,
                train_sample: sample,
                marker_t: None,
                stopping_rule: "fixed",
                gamma: None,
                alpha: None,
                holdout_split: None,
                train_indices: None,
            })
        }
        StoppingSpec::Theoretical(spec) => {
            let regime = resolve_regime(spec, cfg, loss);
            let indices = compute_indices(&regime)?;
            let stop_t = theoretical_t(sample.len(), indices.gamma);
            let run = stopped_run(kernel, &sample, loss, schedule, stop_t, cfg.incremental)?;
            Ok(TrainOutcome {
                records: run.0,
                stop_t,
                best_t: run.4,
                last: run.1,
                averaged: run.2,
                best: run.3,
                train_sample: sample,
                marker_t: None,
                stopping_rule: "theoretical",
                gamma: Some(indices.gamma),
                alpha: Some(indices.alpha),
                holdout_split: None,
                train_indices: None,
            })
        }
        StoppingSpec::Holdout { split, t_max } => {
            let outcome = holdout_stop(
                kernel,
                &sample,
                loss.clone(),
                schedule,
                *t_max,
                *split,
                cfg.seed,
                cfg.incremental,
            )?;
            if outcome.stop_t == 0 {
                return Err(Failure {
                    code: 3,
                    message: "validation risk was never finite".into(),
                });
            }
            let train_sample = sample.select(&outcome.train_indices)?;
            Ok(TrainOutcome {
                records: outcome.records,
                stop_t: outcome.stop_t,
                best_t: outcome.best_t,
                last: outcome.last,
                averaged: outcome.averaged,
                best: outcome.best,
                train_sample,
                marker_t: Some(outcome.stop_t),
                stopping_rule: "holdout",
                gamma: None,
                alpha: None,
                holdout_split: Some(*split),
                train_indices: Some(outcome.train_indices),
            })
        }
    }
}

type RunParts = (Vec<TrainRecord>, Vec<f64>, Vec<f64>, Vec<f64>, usize);

fn stopped_run(
    kernel: &Kernel,
    sample: &LabeledSample,
    loss: &Loss,
    schedule: StepSchedule,
    stop_t: usize,
    incremental: bool,
) -> Result<RunParts, Failure> {
    let gram = kernel.gram(&sample.points);
    let mut trainer = Trainer::new(
        gram,
        sample.labels.clone(),
        loss.clone(),
        schedule,
        TrainOptions { incremental, validation: None },
    )?;
    let run = trainer.run_stopped(stop_t)?;
    Ok((run.records, run.last, run.averaged, run.best, run.best_t))
}

fn load_data(cfg: &RunConfig) -> Result<(LabeledSample, Option<SyntheticDist>), Failure> {
    match &cfg.data {
        DataSpec::Synthetic { m, dist } => {
            let dist = dist.build()?;
            let sample = dist.sample(*m, cfg.seed)?;
            Ok((sample, Some(dist)))
        }
        DataSpec::Csv { path } => Ok((read_sample_csv(Path::new(path))?, None)),
    }
}

pub fn cmd_train(config_path: &Path, sets: &[String]) -> Result<(), Failure> {
    let cfg = load_config(config_path, sets)?;
    let kernel = cfg.kernel.build()?;
    let (sample, dist) = load_data(&cfg)?;
    let loss = cfg.loss.resolve(&sample.labels)?;
    loss.check_labels(&sample.labels)?;
    let bound = kernel.kappa(Some(&sample.points), cfg.schedule.kappa)?;
    let (schedule, eta1) = build_schedule(&cfg, &loss, bound.kappa)?;
    let outcome = run_training(&cfg, &kernel, &loss, schedule, sample)?;

    let path_csv = Path::new(cfg.output.path_csv());
    write_path_csv(path_csv, &outcome.records, outcome.marker_t)?;

    let model = build_model(&cfg, &loss, &outcome, eta1, bound);
    let model_path = Path::new(cfg.output.model_json());
    model.save(model_path)?;

    let final_risk = outcome
        .records
        .iter()
        .find(|r| r.t == outcome.stop_t)
        .map(|r| r.empirical_risk)
        .expect("stop index is always recorded");

    say!("stop_t = {}", outcome.stop_t);
    say!("best_t = {}", outcome.best_t);
    say!("final_empirical_risk = {}", fmt_float(final_risk));
    say!("wrote {}", path_csv.display());
    say!("wrote {}", model_path.display());

    if let Some(dist) = dist {
        let report = risk_report(&cfg, &kernel, &loss, &outcome, &dist, final_risk)?;
        let risk_path = Path::new(cfg.output.risk_json());
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        fs::write(risk_path, json)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", risk_path.display())))?;
        say!("expected_risk = {}", fmt_float(report.expected_risk));
        if let Some(excess) = report.excess_risk {
            say!("excess_risk = {}", fmt_float(excess));
        }
        if let Some(rate) = report.misclassification_rate {
            say!("misclassification_rate = {}", fmt_float(rate));
        }
        say!("wrote {}", risk_path.display());
    }
    Ok(())
}

fn build_model(
    cfg: &RunConfig,
    loss: &Loss,
    outcome: &TrainOutcome,
    eta1: f64,
    bound: KappaBound,
) -> TrainedModel {
    TrainedModel {
        kernel: cfg.kernel.clone(),
        loss: LossSpec::from_loss(loss),
        centers: outcome.train_sample.points.rows(),
        last: outcome.last.clone(),
        averaged: outcome.averaged.clone(),
        best: outcome.best.clone(),
        metadata: ModelMetadata {
            m: outcome.train_sample.len(),
            dim: outcome.train_sample.points.dim(),
            stop_t: outcome.stop_t,
            best_t: outcome.best_t,
            eta1,
            theta: cfg.schedule.theta,
            smooth: cfg.schedule.smooth,
            forced: cfg.schedule.force,
            incremental: cfg.incremental,
            kappa: bound.kappa,
            kappa_source: kappa_source_name(bound.source).into(),
            seed: cfg.seed,
            stopping_rule: outcome.stopping_rule.into(),
            gamma: outcome.gamma,
            alpha: outcome.alpha,
            holdout_split: outcome.holdout_split,
            train_indices: outcome.train_indices.clone(),
        },
    }
}

fn risk_report(
    cfg: &RunConfig,
    kernel: &Kernel,
    loss: &Loss,
    outcome: &TrainOutcome,
    dist: &SyntheticDist,
    final_risk: f64,
) -> Result<RiskReport, Failure> {
    let n = cfg.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
    let f = KernelExpansion::new(
        kernel.clone(),
        outcome.train_sample.points.clone(),
        outcome.last.clone(),
    )?;
    let expected = expected_risk_mc(loss, &f, dist, n, mix_seed(cfg.seed, RISK_STREAM))?;
    let excess = dist.target_risk(loss).ok().map(|target| expected.estimate - target);
    let misclassification_rate = if dist.is_classification() {
        Some(
            misclassification_risk_mc(&f, dist, n, mix_seed(cfg.seed, MISCLASS_STREAM))?.estimate,
        )
    } else {
        None
    };
    Ok(RiskReport {
        empirical_risk: final_risk,
        expected_risk: expected.estimate,
        expected_risk_stderr: expected.stderr,
        excess_risk: excess,
        misclassification_rate,
        mc_samples: n,
    })
}

/// Arguments for the three `indices` flavors.
pub enum IndicesRequest {
    General { q: f64, tau: f64, beta: f64, zeta: Option<f64>, theta: f64, smooth: bool },
    Hinge { beta: f64, theta: f64 },
    HingeFixed { beta: f64, margin: f64 },
}

pub fn cmd_indices(request: &IndicesRequest, m: Option<usize>) -> Result<(), Failure> {
    let print_indices = |idx: &RateIndices, log_averaged: Option<bool>| {
        say!("gamma = {}", fmt_float(idx.gamma));
        say!("alpha = {}", fmt_float(idx.alpha));
        say!("log_factor_last = {}", idx.has_log_factor);
        if let Some(avg) = log_averaged {
            say!("log_factor_averaged = {avg}");
        }
        if let Some(m) = m {
            say!("t_star(m={m}) = {}", theoretical_t(m, idx.gamma));
        }
    };
    match request {
        IndicesRequest::General { q, tau, beta, zeta, theta, smooth } => {
            let params = RegimeParams {
                q: *q,
                tau: *tau,
                beta: *beta,
                zeta: zeta.unwrap_or(ZETA_NEAR_TWO),
                theta: *theta,
                smooth: *smooth,
            };
            let idx = compute_indices(&params)?;
            print_indices(&idx, Some(iterreg::stopping::log_factor_averaged(&params)));
        }
        IndicesRequest::Hinge { beta, theta } => {
            let idx = hinge_indices(*beta, *theta)?;
            print_indices(&idx, Some(false));
        }
        IndicesRequest::HingeFixed { beta, margin } => {
            let schedule = hinge_fixed_t_schedule(*beta, *margin)?;
            say!("theta = {}", fmt_float(schedule.theta));
            say!("gamma = {}", fmt_float(schedule.gamma));
            if let Some(m) = m {
                say!("t_star(m={m}) = {}", theoretical_t(m, schedule.gamma));
            }
        }
    }
    Ok(())
}

pub fn cmd_rates(config_path: &Path, sets: &[String]) -> Result<(), Failure> {
    let cfg = load_config(config_path, sets)?;
    let rates = cfg
        .rates
        .clone()
        .ok_or_else(|| Failure::config("rates subcommand needs a `rates` config section"))?;
    if rates.grid.is_empty() {
        return Err(Failure::config("rates.grid must be nonempty"));
    }
    if !rates.grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Failure::config("rates.grid must be strictly increasing"));
    }
    if rates.repetitions == 0 {
        return Err(Failure::config("rates.repetitions must be at least 1"));
    }
    let DataSpec::Synthetic { dist, .. } = &cfg.data else {
        return Err(Failure::config("rates subcommand needs synthetic data"));
    };
    let dist = dist.build()?;
    let StoppingSpec::Theoretical(tspec) = &cfg.stopping else {
        return Err(Failure::config("rates subcommand needs theoretical stopping"));
    };
    let needs_bound = matches!(
        cfg.loss,
        LossSpec::Square { label_bound: None }
            | LossSpec::Absolute { label_bound: None }
            | LossSpec::PLoss { label_bound: None, .. }
            | LossSpec::EpsInsensitive { label_bound: None, .. }
            | LossSpec::EpsInsensitiveP { label_bound: None, .. }
    );
    if needs_bound {
        return Err(Failure::config(
            "rates subcommand needs an explicit loss.label_bound for this loss",
        ));
    }
    let loss = cfg.loss.resolve(&[])?;
    let regime = resolve_regime(tspec, &cfg, &loss);
    let indices = compute_indices(&regime)?;
    let sweep_cfg = iterreg::experiment::SweepConfig {
        kernel: cfg.kernel.build()?,
        loss,
        dist,
        eta1: cfg.schedule.eta1,
        theta: cfg.schedule.theta,
        mode: schedule_mode(&cfg),
        forced: cfg.schedule.force,
        kappa: cfg.schedule.kappa,
        gamma: indices.gamma,
        grid: rates.grid.clone(),
        repetitions: rates.repetitions,
        mc_samples: rates.mc_samples.or(cfg.mc_samples).unwrap_or(DEFAULT_MC_SAMPLES),
        incremental: cfg.incremental,
        seed: cfg.seed,
    };
    let sweep = iterreg::experiment::rate_sweep(&sweep_cfg)?;
    let out = Path::new(cfg.output.rates_csv());
    write_rates_csv(out, &sweep.cells)?;
    say!("gamma = {}", fmt_float(indices.gamma));
    for (name, summary) in [
        ("last", &sweep.last),
        ("averaged", &sweep.averaged),
        ("best", &sweep.best),
    ] {
        for (m, med) in &summary.medians {
            say!("median_excess_{name}(m={m}) = {}", fmt_float(*med));
        }
        match summary.slope {
            Some(slope) => say!("slope_{name} = {}", fmt_float(slope)),
            None => say!("slope_{name} = n/a (fewer than two sample sizes)"),
        }
    }
    say!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_sample(
    config_path: &Path,
    sets: &[String],
    m_override: Option<usize>,
    out_override: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config_path, sets)?;
    let DataSpec::Synthetic { m, dist } = &cfg.data else {
        return Err(Failure::config("sample subcommand needs synthetic data"));
    };
    let m = m_override.unwrap_or(*m);
    let dist = dist.build()?;
    let sample = dist.sample(m, cfg.seed)?;
    let default_path = cfg.output.sample_csv();
    let out = out_override.unwrap_or_else(|| Path::new(default_path));
    write_sample_csv(out, &sample)?;
    say!("wrote {} rows to {}", sample.len(), out.display());
    Ok(())
}
