//! Risk evaluation: empirical risk, Monte Carlo expected risk, excess risk
//! against known targets, classification error, and the hinge comparison
//! inequality check.
//!
//! Monte Carlo estimates reuse the synthetic distributions' block-seeded
//! sampling, so they are deterministic per seed and independent of thread
//! count: blocks may be evaluated in parallel but are always reduced in
//! block order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, mix_seed, ExecMode};
use crate::kernel::KernelExpansion;
use crate::loss::{Loss, LossError};
use crate::synth::{sign_value, SynthError, SyntheticDist, BLOCK};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({preds}) and labels ({labels}) must have equal length")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("empty evaluation set")]
    Empty,
    #[error("Monte Carlo evaluation needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("not a classification distribution")]
    NotClassification,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Anything that maps an input point to a real prediction.
///
/// `Sync` is required so Monte Carlo blocks can score in parallel.
pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> f64;
}

impl Predictor for KernelExpansion {
    fn predict(&self, x: &[f64]) -> f64 {
        KernelExpansion::predict(self, x)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict(&self, x: &[f64]) -> f64 {
        (**self).predict(x)
    }
}

/// Wraps a closure as a predictor (handy for tests and experiments).
pub struct FnPredictor<F: Fn(&[f64]) -> f64 + Sync>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn predict(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Thresholds a real-valued predictor at zero: `>= 0` maps to `+1`,
/// everything else to `-1`.
pub struct SignClassifier<P: Predictor>(pub P);

impl<P: Predictor> Predictor for SignClassifier<P> {
    fn predict(&self, x: &[f64]) -> f64 {
        sign_value(self.0.predict(x))
    }
}

/// Mean loss over a finite labeled set: `(1/m) sum_i V(y_i, f(x_i))`.
pub fn empirical_risk(loss: &Loss, labels: &[f64], predictions: &[f64]) -> Result<f64, EvalError> {
    if labels.len() != predictions.len() {
        return Err(EvalError::LengthMismatch { preds: predictions.len(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sum = 0.0;
    for (y, a) in labels.iter().zip(predictions.iter()) {
        sum += loss.value(*y, *a)?;
    }
    Ok(sum / labels.len() as f64)
}

/// A Monte Carlo estimate with its standard error (sample standard
/// deviation over the square root of the sample count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Evaluates `mean g(x, y)` over `n` fresh draws from the distribution,
/// block by block. The closure returns one or two scored values per pair so
/// callers can estimate two functionals from a single pass.
fn mc_accumulate<G>(
    dist: &SyntheticDist,
    n: usize,
    seed: u64,
    mode: ExecMode,
    score: G,
) -> Result<(McEstimate, McEstimate), EvalError>
where
    G: Fn(&[f64], f64) -> Result<(f64, f64), LossError> + Sync,
{
    if n < 2 {
        return Err(EvalError::TooFewSamples(n));
    }
    let dim = dist.dim();
    let blocks = n.div_ceil(BLOCK);
    let partials = map_indexed(mode, blocks, |b| {
        let len = if b + 1 == blocks { n - b * BLOCK } else { BLOCK };
        let mut coords = vec![0.0; len * dim];
        let mut labels = vec![0.0; len];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, b as u64));
        dist.fill_block(&mut rng, &mut coords, &mut labels);
        let mut acc = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..len {
            let (u, v) = score(&coords[i * dim..(i + 1) * dim], labels[i])?;
            acc.0 += u;
            acc.1 += u * u;
            acc.2 += v;
            acc.3 += v * v;
        }
        Ok::<_, LossError>(acc)
    });
    let mut total = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in partials {
        let (a, b, c, d) = p?;
        total.0 += a;
        total.1 += b;
        total.2 += c;
        total.3 += d;
    }
    let nf = n as f64;
    let finish = |sum: f64, sum_sq: f64| {
        let mean = sum / nf;
        let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
        McEstimate { estimate: mean, stderr: (var / nf).sqrt(), n }
    };
    Ok((finish(total.0, total.1), finish(total.2, total.3)))
}

/// Monte Carlo estimate of the expected risk of `f` under `dist`.
pub fn expected_risk_mc<P: Predictor + ?Sized>(
    loss: &Loss,
    f: &P,
    dist: &SyntheticDist,
    n: usize,
    seed: u64,
) -> Result<McEstimate, EvalError> {
    expected_risk_mc_with(ExecMode::default(), loss, f, dist, n, seed)
}

/// As [`expected_risk_mc`], with an explicit execution mode. Both modes
/// produce the same estimate.
pub fn expected_risk_mc_with<P: Predictor + ?Sized>(
    mode: ExecMode,
    loss: &Loss,
    f: &P,
    dist: &SyntheticDist,
    n: usize,
    seed: u64,
) -> Result<McEstimate, EvalError> {
    let (risk, _) = mc_accumulate(dist, n, seed, mode, |x, y| {
        let v = loss.value(y, f.predict(x))?;
        Ok((v, 0.0))
    })?;
    Ok(risk)
}

/// Monte Carlo expected risk of `f` minus the distribution's closed-form
/// target risk for the loss. May be slightly negative within Monte Carlo
/// error when `f` is (near) optimal.
pub fn excess_risk<P: Predictor + ?Sized>(
    loss: &Loss,
    f: &P,
    dist: &SyntheticDist,
    n: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let target = dist.target_risk(loss)?;
    let mc = expected_risk_mc(loss, f, dist, n, seed)?;
    Ok(mc.estimate - target)
}

/// Monte Carlo estimate of `P(y != sign(f(x)))`. The prediction is
/// thresholded at zero with the `>= 0 -> +1` convention.
pub fn misclassification_risk_mc<P: Predictor + ?Sized>(
    f: &P,
    dist: &SyntheticDist,
    n: usize,
    seed: u64,
) -> Result<McEstimate, EvalError> {
    if !dist.is_classification() {
        return Err(EvalError::NotClassification);
    }
    let (risk, _) = mc_accumulate(dist, n, seed, ExecMode::default(), |x, y| {
        let miss = if sign_value(f.predict(x)) != y { 1.0 } else { 0.0 };
        Ok((miss, 0.0))
    })?;
    Ok(risk)
}

/// Both sides of the classification comparison bound, estimated in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonCheck {
    /// Misclassification excess: `P(y != sign f) - P(y != bayes)`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Hinge excess: `E_hinge(f) - E_hinge(target)`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// `lhs <= rhs + 3 (lhs_stderr + rhs_stderr)`.
    pub holds: bool,
}

/// Checks that the misclassification excess of `sign(f)` is bounded by the
/// hinge excess of `f`, within three combined standard errors. Requires a
/// classification distribution with closed-form Bayes and hinge target
/// risks; both sides are estimated from the same sample pass.
pub fn comparison_check<P: Predictor + ?Sized>(
    f: &P,
    dist: &SyntheticDist,
    n: usize,
    seed: u64,
) -> Result<ComparisonCheck, EvalError> {
    if !dist.is_classification() {
        return Err(EvalError::NotClassification);
    }
    let bayes_risk = dist.bayes_misclassification_risk()?;
    let hinge = Loss::hinge();
    let hinge_target = dist.target_risk(&hinge)?;
    let (mis, hin) = mc_accumulate(dist, n, seed, ExecMode::default(), |x, y| {
        let pred = f.predict(x);
        let miss = if sign_value(pred) != y { 1.0 } else { 0.0 };
        let v = hinge.value(y, pred)?;
        Ok((miss, v))
    })?;
    let lhs = mis.estimate - bayes_risk;
    let rhs = hin.estimate - hinge_target;
    let holds = lhs <= rhs + 3.0 * (mis.stderr + hin.stderr);
    Ok(ComparisonCheck {
        lhs,
        lhs_stderr: mis.stderr,
        rhs,
        rhs_stderr: hin.stderr,
        holds,
    })
}

/// Summary risk figures for a trained model, as serialized to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub empirical_risk: f64,
    pub expected_risk: f64,
    pub expected_risk_stderr: f64,
    pub excess_risk: Option<f64>,
    pub misclassification_rate: Option<f64>,
    pub mc_samples: usize,
}
