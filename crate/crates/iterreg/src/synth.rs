//! Synthetic data distributions with analytically known targets.
//!
//! Each distribution draws inputs uniformly from `[0,1]^dim` and exposes the
//! loss minimizer and its expected risk in closed form, so excess risk can be
//! measured against a trustworthy baseline.
//!
//! Sampling is deterministic per seed and organized in fixed-size blocks,
//! each with its own derived generator. Monte Carlo evaluation shares the
//! same block layout, so estimates are independent of thread count and
//! consistent with [`SyntheticDist::sample`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{LabeledSample, PointSet};
use crate::evaluation::Predictor;
use crate::exec::mix_seed;
use crate::kernel::KernelExpansion;
use crate::loss::Loss;

/// Samples per generator block; sample() and Monte Carlo evaluation share it.
pub(crate) const BLOCK: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("noise level must be nonnegative and finite, got {0}")]
    BadNoise(f64),
    #[error("flip probability must lie in [0, 1/2), got {0}")]
    BadFlipProbability(f64),
    #[error("margin exponent must be positive and finite, got {0}")]
    BadMarginExponent(f64),
    #[error("margin width must be positive, got {0}")]
    BadMarginWidth(f64),
    #[error("input dimension must be at least 1")]
    ZeroDim,
    #[error("decision function needs at least one weight")]
    EmptyDecision,
    #[error("no analytic target risk for this distribution/loss pair")]
    TargetRiskUnavailable,
    #[error("no finite risk minimizer for this distribution/loss pair")]
    NoFiniteTarget,
}

/// Deterministic decision boundary for classification tasks.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionFn {
    Linear { weights: Vec<f64>, bias: f64 },
}

impl DecisionFn {
    pub fn linear(weights: Vec<f64>, bias: f64) -> Result<Self, SynthError> {
        if weights.is_empty() {
            return Err(SynthError::EmptyDecision);
        }
        Ok(DecisionFn::Linear { weights, bias })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DecisionFn::Linear { weights, bias } => {
                weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + bias
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DecisionFn::Linear { weights, .. } => weights.len(),
        }
    }
}

/// Sign with the tie convention used throughout: 0 maps to +1.
pub fn sign_value(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A distribution over labeled pairs with inputs uniform on `[0,1]^dim`.
#[derive(Debug, Clone)]
pub enum SyntheticDist {
    /// `y = target(x) + Normal(0, noise_std)`.
    RegressionRkhs { target: KernelExpansion, noise_std: f64 },
    /// `y = target(x) + Uniform(-half_width, half_width)`.
    MedianRegression { target: KernelExpansion, half_width: f64 },
    /// `y = sign(decision(x))`, flipped with constant probability.
    FlipClassification { decision: DecisionFn, flip_prob: f64 },
    /// One-dimensional profile `P(y=1|x) = 1/2 + sign(x1-1/2) |x1-1/2|^(1/s) / 2`
    /// on the first coordinate: larger `s` concentrates more mass near the
    /// decision boundary.
    MarginClassification { s: f64, dim: usize },
}

impl SyntheticDist {
    pub fn regression_rkhs(target: KernelExpansion, noise_std: f64) -> Result<Self, SynthError> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(SynthError::BadNoise(noise_std));
        }
        Ok(SyntheticDist::RegressionRkhs { target, noise_std })
    }

    pub fn median_regression(
        target: KernelExpansion,
        half_width: f64,
    ) -> Result<Self, SynthError> {
        if !(half_width >= 0.0 && half_width.is_finite()) {
            return Err(SynthError::BadNoise(half_width));
        }
        Ok(SyntheticDist::MedianRegression { target, half_width })
    }

    pub fn flip_classification(decision: DecisionFn, flip_prob: f64) -> Result<Self, SynthError> {
        if !(flip_prob >= 0.0 && flip_prob < 0.5) {
            return Err(SynthError::BadFlipProbability(flip_prob));
        }
        Ok(SyntheticDist::FlipClassification { decision, flip_prob })
    }

    pub fn margin_classification(s: f64, dim: usize) -> Result<Self, SynthError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(SynthError::BadMarginExponent(s));
        }
        if dim == 0 {
            return Err(SynthError::ZeroDim);
        }
        Ok(SyntheticDist::MarginClassification { s, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            SyntheticDist::RegressionRkhs { target, .. } => target.centers.dim(),
            SyntheticDist::MedianRegression { target, .. } => target.centers.dim(),
            SyntheticDist::FlipClassification { decision, .. } => decision.dim(),
            SyntheticDist::MarginClassification { dim, .. } => *dim,
        }
    }

    /// Whether labels take values in {-1, +1}.
    pub fn is_classification(&self) -> bool {
        matches!(
            self,
            SyntheticDist::FlipClassification { .. } | SyntheticDist::MarginClassification { .. }
        )
    }

    /// Draws `m` i.i.d. pairs, deterministically per seed.
    pub fn sample(&self, m: usize, seed: u64) -> Result<LabeledSample, SynthError> {
        if m == 0 {
            return Err(SynthError::EmptySample);
        }
        let dim = self.dim();
        let mut coords = vec![0.0; m * dim];
        let mut labels = vec![0.0; m];
        for (b, (pts, lbls)) in coords
            .chunks_mut(BLOCK * dim)
            .zip(labels.chunks_mut(BLOCK))
            .enumerate()
        {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, b as u64));
            self.fill_block(&mut rng, pts, lbls);
        }
        let points = PointSet::new(coords, dim).expect("constructed consistently");
        Ok(LabeledSample::new(points, labels).expect("constructed consistently"))
    }

    /// Fills one block of pairs from an already-seeded generator. Draw order
    /// per pair is fixed (coordinates first, then the label draw), so a
    /// shorter block is a prefix of a longer one.
    pub(crate) fn fill_block(&self, rng: &mut ChaCha8Rng, coords: &mut [f64], labels: &mut [f64]) {
        let dim = self.dim();
        debug_assert_eq!(coords.len(), labels.len() * dim);
        for (i, label) in labels.iter_mut().enumerate() {
            let x = &mut coords[i * dim..(i + 1) * dim];
            for v in x.iter_mut() {
                *v = rng.random::<f64>();
            }
            *label = match self {
                SyntheticDist::RegressionRkhs { target, noise_std } => {
                    let noise = Normal::new(0.0, *noise_std)
                        .expect("validated at construction")
                        .sample(rng);
                    target.predict(x) + noise
                }
                SyntheticDist::MedianRegression { target, half_width } => {
                    let noise = if *half_width > 0.0 {
                        rng.random_range(-half_width..=*half_width)
                    } else {
                        0.0
                    };
                    target.predict(x) + noise
                }
                SyntheticDist::FlipClassification { decision, flip_prob } => {
                    let clean = sign_value(decision.eval(x));
                    if rng.random::<f64>() < *flip_prob {
                        -clean
                    } else {
                        clean
                    }
                }
                SyntheticDist::MarginClassification { s, .. } => {
                    let centered = x[0] - 0.5;
                    let p_plus =
                        0.5 + sign_value(centered) * centered.abs().powf(1.0 / s) * 0.5;
                    if rng.random::<f64>() < p_plus {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
        }
    }

    /// The minimizer of the expected risk for `loss` under this
    /// distribution, where it has a usable closed form.
    pub fn target_predictor(&self, loss: &Loss) -> Result<TargetFn, SynthError> {
        match self {
            // Symmetric zero-mean, zero-median noise: the clean target
            // minimizes every supported symmetric regression loss.
            SyntheticDist::RegressionRkhs { target, .. }
            | SyntheticDist::MedianRegression { target, .. } => match loss {
                Loss::Square { .. } | Loss::Absolute { .. } => {
                    Ok(TargetFn::Expansion(target.clone()))
                }
                _ => Err(SynthError::TargetRiskUnavailable),
            },
            SyntheticDist::FlipClassification { decision, flip_prob } => {
                let p = *flip_prob;
                let scale = match loss {
                    Loss::Hinge | Loss::Absolute { .. } => 1.0,
                    Loss::Square { .. } => 1.0 - 2.0 * p,
                    Loss::Logistic => {
                        if p == 0.0 {
                            return Err(SynthError::NoFiniteTarget);
                        }
                        ((1.0 - p) / p).ln()
                    }
                    _ => return Err(SynthError::TargetRiskUnavailable),
                };
                Ok(TargetFn::ScaledSign { decision: decision.clone(), scale })
            }
            SyntheticDist::MarginClassification { .. } => match loss {
                Loss::Hinge => Ok(TargetFn::MarginSign),
                _ => Err(SynthError::TargetRiskUnavailable),
            },
        }
    }

    /// Expected risk of the loss's own minimizer, in closed form.
    pub fn target_risk(&self, loss: &Loss) -> Result<f64, SynthError> {
        match self {
            SyntheticDist::RegressionRkhs { noise_std, .. } => {
                let s = *noise_std;
                match loss {
                    Loss::Square { .. } => Ok(s * s),
                    // E|Normal(0, s)| = s sqrt(2/pi).
                    Loss::Absolute { .. } => {
                        Ok(s * (2.0 / std::f64::consts::PI).sqrt())
                    }
                    _ => Err(SynthError::TargetRiskUnavailable),
                }
            }
            SyntheticDist::MedianRegression { half_width, .. } => {
                let w = *half_width;
                match loss {
                    Loss::Absolute { .. } => Ok(w / 2.0),
                    Loss::Square { .. } => Ok(w * w / 3.0),
                    _ => Err(SynthError::TargetRiskUnavailable),
                }
            }
            SyntheticDist::FlipClassification { flip_prob, .. } => {
                let p = *flip_prob;
                match loss {
                    Loss::Hinge | Loss::Absolute { .. } => Ok(2.0 * p),
                    Loss::Square { .. } => Ok(4.0 * p * (1.0 - p)),
                    Loss::Logistic => {
                        if p == 0.0 {
                            Ok(0.0)
                        } else {
                            Ok(-(1.0 - p) * (1.0 - p).ln() - p * p.ln())
                        }
                    }
                    _ => Err(SynthError::TargetRiskUnavailable),
                }
            }
            SyntheticDist::MarginClassification { .. } => match loss {
                // The hinge minimizer is the Bayes sign rule, and its hinge
                // risk doubles the misclassification risk.
                Loss::Hinge => Ok(2.0 * self.bayes_misclassification_risk()?),
                _ => Err(SynthError::TargetRiskUnavailable),
            },
        }
    }

    /// The Bayes classifier (values in {-1, +1}) for classification tasks.
    pub fn bayes_classifier(&self) -> Result<TargetFn, SynthError> {
        match self {
            SyntheticDist::FlipClassification { decision, .. } => {
                Ok(TargetFn::ScaledSign { decision: decision.clone(), scale: 1.0 })
            }
            SyntheticDist::MarginClassification { .. } => Ok(TargetFn::MarginSign),
            _ => Err(SynthError::TargetRiskUnavailable),
        }
    }

    /// Minimal achievable misclassification risk.
    pub fn bayes_misclassification_risk(&self) -> Result<f64, SynthError> {
        match self {
            SyntheticDist::FlipClassification { flip_prob, .. } => Ok(*flip_prob),
            SyntheticDist::MarginClassification { s, .. } => {
                // E[min(p, 1-p)] = 1/2 - E[|x1 - 1/2|^(1/s)] / 2
                //               = 1/2 - (1/2)^(1/s) * s / (2 (s + 1)).
                Ok(0.5 - 0.5f64.powf(1.0 / s) * s / (2.0 * (s + 1.0)))
            }
            _ => Err(SynthError::TargetRiskUnavailable),
        }
    }

    /// Probability mass of inputs whose conditional probability sits within
    /// `delta` of the uninformative level 1/2.
    pub fn margin_mass(&self, delta: f64) -> Result<f64, SynthError> {
        match self {
            SyntheticDist::MarginClassification { s, .. } => {
                if !(delta > 0.0) {
                    return Err(SynthError::BadMarginWidth(delta));
                }
                Ok((2.0 * (2.0 * delta).powf(*s)).min(1.0))
            }
            _ => Err(SynthError::TargetRiskUnavailable),
        }
    }
}

/// Closed-form target functions returned by the distributions.
#[derive(Debug, Clone)]
pub enum TargetFn {
    /// A kernel expansion (regression targets).
    Expansion(KernelExpansion),
    /// `scale * sign(decision(x))`.
    ScaledSign { decision: DecisionFn, scale: f64 },
    /// `+1` if the first coordinate is at least 1/2, else `-1`.
    MarginSign,
}

impl Predictor for TargetFn {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            TargetFn::Expansion(e) => e.predict(x),
            TargetFn::ScaledSign { decision, scale } => scale * sign_value(decision.eval(x)),
            TargetFn::MarginSign => sign_value(x[0] - 0.5),
        }
    }
}
