//! Serializable descriptions of kernels, losses, and trained models.
//!
//! A trained model stores the kernel and loss by construction recipe, the
//! training centers, and the coefficient vectors of the three iterate
//! variants (last, averaged, best), so a saved model can be reloaded and
//! evaluated without retraining.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::PointSet;
use crate::kernel::{Kernel, KernelError, KernelExpansion};
use crate::loss::{observed_label_bound, Loss, LossError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("model stores {len} coefficients for `{which}` but has {count} centers")]
    CoefficientMismatch { which: &'static str, count: usize, len: usize },
    #[error("centers must be nonempty rows of equal dimension")]
    BadCenters,
}

/// Recipe for building a kernel; covers every kernel expressible in
/// configuration (arbitrary feature dictionaries are code-only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Gaussian { bandwidth: f64 },
    /// Dictionary of monomials `x[0]^k`, `k = 1..=degree`.
    MonomialDictionary { degree: u32 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel, KernelError> {
        match self {
            KernelSpec::Linear => Ok(Kernel::linear()),
            KernelSpec::Polynomial { degree, offset } => Kernel::polynomial(*degree, *offset),
            KernelSpec::Gaussian { bandwidth } => Kernel::gaussian(*bandwidth),
            KernelSpec::MonomialDictionary { degree } => Kernel::monomial_dictionary(*degree),
        }
    }
}

/// Recipe for building a loss. Regression losses may omit the label bound,
/// in which case it is taken from the largest absolute training label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LossSpec {
    Square { label_bound: Option<f64> },
    Absolute { label_bound: Option<f64> },
    PLoss { p: u32, label_bound: Option<f64> },
    Hinge,
    EpsInsensitive { epsilon: f64, label_bound: Option<f64> },
    EpsInsensitiveP { epsilon: f64, p: f64, label_bound: Option<f64> },
    Logistic,
}

impl LossSpec {
    /// Builds the loss, resolving a missing label bound from the labels.
    pub fn resolve(&self, labels: &[f64]) -> Result<Loss, LossError> {
        let bound = |b: &Option<f64>| b.unwrap_or_else(|| observed_label_bound(labels));
        match self {
            LossSpec::Square { label_bound } => Loss::square(bound(label_bound)),
            LossSpec::Absolute { label_bound } => Loss::absolute(bound(label_bound)),
            LossSpec::PLoss { p, label_bound } => Loss::pth_power(*p, bound(label_bound)),
            LossSpec::Hinge => Ok(Loss::hinge()),
            LossSpec::EpsInsensitive { epsilon, label_bound } => {
                Loss::eps_insensitive(*epsilon, bound(label_bound))
            }
            LossSpec::EpsInsensitiveP { epsilon, p, label_bound } => {
                Loss::eps_insensitive_p(*epsilon, *p, bound(label_bound))
            }
            LossSpec::Logistic => Ok(Loss::logistic()),
        }
    }

    /// Describes an already-resolved loss, with all bounds made explicit.
    pub fn from_loss(loss: &Loss) -> LossSpec {
        match loss {
            Loss::Square { label_bound } => LossSpec::Square { label_bound: Some(*label_bound) },
            Loss::Absolute { label_bound } => {
                LossSpec::Absolute { label_bound: Some(*label_bound) }
            }
            Loss::PthPower { p, label_bound } => {
                LossSpec::PLoss { p: *p, label_bound: Some(*label_bound) }
            }
            Loss::Hinge => LossSpec::Hinge,
            Loss::EpsInsensitive { epsilon, label_bound } => LossSpec::EpsInsensitive {
                epsilon: *epsilon,
                label_bound: Some(*label_bound),
            },
            Loss::EpsInsensitiveP { epsilon, p, label_bound } => LossSpec::EpsInsensitiveP {
                epsilon: *epsilon,
                p: *p,
                label_bound: Some(*label_bound),
            },
            Loss::Logistic => LossSpec::Logistic,
        }
    }
}

/// Which of the three iterate variants to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterateKind {
    Last,
    Averaged,
    Best,
}

/// Provenance and schedule details saved alongside the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Training sample size (number of centers).
    pub m: usize,
    /// Input dimension.
    pub dim: usize,
    /// Iterate index the run stopped at.
    pub stop_t: usize,
    /// Index of the best (minimum empirical risk) iterate up to `stop_t`.
    pub best_t: usize,
    pub eta1: f64,
    pub theta: f64,
    /// Whether the smooth-loss schedule bounds were used.
    pub smooth: bool,
    /// Whether the schedule bypassed admissibility validation.
    pub forced: bool,
    /// Whether predictions were updated incrementally during training.
    pub incremental: bool,
    pub kappa: f64,
    /// "analytic", "data_estimated", or "user_supplied".
    pub kappa_source: String,
    pub seed: u64,
    /// "fixed", "theoretical", or "holdout".
    pub stopping_rule: String,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub holdout_split: Option<f64>,
    /// For hold-out runs: which original sample indices were trained on.
    pub train_indices: Option<Vec<usize>>,
}

/// A trained model: construction recipes plus coefficients over the centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kernel: KernelSpec,
    pub loss: LossSpec,
    pub centers: Vec<Vec<f64>>,
    pub last: Vec<f64>,
    pub averaged: Vec<f64>,
    pub best: Vec<f64>,
    pub metadata: ModelMetadata,
}

impl TrainedModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.centers.is_empty() || self.centers.iter().any(|r| r.len() != self.centers[0].len())
        {
            return Err(ModelError::BadCenters);
        }
        let count = self.centers.len();
        for (which, coeffs) in [
            ("last", &self.last),
            ("averaged", &self.averaged),
            ("best", &self.best),
        ] {
            if coeffs.len() != count {
                return Err(ModelError::CoefficientMismatch { which, count, len: coeffs.len() });
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        self.validate()?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path)?;
        let model: TrainedModel = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    /// Rebuilds the predictor for one iterate variant.
    pub fn expansion(&self, which: IterateKind) -> Result<KernelExpansion, ModelError> {
        self.validate()?;
        let kernel = self.kernel.build()?;
        let centers = PointSet::from_rows(&self.centers).map_err(|_| ModelError::BadCenters)?;
        let coefficients = match which {
            IterateKind::Last => self.last.clone(),
            IterateKind::Averaged => self.averaged.clone(),
            IterateKind::Best => self.best.clone(),
        };
        Ok(KernelExpansion::new(kernel, centers, coefficients)?)
    }

    /// Rebuilds the loss; saved models carry explicit bounds.
    pub fn resolve_loss(&self) -> Result<Loss, LossError> {
        self.loss.resolve(&[])
    }
}
