//! JSON run configuration: one document describing the kernel, loss,
//! schedule, stopping rule, data source, and output paths, with
//! `--set path.to.field=value` overrides applied before parsing.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use iterreg::data::PointSet;
use iterreg::engine::EngineError;
use iterreg::evaluation::EvalError;
use iterreg::experiment::ExperimentError;
use iterreg::kernel::KernelExpansion;
use iterreg::model::{KernelSpec, LossSpec, ModelError};
use iterreg::stopping::StoppingError;
use iterreg::synth::{DecisionFn, SynthError, SyntheticDist};

/// Failure carrying the process exit code: 1 = configuration or data
/// problem, 2 = inadmissible schedule without force, 3 = divergence.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(msg: impl Display) -> Self {
        Failure { code: 1, message: msg.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::config(e)
    }
}

impl From<iterreg::kernel::KernelError> for Failure {
    fn from(e: iterreg::kernel::KernelError) -> Self {
        Failure::config(e)
    }
}

impl From<iterreg::loss::LossError> for Failure {
    fn from(e: iterreg::loss::LossError) -> Self {
        Failure::config(e)
    }
}

impl From<iterreg::data::DataError> for Failure {
    fn from(e: iterreg::data::DataError) -> Self {
        Failure::config(e)
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        Failure::config(e)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::config(e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::config(e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::Diverged { .. } | EngineError::NonFinite { .. } => 3,
            EngineError::StepTooLarge { .. }
            | EngineError::BadEta(_)
            | EngineError::ThetaRange { .. }
            | EngineError::ThetaVsGrowth { .. }
            | EngineError::NotSmooth
            | EngineError::BadKappa(_) => 2,
            _ => 1,
        };
        let message = match &e {
            EngineError::StepTooLarge { .. } => {
                format!("{e}; pass schedule.force=true to run anyway")
            }
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<StoppingError> for Failure {
    fn from(e: StoppingError) -> Self {
        match e {
            StoppingError::Engine(inner) => inner.into(),
            other => Failure::config(other),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Engine(inner) => inner.into(),
            ExperimentError::Stopping(inner) => inner.into(),
            other => Failure::config(other),
        }
    }
}

/// The whole run configuration document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub loss: LossSpec,
    pub schedule: ScheduleSpec,
    pub stopping: StoppingSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub seed: u64,
    /// Update training-point predictions incrementally (pays off for losses
    /// with many zero left derivatives, like the hinge).
    #[serde(default)]
    pub incremental: bool,
    /// Monte Carlo sample count for risk reports and sweeps (default 100000).
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Required by the `rates` subcommand, ignored elsewhere.
    #[serde(default)]
    pub rates: Option<RatesSpec>,
}

/// Step sizes `eta1 * t^(-theta)`. Omitting `eta1` uses the largest
/// admissible value for the loss, kernel bound, and mode.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub eta1: Option<f64>,
    pub theta: f64,
    /// Skip admissibility validation of `eta1`.
    #[serde(default)]
    pub force: bool,
    /// Use the smooth-loss admissibility and index rules.
    #[serde(default)]
    pub smooth: bool,
    /// Kernel sup bound override; otherwise analytic or data-estimated.
    #[serde(default)]
    pub kappa: Option<f64>,
}

/// Exactly one stopping rule (the JSON object has exactly one key).
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StoppingSpec {
    /// Stop at `ceil(m^gamma)` with `gamma` from the regime parameters.
    Theoretical(TheoreticalSpec),
    /// Split off a validation set and stop where its risk is smallest.
    Holdout { split: f64, t_max: usize },
    /// Stop at a fixed iterate index.
    Fixed { t: usize },
}

/// Regime parameters for the theoretical stopping rule. Omitted fields
/// default to: `q` from the loss, `zeta` to the capacity-independent limit,
/// `theta`/`smooth` to the schedule's values, `tau` to 0.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoreticalSpec {
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub tau: f64,
    pub beta: f64,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub smooth: Option<bool>,
}

/// Exactly one data source.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Synthetic { m: usize, dist: DistSpec },
    Csv { path: String },
}

/// Serializable description of a synthetic distribution.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// Target in the kernel span plus centered Gaussian label noise.
    RegressionRkhs {
        kernel: KernelSpec,
        centers: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        noise_std: f64,
    },
    /// Target in the kernel span plus uniform noise on `[-w, w]`.
    MedianRegression {
        kernel: KernelSpec,
        centers: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        half_width: f64,
    },
    /// Sign of a linear decision function with labels flipped w.p. `flip_prob`.
    FlipClassification {
        weights: Vec<f64>,
        #[serde(default)]
        bias: f64,
        flip_prob: f64,
    },
    /// Margin-profile classification task on `[0, 1]^dim`.
    MarginClassification { s: f64, dim: usize },
}

impl DistSpec {
    pub fn build(&self) -> Result<SyntheticDist, Failure> {
        let expansion = |kernel: &KernelSpec,
                         centers: &[Vec<f64>],
                         coefficients: &[f64]|
         -> Result<KernelExpansion, Failure> {
            let kernel = kernel.build()?;
            let centers = PointSet::from_rows(centers)?;
            Ok(KernelExpansion::new(kernel, centers, coefficients.to_vec())?)
        };
        let dist = match self {
            DistSpec::RegressionRkhs { kernel, centers, coefficients, noise_std } => {
                SyntheticDist::regression_rkhs(expansion(kernel, centers, coefficients)?, *noise_std)?
            }
            DistSpec::MedianRegression { kernel, centers, coefficients, half_width } => {
                SyntheticDist::median_regression(
                    expansion(kernel, centers, coefficients)?,
                    *half_width,
                )?
            }
            DistSpec::FlipClassification { weights, bias, flip_prob } => {
                SyntheticDist::flip_classification(
                    DecisionFn::linear(weights.clone(), *bias)?,
                    *flip_prob,
                )?
            }
            DistSpec::MarginClassification { s, dim } => {
                SyntheticDist::margin_classification(*s, *dim)?
            }
        };
        Ok(dist)
    }
}

/// Output file paths; every entry has a default in the working directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path_csv: Option<String>,
    #[serde(default)]
    pub model_json: Option<String>,
    #[serde(default)]
    pub risk_json: Option<String>,
    #[serde(default)]
    pub rates_csv: Option<String>,
    #[serde(default)]
    pub sample_csv: Option<String>,
}

impl OutputSpec {
    pub fn path_csv(&self) -> &str {
        self.path_csv.as_deref().unwrap_or("path.csv")
    }
    pub fn model_json(&self) -> &str {
        self.model_json.as_deref().unwrap_or("model.json")
    }
    pub fn risk_json(&self) -> &str {
        self.risk_json.as_deref().unwrap_or("risk.json")
    }
    pub fn rates_csv(&self) -> &str {
        self.rates_csv.as_deref().unwrap_or("rates.csv")
    }
    pub fn sample_csv(&self) -> &str {
        self.sample_csv.as_deref().unwrap_or("sample.csv")
    }
}

/// Grid and repetition count for the `rates` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    /// Strictly increasing sample sizes.
    pub grid: Vec<usize>,
    pub repetitions: usize,
    #[serde(default)]
    pub mc_samples: Option<usize>,
}

/// Loads the JSON document, applies `--set` overrides, and parses it.
pub fn load_config(path: &Path, sets: &[String]) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("invalid JSON in {}: {e}", path.display())))?;
    for spec in sets {
        apply_set(&mut value, spec)?;
    }
    serde_json::from_value(value)
        .map_err(|e| Failure::config(format!("invalid configuration: {e}")))
}

/// Applies one `path.to.field=value` override. The value is parsed as JSON
/// when possible (numbers, booleans, arrays, objects, quoted strings) and
/// treated as a plain string otherwise. Intermediate objects are created as
/// needed; descending into a non-object fails.
pub fn apply_set(root: &mut Value, spec: &str) -> Result<(), Failure> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("--set needs path.to.field=value, got `{spec}`")))?;
    if path.is_empty() {
        return Err(Failure::config("--set path must be nonempty"));
    }
    let value: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    let mut cursor = root;
    for (i, segment) in segments.iter().enumerate() {
        if segment.is_empty() {
            return Err(Failure::config(format!("--set path `{path}` has an empty segment")));
        }
        let map = cursor.as_object_mut().ok_or_else(|| {
            Failure::config(format!(
                "--set cannot descend into non-object at `{}`",
                segments[..i].join(".")
            ))
        })?;
        if i + 1 == segments.len() {
            map.insert(segment.to_string(), value);
            return Ok(());
        }
        cursor = map.entry(segment.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if cursor.is_null() {
            *cursor = Value::Object(Default::default());
        }
    }
    unreachable!("loop returns on the last segment")
}
