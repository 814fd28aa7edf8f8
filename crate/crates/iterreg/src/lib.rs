//! Early stopping as regularization for kernel learning with convex losses.
//!
//! This crate trains kernel predictors by subgradient descent on empirical
//! risk, with no explicit penalty term: the number of iterations is the only
//! regularization knob. It provides
//!
//! - [`kernel`]: positive semidefinite kernels, Gram and cross-Gram
//!   matrices, and kernel expansions (predictors in the kernel's span);
//! - [`loss`]: convex losses (square, absolute, p-th power, hinge,
//!   epsilon-insensitive variants, logistic) with their left derivatives and
//!   growth constants;
//! - [`engine`]: the training loop over coefficient vectors, with validated
//!   polynomially decaying step-size schedules and per-iteration records;
//! - [`stopping`]: stopping-time and rate-exponent formulas, plus a
//!   hold-out rule that picks the iterate minimizing validation risk;
//! - [`evaluation`]: empirical risk, Monte Carlo expected/excess risk with
//!   standard errors, and misclassification checks;
//! - [`synth`]: synthetic data distributions whose target risks are known
//!   in closed form, for calibration and testing;
//! - [`experiment`]: sample-size sweeps measuring how excess risk decays;
//! - [`model`]: serializable trained models (kernel/loss recipes, centers,
//!   and the last/averaged/best coefficient vectors);
//! - [`data`], [`exec`]: flat point storage and the execution-mode switch.
//!
//! # Determinism and parallelism
//!
//! Every randomized routine takes an explicit seed and derives per-block or
//! per-cell seeds from it, so results are bitwise independent of thread
//! count and of whether the `parallel` feature (on by default, via rayon)
//! is enabled. Disabling it (`--no-default-features`) leaves the full API
//! intact with sequential execution.

pub mod data;
pub mod engine;
pub mod evaluation;
pub mod exec;
pub mod experiment;
pub mod kernel;
pub mod loss;
pub mod model;
pub mod stopping;
pub mod synth;
