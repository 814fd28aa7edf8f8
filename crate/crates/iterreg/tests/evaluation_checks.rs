//! Evaluation checks: hand-computed empirical risks, exact degenerate Monte
//! Carlo cases, self-consistency of the estimator, and agreement between
//! sampled risks and the closed-form target risks of the synthetic tasks.

use iterreg::data::PointSet;
use iterreg::evaluation::{
    comparison_check, empirical_risk, excess_risk, expected_risk_mc, expected_risk_mc_with,
    misclassification_risk_mc, FnPredictor,
};
use iterreg::exec::ExecMode;
use iterreg::kernel::{Kernel, KernelExpansion};
use iterreg::loss::Loss;
use iterreg::synth::{sign_value, DecisionFn, SyntheticDist};

/// Uniform class-noise task: the decision function is constant +1, so
/// P(y = +1 | x) = 0.8 everywhere.
fn constant_noise_task() -> SyntheticDist {
    let decision = DecisionFn::linear(vec![0.0], 1.0).unwrap();
    SyntheticDist::flip_classification(decision, 0.2).unwrap()
}

fn zero_predictor() -> FnPredictor<impl Fn(&[f64]) -> f64 + Sync> {
    FnPredictor(|_: &[f64]| 0.0)
}

#[test]
fn empirical_risk_matches_hand_computation() {
    let square = Loss::square(1.0).unwrap();
    // Perfect predictions have zero risk.
    assert_eq!(
        empirical_risk(&square, &[0.3, -0.7, 1.0], &[0.3, -0.7, 1.0]).unwrap(),
        0.0
    );
    // Hinge at the origin: V(+1, 0) = V(-1, 0) = 1.
    assert_eq!(
        empirical_risk(&Loss::hinge(), &[1.0, -1.0], &[0.0, 0.0]).unwrap(),
        1.0
    );
    // Square: (1-0)^2 = 1 and (1-1)^2 = 0 average to 1/2.
    assert_eq!(empirical_risk(&square, &[1.0, 1.0], &[0.0, 1.0]).unwrap(), 0.5);

    // Mismatched lengths and empty sets are rejected.
    assert!(empirical_risk(&square, &[1.0], &[1.0, 2.0]).is_err());
    assert!(empirical_risk(&square, &[], &[]).is_err());
}

#[test]
fn sign_convention_maps_zero_to_plus_one() {
    assert_eq!(sign_value(0.0), 1.0);
    assert_eq!(sign_value(-0.3), -1.0);
    assert_eq!(sign_value(2.0), 1.0);
    assert_eq!(sign_value(-0.0), 1.0);
}

#[test]
fn constant_losses_give_exact_estimates_with_zero_stderr() {
    // V_hinge(y, 0) = 1 for both labels, so every Monte Carlo draw
    // contributes exactly 1: the estimate is exact and the spread is zero.
    let dist = constant_noise_task();
    let mc = expected_risk_mc(&Loss::hinge(), &zero_predictor(), &dist, 10_000, 5).unwrap();
    assert_eq!(mc.estimate, 1.0);
    assert_eq!(mc.stderr, 0.0);
    assert_eq!(mc.n, 10_000);
}

#[test]
fn noiseless_regression_has_exactly_zero_risk_at_the_target() {
    let centers = PointSet::from_rows(&[vec![0.2, 0.4], vec![0.7, 0.6]]).unwrap();
    let target =
        KernelExpansion::new(Kernel::gaussian(0.4).unwrap(), centers, vec![0.8, -0.5]).unwrap();
    let dist = SyntheticDist::regression_rkhs(target.clone(), 0.0).unwrap();
    let mc = expected_risk_mc(&Loss::square(2.0).unwrap(), &target, &dist, 5_000, 9).unwrap();
    assert_eq!(mc.estimate, 0.0);
    assert_eq!(mc.stderr, 0.0);
}

#[test]
fn estimates_agree_across_sample_sizes_within_error_bars() {
    let dist = constant_noise_task();
    let loss = Loss::hinge();
    // A predictor with genuinely random loss values: +0.5 on one side of
    // a threshold in x, -0.5 on the other, against noisy labels.
    let f = FnPredictor(|x: &[f64]| if x[0] > 0.5 { 0.5 } else { -0.5 });
    let small = expected_risk_mc(&loss, &f, &dist, 20_000, 1).unwrap();
    let large = expected_risk_mc(&loss, &f, &dist, 200_000, 2).unwrap();
    assert!(small.stderr > 0.0 && large.stderr > 0.0);
    assert!(large.stderr < small.stderr);
    assert!(
        (small.estimate - large.estimate).abs() <= 4.0 * (small.stderr + large.stderr),
        "{} vs {}",
        small.estimate,
        large.estimate
    );
}

#[test]
fn zero_predictor_excess_on_the_constant_noise_task_is_exact() {
    // E_hinge(0) = 1 exactly and the hinge target risk is 2p = 0.4, so the
    // excess is 0.6 with no Monte Carlo noise at all.
    let dist = constant_noise_task();
    let excess = excess_risk(&Loss::hinge(), &zero_predictor(), &dist, 50_000, 3).unwrap();
    assert!((excess - 0.6).abs() <= 1e-15, "{excess}");
}

#[test]
fn target_predictors_have_excess_risk_zero_within_noise() {
    let decision = DecisionFn::linear(vec![1.0, -0.5], 0.1).unwrap();
    let dist = SyntheticDist::flip_classification(decision, 0.1).unwrap();
    for loss in [Loss::hinge(), Loss::logistic(), Loss::square(1.0).unwrap()] {
        let f = dist.target_predictor(&loss).unwrap();
        let mc = expected_risk_mc(&loss, &f, &dist, 200_000, 17).unwrap();
        let target = dist.target_risk(&loss).unwrap();
        assert!(
            (mc.estimate - target).abs() <= 4.0 * mc.stderr + 1e-12,
            "{loss:?}: mc = {}, closed form = {target}",
            mc.estimate
        );
    }
}

#[test]
fn margin_task_hinge_risk_matches_its_closed_form() {
    // The hinge minimizer is the Bayes sign rule, whose hinge risk is twice
    // the Bayes misclassification risk.
    for (s, bayes) in [(1.0, 0.375), (2.0, 0.2642977396044842)] {
        let dist = SyntheticDist::margin_classification(s, 2).unwrap();
        assert!((dist.bayes_misclassification_risk().unwrap() - bayes).abs() <= 1e-15);
        let target = dist.target_risk(&Loss::hinge()).unwrap();
        assert!((target - 2.0 * bayes).abs() <= 1e-12, "s = {s}: {target}");
        let f = dist.target_predictor(&Loss::hinge()).unwrap();
        let mc = expected_risk_mc(&Loss::hinge(), &f, &dist, 200_000, 23).unwrap();
        assert!(
            (mc.estimate - target).abs() <= 4.0 * mc.stderr,
            "s = {s}: mc = {}, closed form = {target}",
            mc.estimate
        );
    }
}

#[test]
fn median_regression_absolute_risk_matches_its_closed_form() {
    let centers = PointSet::from_rows(&[vec![0.3, 0.3], vec![0.6, 0.8]]).unwrap();
    let median =
        KernelExpansion::new(Kernel::gaussian(0.5).unwrap(), centers, vec![0.5, -0.4]).unwrap();
    let loss = Loss::absolute(2.0).unwrap();
    let dist = SyntheticDist::median_regression(median.clone(), 0.3).unwrap();
    // Uniform noise of half-width h has mean absolute deviation h/2.
    let target = dist.target_risk(&loss).unwrap();
    assert!((target - 0.15).abs() <= 1e-12, "{target}");
    let mc = expected_risk_mc(&loss, &median, &dist, 200_000, 29).unwrap();
    assert!((mc.estimate - target).abs() <= 4.0 * mc.stderr);
}

#[test]
fn misclassification_of_the_bayes_rule_equals_the_noise_level() {
    let dist = constant_noise_task();
    let bayes = dist.bayes_classifier().unwrap();
    let mc = misclassification_risk_mc(&bayes, &dist, 200_000, 31).unwrap();
    assert!((mc.estimate - 0.2).abs() <= 4.0 * mc.stderr, "{}", mc.estimate);

    // Flipping the Bayes rule errs exactly where it was right.
    let anti = FnPredictor(|x: &[f64]| -sign_value(x[0] * 0.0 + 1.0));
    let mc = misclassification_risk_mc(&anti, &dist, 200_000, 31).unwrap();
    assert!((mc.estimate - 0.8).abs() <= 4.0 * mc.stderr, "{}", mc.estimate);

    // The zero predictor classifies as +1 everywhere (sign(0) = +1).
    let mc = misclassification_risk_mc(&zero_predictor(), &dist, 200_000, 37).unwrap();
    assert!((mc.estimate - 0.2).abs() <= 4.0 * mc.stderr, "{}", mc.estimate);
}

#[test]
fn separable_task_has_zero_misclassification_at_the_bayes_rule() {
    let decision = DecisionFn::linear(vec![1.0, -1.0], 0.0).unwrap();
    let dist = SyntheticDist::flip_classification(decision, 0.0).unwrap();
    let bayes = dist.bayes_classifier().unwrap();
    let mc = misclassification_risk_mc(&bayes, &dist, 50_000, 41).unwrap();
    assert_eq!(mc.estimate, 0.0);
    assert_eq!(mc.stderr, 0.0);
}

#[test]
fn comparison_bound_holds_for_the_zero_predictor() {
    // sign(0) = +1 coincides with the Bayes rule here, so the excess
    // misclassification is ~0 while the hinge excess is exactly 0.6.
    let dist = constant_noise_task();
    let check = comparison_check(&zero_predictor(), &dist, 100_000, 43).unwrap();
    assert!(check.lhs.abs() <= 4.0 * check.lhs_stderr + 1e-12, "{}", check.lhs);
    assert!((check.rhs - 0.6).abs() <= 1e-15, "{}", check.rhs);
    assert_eq!(check.rhs_stderr, 0.0);
    assert!(check.holds);
}

#[test]
fn classification_only_estimators_reject_regression_tasks() {
    let centers = PointSet::from_rows(&[vec![0.5, 0.5]]).unwrap();
    let target =
        KernelExpansion::new(Kernel::gaussian(0.4).unwrap(), centers, vec![1.0]).unwrap();
    let dist = SyntheticDist::regression_rkhs(target, 0.1).unwrap();
    assert!(misclassification_risk_mc(&zero_predictor(), &dist, 100, 1).is_err());
    assert!(comparison_check(&zero_predictor(), &dist, 100, 1).is_err());
}

#[test]
fn monte_carlo_estimates_are_reproducible_and_mode_independent() {
    let dist = constant_noise_task();
    let loss = Loss::hinge();
    let f = FnPredictor(|x: &[f64]| x[0] - 0.4);
    let a = expected_risk_mc(&loss, &f, &dist, 30_000, 97).unwrap();
    let b = expected_risk_mc(&loss, &f, &dist, 30_000, 97).unwrap();
    assert_eq!(a.estimate, b.estimate);
    assert_eq!(a.stderr, b.stderr);
    let seq =
        expected_risk_mc_with(ExecMode::Sequential, &loss, &f, &dist, 30_000, 97).unwrap();
    assert_eq!(a.estimate, seq.estimate);
    assert_eq!(a.stderr, seq.stderr);
    // A different seed draws a genuinely different sample.
    let c = expected_risk_mc(&loss, &f, &dist, 30_000, 98).unwrap();
    assert_ne!(a.estimate, c.estimate);
}
