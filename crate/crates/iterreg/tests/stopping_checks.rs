//! Stopping-rule checks: the power indices against an independent
//! re-implementation, branch continuity, the closed-form hinge corollary,
//! and the frozen behavior of the stopping horizon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iterreg::stopping::{
    compute_indices, hinge_fixed_t_schedule, hinge_indices, lambda_t, log_factor_averaged,
    theoretical_t, RegimeParams, StoppingError, ZETA_NEAR_TWO,
};

/// Straight transcription of the two-branch index formulas, kept separate
/// from the library so a regression there cannot hide here.
fn reference_indices(q: f64, tau: f64, beta: f64, zeta: f64, theta: f64, smooth: bool) -> (f64, f64) {
    let s = 2.0 - tau + zeta * tau / 2.0;
    let big_q = q * (1.0 + zeta / 2.0);
    if smooth || theta >= (q + 1.0) / (q + 2.0) {
        (
            2.0 / ((1.0 - theta) * ((1.0 + 2.0 * beta) * s + big_q)),
            beta / (beta * s + s / 2.0 + big_q / 2.0),
        )
    } else {
        let d = theta * (1.0 + q) - q;
        (
            2.0 / ((1.0 - theta) * ((1.0 + 2.0 * beta * d / (1.0 - theta)) * s + big_q)),
            beta / (beta * s + ((1.0 - theta) / d) * (s / 2.0 + big_q / 2.0)),
        )
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> RegimeParams {
    let q = rng.random_range(0.0..3.0);
    let smooth = rng.random::<f64>() < 0.5;
    let theta = if smooth {
        rng.random_range(0.0..0.999)
    } else {
        let min = q / (q + 1.0);
        min + rng.random_range(0.001..0.999) * (1.0 - min)
    };
    RegimeParams {
        q,
        tau: rng.random_range(0.0..1.0),
        beta: rng.random_range(0.01..1.0),
        zeta: rng.random_range(0.01..1.99),
        theta,
        smooth,
    }
}

#[test]
fn indices_match_an_independent_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let got = compute_indices(&p).unwrap();
        let (gamma, alpha) = reference_indices(p.q, p.tau, p.beta, p.zeta, p.theta, p.smooth);
        assert!((got.gamma - gamma).abs() <= 1e-12 * (1.0 + gamma.abs()), "{p:?}");
        assert!((got.alpha - alpha).abs() <= 1e-12 * (1.0 + alpha.abs()), "{p:?}");
        assert!(got.gamma > 0.0 && got.alpha > 0.0 && got.alpha <= 1.0, "{p:?}");
    }
}

#[test]
fn general_formula_collapses_to_the_hinge_corollary() {
    // With q = 0 and tau = 0 the capacity exponent cancels, so the general
    // fast branch reduces exactly to the closed-form hinge rate.
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    for _ in 0..100 {
        let beta = rng.random_range(0.01..1.0);
        let theta = rng.random_range(0.501..0.999);
        let p = RegimeParams { q: 0.0, tau: 0.0, beta, zeta: ZETA_NEAR_TWO, theta, smooth: false };
        let general = compute_indices(&p).unwrap();
        let hinge = hinge_indices(beta, theta).unwrap();
        assert!((general.gamma - hinge.gamma).abs() <= 1e-12 * hinge.gamma);
        assert!((general.alpha - hinge.alpha).abs() <= 1e-12 * hinge.alpha);
        assert!(!general.has_log_factor);
        assert!(!hinge.has_log_factor);
    }
}

#[test]
fn branches_join_continuously_at_the_crossover() {
    for q in [0.0, 0.5, 1.0, 2.0] {
        for beta in [0.3, 1.0] {
            let boundary = (q + 1.0) / (q + 2.0);
            // The slow-branch formula evaluated AT the boundary must equal
            // the fast branch the library selects there.
            let p = RegimeParams { q, tau: 0.25, beta, zeta: 1.5, theta: boundary, smooth: false };
            let at = compute_indices(&p).unwrap();
            let d = boundary * (1.0 + q) - q;
            let s = 2.0 - p.tau + p.zeta * p.tau / 2.0;
            let big_q = q * (1.0 + p.zeta / 2.0);
            let slow_gamma = 2.0
                / ((1.0 - boundary) * ((1.0 + 2.0 * beta * d / (1.0 - boundary)) * s + big_q));
            let slow_alpha =
                beta / (beta * s + ((1.0 - boundary) / d) * (s / 2.0 + big_q / 2.0));
            assert!((at.gamma - slow_gamma).abs() <= 1e-12 * at.gamma, "q = {q}, beta = {beta}");
            assert!((at.alpha - slow_alpha).abs() <= 1e-12 * at.alpha, "q = {q}, beta = {beta}");

            // And stepping across the boundary moves the indices only by
            // O(step), not by a jump.
            let eps = 1e-7;
            let below = compute_indices(&RegimeParams { theta: boundary - eps, ..p }).unwrap();
            let above = compute_indices(&RegimeParams { theta: boundary + eps, ..p }).unwrap();
            assert!((below.gamma - above.gamma).abs() <= 1e-4, "q = {q}, beta = {beta}");
            assert!((below.alpha - above.alpha).abs() <= 1e-4, "q = {q}, beta = {beta}");
        }
    }
}

#[test]
fn log_factor_flags_track_the_branch() {
    let base = RegimeParams {
        q: 1.0,
        tau: 0.0,
        beta: 1.0,
        zeta: ZETA_NEAR_TWO,
        theta: 0.9,
        smooth: false,
    };
    let boundary: f64 = 2.0 / 3.0;

    // Strictly above the boundary: clean rate for every variant.
    let fast = compute_indices(&base).unwrap();
    assert!(!fast.has_log_factor);
    assert!(!log_factor_averaged(&base));

    // Exactly at the boundary: both the last and the averaged guarantee
    // pick up a logarithmic factor.
    let at = RegimeParams { theta: boundary, ..base };
    assert!(compute_indices(&at).unwrap().has_log_factor);
    assert!(log_factor_averaged(&at));

    // Below the boundary: only the last iterate keeps the factor.
    let slow = RegimeParams { theta: 0.6, ..base };
    assert!(compute_indices(&slow).unwrap().has_log_factor);
    assert!(!log_factor_averaged(&slow));

    // Smooth mode never has one.
    let smooth = RegimeParams { theta: 0.0, smooth: true, ..base };
    assert!(!compute_indices(&smooth).unwrap().has_log_factor);
    assert!(!log_factor_averaged(&smooth));
}

#[test]
fn stopping_horizon_snaps_near_integer_powers() {
    // powf(1000, 2/3) lands just below 100; the snap keeps the intended
    // horizon instead of spilling to 101 via the ceiling.
    assert_eq!(theoretical_t(1000, 2.0 / 3.0), 100);
    assert_eq!(theoretical_t(1000, 1.0 / 3.0), 10);
    assert_eq!(theoretical_t(8, 1.0 / 3.0), 2);
    assert_eq!(theoretical_t(27, 1.0 / 3.0), 3);
    assert_eq!(theoretical_t(1024, 0.5), 32);
    assert_eq!(theoretical_t(2, 0.5), 2);
    assert_eq!(theoretical_t(1, 0.9), 1);
    assert_eq!(theoretical_t(500, 0.0), 1);

    // Monotone in the sample size for a fixed exponent.
    let gamma = 0.7407407407407407;
    let mut prev = 0;
    for m in [128usize, 256, 512, 1024, 2048, 4096] {
        let t = theoretical_t(m, gamma);
        assert!(t >= prev);
        prev = t;
    }
}

#[test]
fn step_decay_factor_follows_its_three_branches() {
    // Fast decay: plain power. 4^(-1/4) = 1/sqrt(2).
    assert!((lambda_t(4.0, 0.0, 0.75).unwrap() - 1.0 / 2f64.sqrt()).abs() <= 1e-15);
    // Boundary: logarithmic correction. ln(4)/2 = ln(2).
    assert!((lambda_t(4.0, 0.0, 0.5).unwrap() - 2f64.ln()).abs() <= 1e-15);
    // Slow decay: log times the effective power theta(1+q) - q.
    let v = lambda_t(4.0, 1.0, 0.6).unwrap();
    assert!((v - 4f64.ln() * 4f64.powf(-0.2)).abs() <= 1e-15);

    // It eventually decays on every branch; the logarithmic branches peak
    // at T = exp(1/decay) (about 148 for the q = 1, theta = 0.6 case), so
    // compare points beyond the peak.
    for (q, theta) in [(0.0, 0.75), (0.0, 0.5), (1.0, 0.6)] {
        let early = lambda_t(1e3, q, theta).unwrap();
        let late = lambda_t(1e6, q, theta).unwrap();
        assert!(late < early, "q = {q}, theta = {theta}");
    }

    assert!(matches!(lambda_t(1.5, 0.0, 0.75), Err(StoppingError::LambdaRange(_))));
    assert!(matches!(lambda_t(4.0, 1.0, 0.4), Err(StoppingError::ThetaVsGrowth { .. })));
    assert!(matches!(lambda_t(4.0, 0.0, 1.0), Err(StoppingError::ThetaRange { .. })));
}

#[test]
fn fixed_horizon_hinge_schedule_hits_its_target_exponent() {
    let sched = hinge_fixed_t_schedule(1.0, 0.1).unwrap();
    assert!((sched.theta - 0.5652173913043478).abs() <= 1e-15);
    assert!((sched.gamma - 0.7666666666666666).abs() <= 1e-15);
    // The chosen decay really does make the hinge horizon m^(2/3 + margin).
    let indices = hinge_indices(1.0, sched.theta).unwrap();
    assert!((indices.gamma - sched.gamma).abs() <= 1e-12);

    assert!(matches!(
        hinge_fixed_t_schedule(1.0, 0.0),
        Err(StoppingError::BadMargin(_))
    ));
    assert!(matches!(
        hinge_fixed_t_schedule(1.0, 1.0 / 3.0),
        Err(StoppingError::BadMargin(_))
    ));
    assert!(matches!(
        hinge_fixed_t_schedule(0.5, 0.1),
        Err(StoppingError::BetaBelowThreshold { .. })
    ));
    assert!(matches!(
        hinge_fixed_t_schedule(2.0, 0.1),
        Err(StoppingError::BadBeta(_))
    ));
}

#[test]
fn regime_validation_rejects_out_of_range_parameters() {
    let ok = RegimeParams {
        q: 1.0,
        tau: 0.5,
        beta: 0.8,
        zeta: 1.0,
        theta: 0.8,
        smooth: false,
    };
    assert!(compute_indices(&ok).is_ok());

    let cases: Vec<(RegimeParams, fn(&StoppingError) -> bool)> = vec![
        (RegimeParams { q: -1.0, ..ok }, |e| matches!(e, StoppingError::BadQ(_))),
        (RegimeParams { tau: 1.5, ..ok }, |e| matches!(e, StoppingError::BadTau(_))),
        (RegimeParams { beta: 0.0, ..ok }, |e| matches!(e, StoppingError::BadBeta(_))),
        (RegimeParams { beta: 1.5, ..ok }, |e| matches!(e, StoppingError::BadBeta(_))),
        (RegimeParams { zeta: 2.0, ..ok }, |e| matches!(e, StoppingError::BadZeta(_))),
        (RegimeParams { zeta: 0.0, ..ok }, |e| matches!(e, StoppingError::BadZeta(_))),
        (RegimeParams { theta: 1.0, ..ok }, |e| {
            matches!(e, StoppingError::ThetaRange { .. })
        }),
        (RegimeParams { theta: 0.4, ..ok }, |e| {
            matches!(e, StoppingError::ThetaVsGrowth { .. })
        }),
    ];
    for (params, check) in cases {
        let err = compute_indices(&params).unwrap_err();
        assert!(check(&err), "unexpected error {err:?} for {params:?}");
    }

    // The same decay is fine when the smooth analysis applies.
    assert!(compute_indices(&RegimeParams { theta: 0.4, smooth: true, ..ok }).is_ok());

    assert!(matches!(hinge_indices(0.0, 0.75), Err(StoppingError::BadBeta(_))));
    assert!(matches!(hinge_indices(1.0, 0.5), Err(StoppingError::HingeTheta(_))));
    assert!(matches!(hinge_indices(1.0, 1.0), Err(StoppingError::HingeTheta(_))));
}
