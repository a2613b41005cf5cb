use approx::assert_relative_eq;
use proptest::prelude::*;

use critlog::nonexistence::{
    falsification_battery, theorem16_condition, theorem16_margin, theorem17_condition, verdicts,
    NonexistenceTheorem,
};
use critlog::params::ball_geometry;
use critlog::solvers::SolverOptions;
use critlog::{Error, Execution, ParameterSet, RadialGrid};

fn opposite(
    mu1: f64,
    mu2: f64,
    beta: f64,
    theta1: f64,
    theta2: f64,
    lambda1: f64,
    lambda2: f64,
) -> ParameterSet {
    ParameterSet {
        lambda1,
        lambda2,
        mu1,
        mu2,
        theta1,
        theta2,
        beta,
        radius: 1.0,
    }
}

#[test]
fn t16_examples() {
    let dc = ball_geometry(1.0).unwrap();
    let l1 = dc.lambda1_omega;
    let v = theorem16_condition(l1, 1.0, -1.0, &dc).unwrap();
    assert_relative_eq!(v.margin, 1.0, max_relative = 1e-12);
    assert!(v.condition_holds);
    assert_eq!(v.theorem, NonexistenceTheorem::T16);
    let e = std::f64::consts::E;
    let v = theorem16_condition(0.0, 1.0, -e, &dc).unwrap();
    assert_relative_eq!(v.margin, -l1, max_relative = 1e-12);
    assert!(!v.condition_holds);
    // the weak inequality: margin exactly zero still holds
    let v = theorem16_condition(l1 - 1.0, 1.0, -1.0, &dc).unwrap();
    assert!(v.margin.abs() < 1e-12);
}

#[test]
fn t17_examples() {
    let v = theorem17_condition(&opposite(1.0, 3.0, 2.0, 1.0, -1.0, 0.5, 0.5)).unwrap();
    assert_relative_eq!(v.margin, 2.0, max_relative = 1e-12);
    assert!(v.condition_holds && !v.mirrored);
    let v = theorem17_condition(&opposite(1.0, 3.0, 2.0, 1.0, -1.0, 3.0, 0.0)).unwrap();
    assert_relative_eq!(v.margin, -1.0, max_relative = 1e-12);
    assert!(!v.condition_holds);
    // strict: margin 0 fails
    let v = theorem17_condition(&opposite(1.0, 3.0, 2.0, 1.0, -1.0, 2.0, 0.0)).unwrap();
    assert!(v.margin.abs() < 1e-12 && !v.condition_holds);
}

#[test]
fn t17_needs_an_ordering() {
    for p in [
        opposite(1.0, 3.0, 4.0, 1.0, -1.0, 0.0, 0.0),
        opposite(1.0, 3.0, 2.0, -1.0, -1.0, 0.0, 0.0),
        opposite(1.0, 3.0, 2.0, -1.0, 1.0, 0.0, 0.0),
    ] {
        assert!(matches!(
            theorem17_condition(&p),
            Err(Error::Precondition(_))
        ));
    }
}

#[test]
fn verdicts_gate_t16_on_positive_coupling() {
    let dc = ball_geometry(1.0).unwrap();
    let l1 = dc.lambda1_omega;
    let pos = ParameterSet::symmetric(l1, 1.0, -1.0, 0.1, 1.0);
    let v = verdicts(&pos, &dc).unwrap();
    assert_eq!(v.len(), 2);
    assert!(v.iter().all(|v| v.condition_holds));
    let neg = ParameterSet { beta: -0.1, ..pos };
    assert!(verdicts(&neg, &dc)
        .unwrap()
        .iter()
        .all(|v| !v.condition_holds));
    let sigma1 = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
    assert!(verdicts(&sigma1, &dc).unwrap().is_empty());
}

#[test]
fn zero_restarts_leave_the_verdict_alone() {
    let g = RadialGrid::new(1.0, 64).unwrap();
    let dc = critlog::DomainConstants::for_grid(&g).unwrap();
    let p = ParameterSet::symmetric(dc.lambda1_omega, 1.0, -1.0, 0.1, 1.0);
    let r = falsification_battery(
        &p,
        &g,
        0,
        11,
        &SolverOptions::default(),
        Execution::Sequential,
    )
    .unwrap();
    assert!(r.runs.is_empty() && r.hits.is_empty());
    assert_eq!(r.summary.positive_hits, 0);
    let bare = verdicts(&p, &dc).unwrap();
    for (a, b) in r.verdicts.iter().zip(&bare) {
        assert_eq!(
            (a.theorem, a.condition_holds, a.margin),
            (b.theorem, b.condition_holds, b.margin)
        );
        assert_eq!(a.probe_summary.unwrap().restarts, 0);
    }
    assert!(!r.control);
}

#[test]
fn battery_is_independent_of_execution_mode() {
    let g = RadialGrid::new(1.0, 64).unwrap();
    let p = ParameterSet::symmetric(0.0, 1.0, -1.0, -0.5, 1.0);
    let opts = SolverOptions {
        max_iter: 300,
        ..SolverOptions::default()
    };
    let a = falsification_battery(&p, &g, 4, 3, &opts, Execution::Sequential).unwrap();
    let b = falsification_battery(&p, &g, 4, 3, &opts, Execution::Parallel).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert!(a.control);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn t16_margin_monotone(lambda in -20.0..40.0f64, dl in 1e-3..5.0f64, mu in 0.05..10.0f64, dm in 1e-3..5.0f64, theta in -5.0..-0.05f64) {
        let dc = ball_geometry(1.0).unwrap();
        let m = theorem16_margin(lambda, mu, theta, &dc);
        prop_assert!(theorem16_margin(lambda + dl, mu, theta, &dc) > m);
        // −θ log μ grows with μ when θ < 0
        prop_assert!(theorem16_margin(lambda, mu + dm, theta, &dc) >= m);
    }

    #[test]
    fn t16_oracle_agrees(lambda in -20.0..40.0f64, mu in 0.05..10.0f64, theta in -5.0..-0.05f64) {
        let dc = ball_geometry(1.0).unwrap();
        let v = theorem16_condition(lambda, mu, theta, &dc).unwrap();
        prop_assert!((v.oracle_margin - v.margin).abs() <= 1e-9 * v.margin.abs().max(1.0));
    }

    #[test]
    fn t17_mirror_symmetry(
        mu1 in 0.1..3.0f64, gap in 0.2..3.0f64, f in 0.05..0.95f64,
        theta1 in 0.1..3.0f64, theta2 in -3.0..-0.1f64, lambda1 in -5.0..5.0f64, lambda2 in -5.0..5.0f64
    ) {
        let mu2 = mu1 + gap;
        let p = opposite(mu1, mu2, mu1 + f * gap, theta1, theta2, lambda1, lambda2);
        let a = theorem17_condition(&p).unwrap();
        let b = theorem17_condition(&p.swapped()).unwrap();
        prop_assert!(!a.mirrored && b.mirrored);
        prop_assert_eq!(a.margin, b.margin);
        prop_assert_eq!(a.condition_holds, b.condition_holds);
        prop_assert!((a.oracle_margin - a.margin).abs() <= 1e-8 * a.margin.abs().max(1.0));
    }
}
