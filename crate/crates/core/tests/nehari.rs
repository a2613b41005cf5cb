use std::sync::Arc;

use proptest::prelude::*;

use critlog::functionals::{energy_j, energy_l, nehari_residuals};
use critlog::nehari::{project_single, project_to_nehari, Fiber};
use critlog::params::beta1_from_mu;
use critlog::{Error, ParameterSet, RadialField, RadialGrid, StatePair};

fn grid() -> Arc<RadialGrid> {
    RadialGrid::new(1.0, 128).unwrap()
}

fn field(g: &Arc<RadialGrid>, c: &[(f64, f64, f64)]) -> RadialField {
    RadialField::from_fn(g, |r| {
        (1.0 - r * r)
            * c.iter()
                .map(|(a, m, w)| a * (-((r - m) / w).powi(2)).exp())
                .sum::<f64>()
    })
}

fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.05..3.0f64, 0.0..0.9f64, 0.1..0.6f64), 1..4)
}

/// Σ₁ for both components and 0 < β < β₁.
fn weak_coupling() -> impl Strategy<Value = ParameterSet> {
    (
        -10.0..10.0f64,
        -10.0..10.0f64,
        0.2..4.0f64,
        0.2..4.0f64,
        0.1..3.0f64,
        0.1..3.0f64,
        0.01..0.99f64,
    )
        .prop_map(
            |(lambda1, lambda2, mu1, mu2, theta1, theta2, f)| ParameterSet {
                lambda1,
                lambda2,
                mu1,
                mu2,
                theta1,
                theta2,
                beta: f * beta1_from_mu(mu1, mu2),
                radius: 1.0,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobian_is_an_m_matrix_along_newton(p in weak_coupling(), cu in bumps(), cv in bumps()) {
        let g = grid();
        let s = StatePair::new(field(&g, &cu), field(&g, &cv)).unwrap();
        let proj = project_to_nehari(&s, &p, 1e-10).unwrap();
        let fiber = Fiber::of(&s);
        for step in &proj.trace {
            let j = fiber.jacobian(&p, step.a, step.b);
            prop_assert!(j[0][0] > 0.0 && j[1][1] > 0.0);
            prop_assert!(j[0][1] >= 0.0 && j[1][0] >= 0.0);
            prop_assert!(j[0][0] * j[1][1] - j[0][1] * j[1][0] > 0.0);
        }
        let (g1, g2) = nehari_residuals(&proj.projected, &p).unwrap();
        prop_assert!(g1.abs() <= 1e-10 && g2.abs() <= 1e-10);
    }

    #[test]
    fn projection_is_stationary_on_the_fiber(p in weak_coupling(), cu in bumps(), cv in bumps()) {
        let g = grid();
        let s = StatePair::new(field(&g, &cu), field(&g, &cv)).unwrap();
        let proj = project_to_nehari(&s, &p, 1e-10).unwrap();
        let f = |t1: f64, t2: f64| energy_l(&s.scaled(t1, t2), &p).unwrap().total;
        let (t1, t2) = (proj.t1, proj.t2);
        let d = |g: &dyn Fn(f64) -> f64, h: f64| (8.0 * (g(h) - g(-h)) - (g(2.0 * h) - g(-2.0 * h))) / (12.0 * h);
        // derivatives in log tᵢ; zero exactly when tᵢ is critical
        let h = 1e-3;
        let d1 = d(&|x: f64| f(t1 * x.exp(), t2), h);
        let d2 = d(&|x: f64| f(t1, t2 * x.exp()), h);
        let level = f(t1, t2);
        prop_assert!(d1.hypot(d2) <= 1e-8 * level.abs(), "{d1} {d2} level {level}");
    }

    #[test]
    fn single_fiber_rises_then_falls(
        c in bumps(), lambda in -10.0..10.0f64, mu in 0.2..4.0f64, theta in 0.1..3.0f64
    ) {
        let g = grid();
        let u = field(&g, &c);
        let res = project_single(&u, lambda, mu, theta, 1e-10).unwrap();
        let phi = |s: f64| energy_j(&u.scaled(s), lambda, mu, theta);
        let t = res.t;
        let mut prev = phi(t / 4.0);
        let k = 400;
        for i in 1..=k {
            let s = t / 4.0 * 16f64.powf(i as f64 / k as f64);
            let cur = phi(s);
            let tol = 1e-12 * prev.abs().max(cur.abs()).max(1.0);
            if s <= t * (1.0 - 1e-6) {
                prop_assert!(cur >= prev - tol, "not rising at s = {s}, t = {t}");
            } else if s / 16f64.powf(1.0 / k as f64) >= t * (1.0 + 1e-6) {
                prop_assert!(cur <= prev + tol, "not falling at s = {s}, t = {t}");
            }
            prev = cur;
        }
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    let g = grid();
    let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
    let u = field(&g, &[(1.0, 0.0, 0.3)]);
    let semi = StatePair::new(u.clone(), RadialField::zeros(&g)).unwrap();
    assert!(matches!(
        project_to_nehari(&semi, &p, 1e-10),
        Err(Error::Precondition(_))
    ));
    let neg = StatePair::new(u.scaled(-1.0), u.clone()).unwrap();
    assert!(matches!(
        project_to_nehari(&neg, &p, 1e-10),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        project_single(&RadialField::zeros(&g), 0.0, 1.0, 1.0, 1e-10),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn unattainable_tolerance_is_a_numeric_error() {
    let g = grid();
    let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
    let u = field(&g, &[(1.0, 0.0, 0.3)]);
    let s = StatePair::new(u.clone(), u.scaled(2.0)).unwrap();
    assert!(matches!(
        project_to_nehari(&s, &p, 1e-300),
        Err(Error::Numeric(_))
    ));
}

#[test]
fn outside_sigma1_multiplicity_is_flagged() {
    let g = grid();
    let u = field(&g, &[(1.0, 0.0, 0.3)]);
    let s = StatePair::new(u.clone(), u.clone()).unwrap();
    let inside =
        project_to_nehari(&s, &ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0), 1e-10).unwrap();
    assert!(!inside.multiplicity_unknown);
    let outside = project_to_nehari(
        &s,
        &ParameterSet::symmetric(0.0, 1.0, -0.5, -0.2, 1.0),
        1e-10,
    )
    .unwrap();
    assert!(outside.multiplicity_unknown);
}
