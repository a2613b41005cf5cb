use std::sync::Arc;

use proptest::prelude::*;

use critlog::functionals::{derivative, energy_l, grad_l, moments, nehari_residuals};
use critlog::radial::s2_log_s2;
use critlog::solvers::{half_identity, quarter_identity};
use critlog::{ParameterSet, RadialField, RadialGrid, StatePair};

const N: usize = 96;

fn grid() -> Arc<RadialGrid> {
    RadialGrid::new(1.0, N).unwrap()
}

fn field(g: &Arc<RadialGrid>, c: &[(f64, f64, f64)]) -> RadialField {
    RadialField::from_fn(g, |r| {
        (1.0 - r * r)
            * c.iter()
                .map(|(a, m, w)| a * (-((r - m) / w).powi(2)).exp())
                .sum::<f64>()
    })
}

/// Positive field bounded below by floor·(1 − r²), so that finite
/// differences never straddle the log singularity at zero.
fn positive_field(g: &Arc<RadialGrid>, floor: f64, c: &[(f64, f64, f64)]) -> RadialField {
    field(g, c).axpy(floor, &RadialField::from_fn(g, |r| 1.0 - r * r))
}

fn bumps(lo: f64) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((lo..3.0f64, 0.0..0.9f64, 0.1..0.6f64), 1..4)
}

fn params() -> impl Strategy<Value = ParameterSet> {
    let theta = prop_oneof![-3.0..-0.1f64, 0.1..3.0f64];
    (
        -10.0..10.0f64,
        -10.0..10.0f64,
        0.2..4.0f64,
        0.2..4.0f64,
        theta.clone(),
        theta,
        -2.0..2.0f64,
    )
        .prop_map(
            |(lambda1, lambda2, mu1, mu2, theta1, theta2, beta)| ParameterSet {
                lambda1,
                lambda2,
                mu1,
                mu2,
                theta1,
                theta2,
                beta,
                radius: 1.0,
            },
        )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_matches_central_differences(
        p in params(), fu in 0.2..2.0f64, fv in 0.2..2.0f64,
        cu in bumps(0.1), cv in bumps(0.1), du in bumps(-3.0), dv in bumps(-3.0)
    ) {
        let g = grid();
        let s = StatePair::new(positive_field(&g, fu, &cu), positive_field(&g, fv, &cv)).unwrap();
        let dir = StatePair::new(field(&g, &du), field(&g, &dv)).unwrap();
        let h = 1e-5;
        let e = |t: f64| energy_l(&s.axpy(t, &dir), &p).unwrap().total;
        // fourth-order stencil keeps truncation far below the tolerance
        let fd = (8.0 * (e(h) - e(-h)) - (e(2.0 * h) - e(-2.0 * h))) / (12.0 * h);
        let weak = derivative(&s, &p, &dir).unwrap();
        let riesz = grad_l(&s, &p).unwrap().h_inner(&dir);
        let scale = weak.abs().max(dir.h_norm() * grad_l(&s, &p).unwrap().h_norm());
        prop_assert!((fd - weak).abs() <= 1e-6 * scale, "fd {fd} weak {weak}");
        prop_assert!((riesz - weak).abs() <= 1e-9 * scale, "riesz {riesz} weak {weak}");
    }

    #[test]
    fn energy_identities(p in params(), cu in bumps(-3.0), cv in bumps(-3.0)) {
        let g = grid();
        let s = StatePair::new(field(&g, &cu), field(&g, &cv)).unwrap();
        let (l, r) = half_identity(&s, &p).unwrap();
        let scale = energy_l(&s, &p).unwrap().gradient_u + energy_l(&s, &p).unwrap().gradient_v;
        prop_assert!((l - r).abs() <= 1e-11 * l.abs().max(r.abs()).max(scale));
        let (l, r) = quarter_identity(&s, &p).unwrap().unwrap();
        prop_assert!((l - r).abs() <= 1e-11 * l.abs().max(r.abs()).max(scale));
    }

    #[test]
    fn nehari_residuals_are_directional_derivatives(p in params(), cu in bumps(0.1), cv in bumps(0.1)) {
        let g = grid();
        let s = StatePair::new(field(&g, &cu), field(&g, &cv)).unwrap();
        let zero = RadialField::zeros(&g);
        let (n1, n2) = nehari_residuals(&s, &p).unwrap();
        let d1 = derivative(&s, &p, &StatePair { u: s.u.clone(), v: zero.clone() }).unwrap();
        let d2 = derivative(&s, &p, &StatePair { u: zero, v: s.v.clone() }).unwrap();
        let m = moments(&s.u).grad2 + moments(&s.v).grad2;
        prop_assert!((n1 - d1).abs() <= 1e-11 * m);
        prop_assert!((n2 - d2).abs() <= 1e-11 * m);
    }

    #[test]
    fn only_the_dirichlet_term_sees_the_negative_part(
        p in params(), cu in bumps(-3.0), cv in bumps(0.1), junk in prop::collection::vec(-5.0..0.0f64, N)
    ) {
        let g = grid();
        let s = StatePair::new(field(&g, &cu), field(&g, &cv)).unwrap();
        let vals: Vec<f64> = s.u.values().iter().zip(&junk).map(|(&a, &j)| if a > 0.0 { a } else { j }).collect();
        let t = StatePair { u: RadialField::new(&g, vals).unwrap(), v: s.v.clone() };
        let (es, et) = (energy_l(&s, &p).unwrap(), energy_l(&t, &p).unwrap());
        let rest = |e: &critlog::EnergyBreakdown| {
            [e.gradient_v, e.lambda_u, e.lambda_v, e.quartic_u, e.quartic_v, e.coupling, e.log_u, e.log_v]
        };
        for (a, b) in rest(&es).iter().zip(rest(&et)) {
            prop_assert!(rel(*a, b) <= 1e-14, "{a} vs {b}");
        }
        // g − u = −(−Δ)⁻¹f(u⁺, v⁺) depends on the positive parts only
        let (gs, gt) = (grad_l(&s, &p).unwrap(), grad_l(&t, &p).unwrap());
        for ((a, b), (c, d)) in gs.u.values().iter().zip(s.u.values()).zip(gt.u.values().iter().zip(t.u.values())) {
            prop_assert!(((a - b) - (c - d)).abs() <= 1e-10 * (a - b).abs().max(1.0));
        }
        for (a, c) in gs.v.values().iter().zip(gt.v.values()) {
            prop_assert!((a - c).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn s2_log_s2_below_quartic_over_e(x in -18.42f64..18.42) {
        let s = x.exp();
        prop_assert!(s2_log_s2(s) <= s.powi(4) / std::f64::consts::E * (1.0 + 1e-15));
    }
}

#[test]
fn s2_log_s2_on_a_log_grid() {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=16000 {
        let s = 10f64.powf(-8.0 + 16.0 * k as f64 / 16000.0);
        let q = s.powi(4) / std::f64::consts::E;
        worst = worst.max((s2_log_s2(s) - q) / q);
        assert!(s2_log_s2(s) <= q * (1.0 + 1e-15), "s = {s}");
    }
    // equality at s² = e
    let s = std::f64::consts::E.sqrt();
    assert!((s2_log_s2(s) - s.powi(4) / std::f64::consts::E).abs() < 1e-14);
    assert!(worst > -1e-6);
}

#[test]
fn radius_mismatch_is_rejected() {
    let g = grid();
    let s = StatePair::zeros(&g);
    let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 2.0);
    assert!(energy_l(&s, &p).is_err());
    assert!(grad_l(&s, &p).is_err());
}
