use approx::assert_relative_eq;

use critlog::bubble::{
    bubble_field, bubble_integrals, bubble_table, cutoff, talenti, uncut_integrals,
};
use critlog::params::sobolev_constant;
use critlog::solvers::sphere_minimum;
use critlog::{Execution, ParameterSet, RadialGrid};

#[test]
fn uncut_bubble_is_scale_free() {
    let at = |eps: f64| uncut_integrals(eps, &RadialGrid::new(100.0 * eps, 4096).unwrap()).unwrap();
    let base = at(0.5);
    for eps in [0.1, 0.02] {
        let b = at(eps);
        assert_relative_eq!(b.grad2, base.grad2, max_relative = 1e-3);
        assert_relative_eq!(b.l4, base.l4, max_relative = 1e-3);
    }
    // the truncated tail is O(ε²/(100ε)²) of S²
    let s2 = sobolev_constant().powi(2);
    assert_relative_eq!(base.grad2, s2, max_relative = 1e-3);
    assert_relative_eq!(base.l4, s2, max_relative = 1e-3);
}

#[test]
fn brackets_hold_once_eps_is_small() {
    let g = RadialGrid::new(1.0, 4096).unwrap();
    for r_cut in [0.5, 0.25] {
        for eps in [0.1, 0.05, 0.02, 0.01, 0.005] {
            if eps > r_cut / 4.0 {
                continue;
            }
            let b = bubble_integrals(eps, &g, r_cut).unwrap();
            assert!(
                b.bracket_lower() <= b.l2log && b.l2log <= b.bracket_upper(),
                "r_cut {r_cut}, eps {eps}"
            );
            assert_eq!(b.bracket_excess(), 0.0);
        }
    }
}

#[test]
fn field_matches_profile_and_support() {
    let g = RadialGrid::new(1.0, 256).unwrap();
    let f = bubble_field(0.1, &g, 0.25).unwrap();
    for (r, v) in g.nodes().iter().zip(f.values()) {
        assert_eq!(*v, cutoff(*r, 0.25) * talenti(0.1, *r));
        if *r >= 0.5 {
            assert_eq!(*v, 0.0);
        }
    }
    assert!(bubble_field(0.3, &g, 0.25).is_err());
    assert!(bubble_field(0.1, &g, 0.6).is_err());
}

#[test]
fn table_is_mode_independent_and_skips_bad_eps() {
    let g = RadialGrid::new(1.0, 1024).unwrap();
    let eps = [0.2, 0.05, 2.0, 0.1];
    let a = bubble_table(&eps, &g, 0.25, Execution::Sequential);
    let b = bubble_table(&eps, &g, 0.25, Execution::Parallel);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(
        a.rows.iter().map(|r| r.integrals.eps).collect::<Vec<_>>(),
        vec![0.2, 0.05, 0.1]
    );
    assert_eq!(a.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), vec![2.0]);
}

#[test]
fn energy_positive_on_a_small_sphere() {
    let g = RadialGrid::new(1.0, 128).unwrap();
    let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
    for rho in [0.05, 0.2, 0.5] {
        let m = sphere_minimum(&p, &g, rho, 64, 5).unwrap();
        assert!(m > 0.0, "rho {rho}: {m}");
    }
}
