use critlog::solvers::{SolveKind, SolverOptions};
use critlog::sweep::{run_sweep, sweep_points, SweepAxis, SweepSolve, MARGIN_COLUMNS, MAX_AXES};
use critlog::{Execution, ParameterSet};

fn base() -> ParameterSet {
    ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0)
}

fn csv(t: &critlog::sweep::SweepTable) -> String {
    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn points_are_lexicographic_and_sorted() {
    let axes = [
        SweepAxis {
            key: "beta".into(),
            values: vec![0.3, -1.0, 2.0],
        },
        SweepAxis {
            key: "lambda1".into(),
            values: vec![5.0, 1.0],
        },
    ];
    let pts = sweep_points(&base(), &axes).unwrap();
    let keys: Vec<Vec<f64>> = pts.iter().map(|(k, _)| k.clone()).collect();
    assert_eq!(
        keys,
        vec![
            vec![-1.0, 1.0],
            vec![-1.0, 5.0],
            vec![0.3, 1.0],
            vec![0.3, 5.0],
            vec![2.0, 1.0],
            vec![2.0, 5.0]
        ]
    );
    for (k, p) in &pts {
        assert_eq!((p.beta, p.lambda1), (k[0], k[1]));
        assert_eq!(p.lambda2, 0.0);
    }
}

#[test]
fn linspace_hits_both_ends() {
    let a = SweepAxis::linspace("beta", -1.0, 3.0, 9);
    assert_eq!(a.values.len(), 9);
    assert_eq!((a.values[0], a.values[8]), (-1.0, 3.0));
    assert_eq!(a.values[4], 1.0);
}

#[test]
fn empty_axes_give_the_base_point() {
    let t = run_sweep(&base(), &[], 0.05, None, Execution::Sequential).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.rows[0].point.is_empty());
    assert_eq!(csv(&t).lines().count(), 2);
}

#[test]
fn too_many_or_unknown_axes_fail() {
    let axis = |k: &str| SweepAxis {
        key: k.into(),
        values: vec![1.0],
    };
    let three: Vec<SweepAxis> = ["beta", "mu1", "mu2"].iter().map(|k| axis(k)).collect();
    assert_eq!(three.len(), MAX_AXES + 1);
    assert!(sweep_points(&base(), &three).is_err());
    assert!(sweep_points(&base(), &[axis("gamma")]).is_err());
    assert!(sweep_points(
        &base(),
        &[SweepAxis {
            key: "beta".into(),
            values: vec![f64::NAN]
        }]
    )
    .is_err());
}

#[test]
fn invalid_points_land_in_the_error_column() {
    let axes = [SweepAxis {
        key: "mu1".into(),
        values: vec![-1.0, 1.0],
    }];
    let t = run_sweep(&base(), &axes, 0.05, None, Execution::Sequential).unwrap();
    assert!(t.rows[0].error.is_some());
    assert!(t.rows[0].margins.iter().all(Option::is_none));
    assert!(t.rows[1].error.is_none());
    assert_eq!(t.rows[1].margins.len(), MARGIN_COLUMNS.len());
}

#[test]
fn classification_sweep_is_mode_independent() {
    let axes = [
        SweepAxis::linspace("beta", -2.0, 4.0, 13),
        SweepAxis::linspace("theta1", -3.0, 2.0, 11),
    ];
    let a = run_sweep(&base(), &axes, 0.05, None, Execution::Sequential).unwrap();
    let b = run_sweep(&base(), &axes, 0.05, None, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a.rows.len(), 13 * 11);
}

#[test]
fn solving_sweep_is_mode_independent() {
    let p = ParameterSet::symmetric(0.0, 1.0, -1.0, -0.5, 1.0);
    let axes = [SweepAxis::linspace("beta", -0.8, -0.2, 4)];
    let solve = SweepSolve {
        kind: SolveKind::LocalMinBall,
        n: 64,
        opts: SolverOptions::default(),
    };
    let a = run_sweep(&p, &axes, 0.05, Some(&solve), Execution::Sequential).unwrap();
    let b = run_sweep(&p, &axes, 0.05, Some(&solve), Execution::Parallel).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert!(a.rows.iter().all(|r| r.level.is_some()));
}
