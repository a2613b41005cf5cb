use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use critlog::bubble::{bubble_table, default_r_cut};
use critlog::solvers::{SolveKind, SolverOptions};
use critlog::sweep::{run_sweep, SweepAxis, SweepSolve};
use critlog::{Execution, ParameterSet, RadialGrid};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn classify_grid(c: &mut Criterion) {
    let base = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
    let axes = [
        SweepAxis::linspace("beta", -1.0, 3.0, 24),
        SweepAxis::linspace("lambda1", -5.0, 10.0, 16),
    ];
    let mut g = c.benchmark_group("classify_sweep_24x16");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(&base, &axes, 0.05, None, exec).unwrap())
        });
    }
    g.finish();
}

fn local_min_levels(c: &mut Criterion) {
    let base = ParameterSet::symmetric(0.0, 1.0, -1.0, -0.5, 1.0);
    let axes = [SweepAxis::linspace("beta", -0.9, -0.1, 8)];
    let solve = SweepSolve {
        kind: SolveKind::LocalMinBall,
        n: 128,
        opts: SolverOptions::default(),
    };
    let mut g = c.benchmark_group("local_min_sweep_8");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(&base, &axes, 0.05, Some(&solve), exec).unwrap())
        });
    }
    g.finish();
}

fn bubbles(c: &mut Criterion) {
    let grid = RadialGrid::new(4.0, 4096).unwrap();
    let eps: Vec<f64> = (1..=16).map(|k| 0.4 / k as f64).collect();
    let mut g = c.benchmark_group("bubble_table_16");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bubble_table(&eps, &grid, default_r_cut(4.0), exec))
        });
    }
    g.finish();
}

criterion_group!(benches, classify_grid, local_min_levels, bubbles);
criterion_main!(benches);
