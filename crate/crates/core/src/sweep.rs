//! Parameter sweeps: classification margins (and optionally a solve level)
//! on a 1- or 2-axis grid of parameter values.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{precondition, Result};
use crate::fmt17;
use crate::par::{self, Execution};
use crate::params::{
    a_region_margins, ball_geometry, classify_with, sigma_margins, ClassificationReport,
    ParameterSet, Region, TheoremId,
};
use crate::radial::RadialGrid;
use crate::solvers::{
    default_local_init, default_nehari_init, minimize_local_ball, minimize_on_nehari, rho_delta,
    SolveKind, SolveResult, SolverOptions,
};

pub const MAX_AXES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(key: &str, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        SweepAxis {
            key: key.to_string(),
            values,
        }
    }
}

/// Column order of the sweep CSV after the axis columns.
pub const MARGIN_COLUMNS: [&str; 15] = [
    "sigma2_1",
    "sigma3_1",
    "sigma4_1",
    "sigma2_2",
    "sigma3_2",
    "sigma4_2",
    "a1",
    "a2",
    "a3",
    "beta1",
    "beta2",
    "lambda_cap",
    "a_level",
    "rho",
    "delta",
];

pub const GATE_COLUMNS: [(&str, TheoremId); 8] = [
    (
        "least_energy_negative_coupling",
        TheoremId::LeastEnergyNegativeCoupling,
    ),
    (
        "least_energy_weak_coupling",
        TheoremId::LeastEnergyWeakCoupling,
    ),
    (
        "least_energy_strong_coupling",
        TheoremId::LeastEnergyStrongCoupling,
    ),
    ("local_minimum", TheoremId::LocalMinimum),
    ("lowest_critical_level", TheoremId::LowestCriticalLevel),
    ("mountain_pass", TheoremId::MountainPass),
    (
        "nonexistence_log_dominated",
        TheoremId::NonexistenceLogDominated,
    ),
    (
        "nonexistence_opposite_log",
        TheoremId::NonexistenceOppositeLog,
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: Vec<f64>,
    pub margins: Vec<Option<f64>>,
    pub gates: Vec<bool>,
    pub level: Option<f64>,
    pub level_converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// What to solve at each point, if anything. Points whose gates do not
/// admit the pipeline get an empty level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSolve {
    pub kind: SolveKind,
    pub n: usize,
    pub opts: SolverOptions,
}

/// Parameter sets of the sweep, lexicographic in the axis values (first
/// axis slowest). Values are sorted ascending.
pub fn sweep_points(
    base: &ParameterSet,
    axes: &[SweepAxis],
) -> Result<Vec<(Vec<f64>, ParameterSet)>> {
    if axes.len() > MAX_AXES {
        return precondition(format!("at most {MAX_AXES} sweep axes, got {}", axes.len()));
    }
    let mut points = vec![(Vec::new(), *base)];
    for axis in axes {
        let mut values = axis.values.clone();
        if values.iter().any(|v| !v.is_finite()) {
            return precondition(format!("axis {} has a non-finite value", axis.key));
        }
        values.sort_by(f64::total_cmp);
        let mut next = Vec::with_capacity(points.len() * values.len());
        for (pt, p) in &points {
            for &v in &values {
                let mut q = *p;
                q.set(&axis.key, v)?;
                let mut key = pt.clone();
                key.push(v);
                next.push((key, q));
            }
        }
        points = next;
    }
    Ok(points)
}

pub fn margin_row(report: &ClassificationReport) -> Vec<Option<f64>> {
    let p = &report.params;
    let dc = &report.domain;
    let mut out = Vec::with_capacity(MARGIN_COLUMNS.len());
    for i in 0..2 {
        let sig = sigma_margins(p.component(i), dc);
        for r in [Region::Sigma2, Region::Sigma3, Region::Sigma4] {
            out.push(sig.iter().find(|(x, _, _)| *x == r).map(|(_, m, _)| *m));
        }
    }
    out.extend(a_region_margins(p, dc));
    let th = &report.thresholds;
    out.extend([
        Some(th.beta1),
        th.beta2,
        th.lambda_cap,
        th.a_level,
        th.rho,
        th.delta,
    ]);
    out
}

fn solve_at(
    p: &ParameterSet,
    report: &ClassificationReport,
    s: &SweepSolve,
) -> Result<Option<SolveResult>> {
    let grid: Arc<RadialGrid> = RadialGrid::new(p.radius, s.n)?;
    match s.kind {
        SolveKind::LocalMinBall if report.lists(TheoremId::LocalMinimum) => {
            let rho = rho_delta(p, &report.domain)?.rho;
            let init = default_local_init(p, &grid, 0.5 * rho)?;
            minimize_local_ball(p, &init, rho, &s.opts).map(Some)
        }
        SolveKind::NehariMin if p.sigma1_both() => {
            let init = default_nehari_init(p, &grid, &s.opts)?;
            minimize_on_nehari(p, &init, &s.opts).map(Some)
        }
        _ => Ok(None),
    }
}

fn row_at(
    point: Vec<f64>,
    p: &ParameterSet,
    beta_cap_factor: f64,
    solve: Option<&SweepSolve>,
) -> SweepRow {
    let report = ball_geometry(p.radius).and_then(|dc| classify_with(p, &dc, beta_cap_factor));
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            return SweepRow {
                point,
                margins: vec![None; MARGIN_COLUMNS.len()],
                gates: vec![false; GATE_COLUMNS.len()],
                level: None,
                level_converged: None,
                error: Some(e.to_string()),
            }
        }
    };
    let margins = margin_row(&report);
    let gates = GATE_COLUMNS
        .iter()
        .map(|(_, id)| report.lists(*id))
        .collect();
    let (level, level_converged, error) = match solve.map(|s| solve_at(p, &report, s)) {
        Some(Ok(Some(r))) => (Some(r.energy), Some(r.converged), None),
        Some(Err(e)) => (None, None, Some(e.to_string())),
        _ => (None, None, None),
    };
    SweepRow {
        point,
        margins,
        gates,
        level,
        level_converged,
        error,
    }
}

/// Classifies every sweep point. Per-point failures land in the row's
/// error column; the result does not depend on `exec`.
pub fn run_sweep(
    base: &ParameterSet,
    axes: &[SweepAxis],
    beta_cap_factor: f64,
    solve: Option<&SweepSolve>,
    exec: Execution,
) -> Result<SweepTable> {
    let points = sweep_points(base, axes)?;
    let rows = par::map(exec, &points, |(pt, p)| {
        row_at(pt.clone(), p, beta_cap_factor, solve)
    });
    Ok(SweepTable {
        axes: axes.iter().map(|a| a.key.clone()).collect(),
        rows,
    })
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axes.clone();
        h.extend(MARGIN_COLUMNS.iter().map(|s| s.to_string()));
        h.extend(GATE_COLUMNS.iter().map(|(s, _)| s.to_string()));
        h.extend(["level", "level_converged", "error"].map(String::from));
        h
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        let opt = |x: &Option<f64>| x.map(fmt17).unwrap_or_default();
        for r in &self.rows {
            let mut cells: Vec<String> = r.point.iter().map(|v| fmt17(*v)).collect();
            cells.extend(r.margins.iter().map(opt));
            cells.extend(r.gates.iter().map(|g| u8::from(*g).to_string()));
            cells.push(opt(&r.level));
            cells.push(r.level_converged.map(|c| c.to_string()).unwrap_or_default());
            cells.push(
                r.error
                    .as_deref()
                    .map(|e| format!("\"{}\"", e.replace('"', "'")))
                    .unwrap_or_default(),
            );
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
