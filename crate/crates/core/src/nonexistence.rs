//! Nonexistence conditions through the minima of the auxiliaries
//! g(t) = μt + θ log t + λ and g(s,t) = (μ₂−β)s − (μ₁−β)t + θ₂ log s − θ₁ log t,
//! and a randomized solver battery that looks for positive states anyway.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::fmt17;
use crate::functionals::{energy_l, StatePair};
use crate::par::{self, Execution};
use crate::params::{golden_max, DomainConstants, ParameterSet};
use crate::radial::RadialGrid;
use crate::solvers::{
    default_local_init, minimize_local_ball, mountain_pass, random_smooth_pair,
    residual_certificate, rho_delta, CertificateReport, SolveResult, SolverOptions,
};

pub const T16_ORACLE_TOL: f64 = 1e-9;
pub const T17_ORACLE_TOL: f64 = 1e-8;
/// Interior minimum above which a probe state counts as positive.
pub const POSITIVE_THRESHOLD: f64 = 1e-8;
/// Sweep cap for the mountain-pass restarts of the battery.
pub const BATTERY_MP_SWEEPS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NonexistenceTheorem {
    T16,
    T17,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbeSummary {
    pub restarts: usize,
    pub positive_hits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonexistenceVerdict {
    pub theorem: NonexistenceTheorem,
    pub condition_holds: bool,
    pub margin: f64,
    /// Grid-search minimum of the auxiliary, shifted like the margin.
    pub oracle_margin: f64,
    /// Evaluated on the swapped components (μ₂ < β < μ₁).
    pub mirrored: bool,
    pub probe_summary: Option<ProbeSummary>,
}

pub fn theorem16_margin(lambda: f64, mu: f64, theta: f64, dc: &DomainConstants) -> f64 {
    -theta + theta * (-theta).ln() - theta * mu.ln() + lambda - dc.lambda1_omega
}

/// Left side of the opposite-sign condition in the μ₁ < β < μ₂ orientation.
pub fn theorem17_expression(p: &ParameterSet) -> f64 {
    -p.theta1 * (p.theta1 / (p.beta - p.mu1)).ln()
        + p.theta2 * (p.theta2 / (p.beta - p.mu2)).ln()
        + p.theta1
        - p.theta2
        + p.lambda2
        - p.lambda1
}

/// Minimum of a convex function of log t: coarse log grid, then golden.
fn log_grid_min(f: impl Fn(f64) -> f64) -> f64 {
    let h = |x: f64| -f(x.exp());
    let (lo, hi, n) = (-40.0f64, 40.0f64, 1601);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..n {
        let x = lo + step * k as f64;
        let v = h(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    let x = golden_max(h, best.1 - step, best.1 + step, 1e-12);
    -h(x).max(best.0)
}

pub fn theorem16_condition(
    lambda: f64,
    mu: f64,
    theta: f64,
    dc: &DomainConstants,
) -> Result<NonexistenceVerdict> {
    if !(theta < 0.0) {
        return precondition(format!("theta must be negative, got {theta}"));
    }
    if !(mu > 0.0) {
        return precondition(format!("mu must be positive, got {mu}"));
    }
    let margin = theorem16_margin(lambda, mu, theta, dc);
    let oracle_margin = log_grid_min(|t| mu * t + theta * t.ln() + lambda) - dc.lambda1_omega;
    if (oracle_margin - margin).abs() > T16_ORACLE_TOL * margin.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "g(t) grid minimum {oracle_margin} disagrees with closed form {margin}"
        )));
    }
    Ok(NonexistenceVerdict {
        theorem: NonexistenceTheorem::T16,
        condition_holds: margin >= 0.0,
        margin,
        oracle_margin,
        mirrored: false,
        probe_summary: None,
    })
}

fn forward_order(p: &ParameterSet) -> bool {
    p.mu1 < p.mu2 && p.mu1 < p.beta && p.beta < p.mu2 && p.theta2 < 0.0 && p.theta1 > 0.0
}

/// 2-D log grid over (s, t), then alternating golden refinement.
fn g2_grid_min(p: &ParameterSet) -> f64 {
    let g = |s: f64, t: f64| {
        (p.mu2 - p.beta) * s - (p.mu1 - p.beta) * t + p.theta2 * s.ln() - p.theta1 * t.ln()
    };
    let (lo, hi, n) = (-30.0f64, 30.0f64, 301);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (f64::INFINITY, lo, lo);
    for i in 0..n {
        let x = lo + step * i as f64;
        for j in 0..n {
            let y = lo + step * j as f64;
            let v = g(x.exp(), y.exp());
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    let (mut x, mut y) = (best.1, best.2);
    for _ in 0..4 {
        x = golden_max(|a| -g(a.exp(), y.exp()), x - step, x + step, 1e-12);
        y = golden_max(|b| -g(x.exp(), b.exp()), y - step, y + step, 1e-12);
    }
    g(x.exp(), y.exp()).min(best.0)
}

/// Opposite-sign nonexistence. Accepts either orientation; the mirrored
/// one is evaluated on the swapped components, where the inequality flips.
pub fn theorem17_condition(p: &ParameterSet) -> Result<NonexistenceVerdict> {
    let (q, mirrored) = if forward_order(p) {
        (*p, false)
    } else if forward_order(&p.swapped()) {
        (p.swapped(), true)
    } else {
        return precondition(
            "needs mu1 < beta < mu2 with theta2 < 0 < theta1, or the mirrored ordering",
        );
    };
    let margin = theorem17_expression(&q);
    let oracle_margin = g2_grid_min(&q) + q.lambda2 - q.lambda1;
    if (oracle_margin - margin).abs() > T17_ORACLE_TOL * margin.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "g(s,t) grid minimum {oracle_margin} disagrees with closed form {margin}"
        )));
    }
    Ok(NonexistenceVerdict {
        theorem: NonexistenceTheorem::T17,
        condition_holds: margin > 0.0,
        margin,
        oracle_margin,
        mirrored,
        probe_summary: None,
    })
}

/// Every nonexistence verdict whose sign/order hypotheses apply to p.
/// T16 verdicts are per component and need β > 0 on top.
pub fn verdicts(p: &ParameterSet, dc: &DomainConstants) -> Result<Vec<NonexistenceVerdict>> {
    let mut out = Vec::new();
    for i in 0..2 {
        let c = p.component(i);
        if c.theta < 0.0 {
            let mut v = theorem16_condition(c.lambda, c.mu, c.theta, dc)?;
            v.condition_holds &= p.beta > 0.0;
            out.push(v);
        }
    }
    if let Ok(v) = theorem17_condition(p) {
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    LocalBall,
    MountainPass,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRun {
    pub index: usize,
    pub seed: u64,
    pub pipeline: Pipeline,
    pub converged: bool,
    pub energy: Option<f64>,
    pub u_min_interior: Option<f64>,
    pub v_min_interior: Option<f64>,
    pub grid_collapse: bool,
    pub positive: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeHit {
    pub index: usize,
    pub seed: u64,
    pub energy: f64,
    pub certificate: CertificateReport,
    #[serde(skip)]
    pub state: StatePair,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub params: ParameterSet,
    pub base_seed: u64,
    pub verdicts: Vec<NonexistenceVerdict>,
    /// No verdict holds: the run is a control group.
    pub control: bool,
    pub summary: ProbeSummary,
    pub runs: Vec<ProbeRun>,
    pub hits: Vec<ProbeHit>,
}

impl BatteryReport {
    pub fn write_hits_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,seed,energy,strong_residual_u,strong_residual_v,u_min_interior,v_min_interior,nehari_g1,nehari_g2,r,u,v")?;
        for h in &self.hits {
            let c = &h.certificate;
            let head = format!(
                "{},{},{},{},{},{},{},{},{}",
                h.index,
                h.seed,
                fmt17(h.energy),
                fmt17(c.strong_residual_u),
                fmt17(c.strong_residual_v),
                fmt17(c.u_min_interior),
                c.v_min_interior.map(fmt17).unwrap_or_default(),
                fmt17(c.nehari_residuals.0),
                fmt17(c.nehari_residuals.1),
            );
            let nodes = h.state.grid().nodes();
            for ((r, a), b) in nodes.iter().zip(h.state.u.values()).zip(h.state.v.values()) {
                writeln!(w, "{head},{},{},{}", fmt17(*r), fmt17(*a), fmt17(*b))?;
            }
        }
        Ok(())
    }
}

fn is_positive(r: &SolveResult) -> bool {
    r.converged
        && !r.grid_collapse
        && r.positivity.u_min_interior > POSITIVE_THRESHOLD
        && r.positivity
            .v_min_interior
            .is_some_and(|v| v > POSITIVE_THRESHOLD)
}

/// Ball radius for the local pipeline: the A-region radius when there is
/// one, otherwise the Sobolev radius S/√max μ.
fn probe_radius(p: &ParameterSet, dc: &DomainConstants) -> f64 {
    rho_delta(p, dc)
        .map(|rd| rd.rho)
        .unwrap_or(dc.sobolev_s / p.max_mu().sqrt())
}

fn probe_once(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    dc: &DomainConstants,
    index: usize,
    seed: u64,
    opts: &SolverOptions,
) -> (ProbeRun, Option<ProbeHit>) {
    let pipeline = if index % 2 == 0 {
        Pipeline::LocalBall
    } else {
        Pipeline::MountainPass
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = probe_radius(p, dc);
    let mut attempt = || -> Result<SolveResult> {
        let dir = random_smooth_pair(grid, &mut rng, true);
        let frac: f64 = rng.gen_range(0.05..0.9);
        let split: f64 = rng.gen_range(0.1..0.9);
        let scale = |s: &StatePair, total: f64| {
            s.scaled(
                split.sqrt() * total / s.u.h1_norm(),
                (1.0 - split).sqrt() * total / s.v.h1_norm(),
            )
        };
        match pipeline {
            Pipeline::LocalBall => minimize_local_ball(p, &scale(&dir, frac * rho), rho, opts),
            Pipeline::MountainPass => {
                let end_a = match default_local_init(p, grid, 0.5 * rho) {
                    Ok(init) if p.theta_negative_both() => {
                        minimize_local_ball(p, &init, rho, opts)?.state
                    }
                    _ => StatePair::zeros(grid),
                };
                let ea = energy_l(&end_a, p)?.total;
                let mut t = rho;
                let mut end_b = scale(&dir, t);
                while energy_l(&end_b, p)?.total >= ea {
                    t *= 2.0;
                    if t > 1e8 * rho {
                        return Err(Error::Numeric(
                            "no far endpoint below the start energy".into(),
                        ));
                    }
                    end_b = scale(&dir, t);
                }
                let mp_opts = SolverOptions {
                    max_iter: opts.max_iter.min(BATTERY_MP_SWEEPS),
                    ..*opts
                };
                Ok(mountain_pass(p, &end_a, &end_b, 12, &mp_opts)?.top)
            }
        }
    };
    match attempt() {
        Ok(r) => {
            let positive = is_positive(&r);
            let run = ProbeRun {
                index,
                seed,
                pipeline,
                converged: r.converged,
                energy: Some(r.energy),
                u_min_interior: Some(r.positivity.u_min_interior),
                v_min_interior: r.positivity.v_min_interior,
                grid_collapse: r.grid_collapse,
                positive,
                error: None,
            };
            let hit = positive.then(|| {
                residual_certificate(&r, p)
                    .ok()
                    .map(|certificate| ProbeHit {
                        index,
                        seed,
                        energy: r.energy,
                        certificate,
                        state: r.state.clone(),
                    })
            });
            (run, hit.flatten())
        }
        Err(e) => (
            ProbeRun {
                index,
                seed,
                pipeline,
                converged: false,
                energy: None,
                u_min_interior: None,
                v_min_interior: None,
                grid_collapse: false,
                positive: false,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Randomized local-ball and mountain-pass restarts, alternating, with
/// seeds `base_seed + k`. Solver failures are recorded per run.
pub fn falsification_battery(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    restarts: usize,
    base_seed: u64,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<BatteryReport> {
    let dc = DomainConstants::for_grid(grid)?;
    let verdicts = verdicts(p, &dc)?;
    let control = !verdicts.iter().any(|v| v.condition_holds);
    let idx: Vec<usize> = (0..restarts).collect();
    let out = par::map(exec, &idx, |&k| {
        probe_once(p, grid, &dc, k, base_seed.wrapping_add(k as u64), opts)
    });
    let mut runs = Vec::with_capacity(restarts);
    let mut hits = Vec::new();
    for (run, hit) in out {
        runs.push(run);
        hits.extend(hit);
    }
    let positive_hits = runs.iter().filter(|r| r.positive).count();
    let summary = ProbeSummary {
        restarts,
        positive_hits,
    };
    let verdicts = verdicts
        .into_iter()
        .map(|v| NonexistenceVerdict {
            probe_summary: Some(summary),
            ..v
        })
        .collect();
    Ok(BatteryReport {
        params: *p,
        base_seed,
        verdicts,
        control,
        summary,
        runs,
        hits,
    })
}
