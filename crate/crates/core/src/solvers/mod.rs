//! Local-ball, Nehari and mountain-pass pipelines, system and single
//! equation.
//!
//! All descents are Sobolev gradient steps x ← P(x − α g) with g the
//! H₀¹ Riesz gradient, Barzilai–Borwein trial steps and backtracking.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::functionals::{
    derivative, energy_l, grad_l, moments, nehari_residuals, strong_residuals, EnergyBreakdown,
    StatePair,
};
use crate::nehari::{project_single, project_to_nehari, q_certificate};
use crate::params::{
    a_region_margins, epsilon_shift_search, sigma_margins, Component, DomainConstants,
    ParameterSet, Region,
};
use crate::radial::{half_width_cells, principal_eigenpair, RadialField, RadialGrid};

mod mountain;

pub use mountain::{
    default_mountain_endpoints, mountain_pass, MountainPassResult, PathPeak, PathState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveKind {
    LocalMinBall,
    NehariMin,
    MountainPass,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleMode {
    LocalMin,
    NehariMin,
    MountainPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Positivity {
    pub u_min_interior: f64,
    pub v_min_interior: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub classification: SolveKind,
    pub state: StatePair,
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    /// ‖𝓛′‖_{H⁻¹} relative to ‖state‖_𝓗.
    pub gradient_norm: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub positivity: Positivity,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub notes: Vec<String>,
    /// Some component peaks with a half-width under `MIN_RESOLVED_CELLS`;
    /// the discrete energy is then not a trustworthy upper bound.
    pub grid_collapse: bool,
}

/// Profiles narrower than this many cells are treated as grid artifacts.
pub const MIN_RESOLVED_CELLS: f64 = 4.0;

impl SolveResult {
    pub fn write_trace_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::fmt17;
        writeln!(w, "iteration,energy,gradient_norm,step")?;
        for r in &self.trace {
            writeln!(
                w,
                "{},{},{},{}",
                r.iteration,
                fmt17(r.energy),
                fmt17(r.gradient_norm),
                fmt17(r.step)
            )?;
        }
        Ok(())
    }

    pub fn write_fields_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::fmt17;
        writeln!(w, "r,u,v")?;
        let nodes = self.state.grid().nodes();
        for ((r, a), b) in nodes
            .iter()
            .zip(self.state.u.values())
            .zip(self.state.v.values())
        {
            writeln!(w, "{},{},{}", fmt17(*r), fmt17(*a), fmt17(*b))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub projection_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 20000,
            projection_tol: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Relative slack for energy comparisons: round-off of the summed terms.
pub(crate) fn energy_slack(e: &EnergyBreakdown) -> f64 {
    let scale = e.gradient_u.abs()
        + e.gradient_v.abs()
        + e.lambda_u.abs()
        + e.lambda_v.abs()
        + e.quartic_u.abs()
        + e.quartic_v.abs()
        + e.coupling.abs()
        + e.log_u.abs()
        + e.log_v.abs();
    1e-14 * scale
}

pub(crate) fn relative_gradient(g: &StatePair, x: &StatePair) -> f64 {
    let xn = x.h_norm();
    if xn == 0.0 {
        g.h_norm()
    } else {
        g.h_norm() / xn
    }
}

/// Converged states must also pass the strong-form residual check.
pub(crate) fn strong_ok(x: &StatePair, p: &ParameterSet, tol: f64) -> Result<bool> {
    let (a, b) = crate::functionals::strong_residuals(x, p)?;
    Ok(a.max(b) <= 10.0 * tol)
}

struct Descent {
    x: StatePair,
    e: EnergyBreakdown,
    grad_rel: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRow>,
    note: Option<String>,
}

/// Projected Sobolev gradient descent with monotone backtracking.
fn descend(
    x0: StatePair,
    p: &ParameterSet,
    opts: &SolverOptions,
    project: &dyn Fn(StatePair) -> Result<StatePair>,
) -> Result<Descent> {
    let mut x = project(x0)?;
    let mut e = energy_l(&x, p)?;
    let mut g = grad_l(&x, p)?;
    let mut alpha = 1.0f64;
    let mut prev: Option<(StatePair, StatePair)> = None;
    let mut trace = Vec::new();
    let mut note = None;
    let mut converged = false;
    let mut it = 0;
    loop {
        let rel = relative_gradient(&g, &x);
        trace.push(TraceRow {
            iteration: it,
            energy: e.total,
            gradient_norm: rel,
            step: alpha,
        });
        if rel <= opts.tol && strong_ok(&x, p, opts.tol)? {
            converged = true;
            break;
        }
        if it == opts.max_iter {
            note = Some(format!("iteration cap {} reached", opts.max_iter));
            break;
        }
        alpha = 1.0;
        if let Some((xp, gp)) = &prev {
            let s = x.axpy(-1.0, xp);
            let y = g.axpy(-1.0, gp);
            let sy = s.h_inner(&y);
            if sy > 0.0 {
                alpha = (s.h_inner(&s) / sy).clamp(1e-6, 1e3);
            }
        }
        let slack = energy_slack(&e);
        // Near a critical point the energy change drops below round-off;
        // there a step counts if it keeps the energy within the noise band
        // and shrinks the gradient.
        let noise = 100.0 * slack;
        let gn = g.h_norm();
        let mut accepted = None;
        for _ in 0..60 {
            let trial = x.axpy(-alpha, &g);
            if let Ok(y) = project(trial) {
                if let Ok(ey) = energy_l(&y, p) {
                    let decrease = g.h_inner(&x.axpy(-1.0, &y)).max(0.0);
                    if ey.total.is_finite() && ey.total <= e.total - 1e-4 * decrease + slack {
                        let gy = grad_l(&y, p)?;
                        accepted = Some((y, ey, gy));
                        break;
                    }
                    if ey.total.is_finite() && ey.total <= e.total + noise {
                        let gy = grad_l(&y, p)?;
                        if gy.h_norm() < gn {
                            accepted = Some((y, ey, gy));
                            break;
                        }
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((y, ey, gy)) = accepted else {
            note = Some(format!(
                "line search stagnated at relative gradient {rel:e}"
            ));
            break;
        };
        prev = Some((std::mem::replace(&mut x, y), std::mem::replace(&mut g, gy)));
        e = ey;
        it += 1;
    }
    let grad_rel = relative_gradient(&g, &x);
    Ok(Descent {
        x,
        e,
        grad_rel,
        iterations: it,
        converged,
        trace,
        note,
    })
}

fn finish(kind: SolveKind, d: Descent, tol: f64, single: bool) -> SolveResult {
    let positivity = Positivity {
        u_min_interior: d.x.u.min_interior(),
        v_min_interior: if single {
            None
        } else {
            Some(d.x.v.min_interior())
        },
    };
    let narrow = |f: &RadialField| half_width_cells(f).is_some_and(|w| w < MIN_RESOLVED_CELLS);
    let grid_collapse = narrow(&d.x.u) || (!single && narrow(&d.x.v));
    let mut notes: Vec<String> = d.note.into_iter().collect();
    if grid_collapse {
        notes.push(format!(
            "grid-scale concentration: a component is narrower than {MIN_RESOLVED_CELLS} cells"
        ));
    }
    SolveResult {
        classification: kind,
        energy: d.e.total,
        breakdown: d.e,
        gradient_norm: d.grad_rel,
        tolerance: tol,
        iterations: d.iterations,
        positivity,
        converged: d.converged,
        trace: d.trace,
        notes,
        grid_collapse,
        state: d.x,
    }
}

pub(crate) fn finish_top(
    s: &StatePair,
    p: &ParameterSet,
    tol: f64,
    sweeps: usize,
    converged: bool,
    history: &[f64],
) -> Result<SolveResult> {
    let e = energy_l(s, p)?;
    let g = grad_l(s, p)?;
    let trace = history
        .iter()
        .enumerate()
        .map(|(i, &m)| TraceRow {
            iteration: i,
            energy: m,
            gradient_norm: f64::NAN,
            step: f64::NAN,
        })
        .collect();
    let d = Descent {
        x: s.clone(),
        e,
        grad_rel: relative_gradient(&g, s),
        iterations: sweeps,
        converged,
        trace,
        note: None,
    };
    Ok(finish(SolveKind::MountainPass, d, tol, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoDelta {
    pub rho: f64,
    pub delta: f64,
    pub case: Region,
    /// ε of the μ-shift used when β > 0.
    pub epsilon: Option<f64>,
    pub mu1: f64,
    pub mu2: f64,
}

/// Radius ρ and lower bound δ of 𝓛 on the sphere ‖(u,v)‖ = ρ.
pub fn rho_delta(p: &ParameterSet, dc: &DomainConstants) -> Result<RhoDelta> {
    let (q, epsilon) = if p.beta > 0.0 {
        match epsilon_shift_search(p, dc)? {
            Some(sh) => (sh.shifted(p), Some(sh.epsilon)),
            None => return precondition("no epsilon-shifted A-region contains the parameters"),
        }
    } else {
        (*p, None)
    };
    let margins = a_region_margins(&q, dc);
    let l1 = dc.lambda1_omega;
    let s = dc.sobolev_s;
    let maxmu = q.max_mu();
    let cases = [Region::A1, Region::A2, Region::A3];
    for (idx, case) in cases.iter().enumerate() {
        let Some(m) = margins[idx] else { continue };
        if m <= 0.0 {
            continue;
        }
        let gap = match case {
            Region::A1 => (l1 - q.lambda1).min(l1 - q.lambda2) / l1,
            Region::A2 => (l1 - q.lambda1) / l1,
            _ => 1.0,
        };
        let rho = (gap / maxmu).sqrt() * s;
        return Ok(RhoDelta {
            rho,
            delta: 0.25 * m,
            case: *case,
            epsilon,
            mu1: q.mu1,
            mu2: q.mu2,
        });
    }
    precondition("parameters lie in no A-region")
}

fn check_radius(grid: &Arc<RadialGrid>, p: &ParameterSet) -> Result<()> {
    if (grid.radius() - p.radius).abs() > 1e-12 * p.radius {
        return Err(Error::Domain(format!(
            "grid radius {} does not match parameter radius {}",
            grid.radius(),
            p.radius
        )));
    }
    Ok(())
}

/// Amplitude t minimizing J(t·e) over a log grid, restricted to t·‖e‖ ≤ cap.
fn best_amplitude(e: &RadialField, c: Component, cap: f64) -> f64 {
    let en = e.h1_norm();
    let tmax = cap / en;
    let mut best = (f64::INFINITY, tmax * 1e-12);
    for k in 0..=240 {
        let t = tmax * 10f64.powf(-12.0 + k as f64 * 0.05);
        let j = crate::functionals::energy_j(&e.scaled(t), c.lambda, c.mu, c.theta);
        if j < best.0 {
            best = (j, t);
        }
    }
    best.1
}

/// Small positive seed (t₁e₁, t₂e₁) with each amplitude minimizing its
/// single-equation energy inside the ball of radius `radius_cap`.
pub fn default_local_init(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    radius_cap: f64,
) -> Result<StatePair> {
    let e1 = principal_eigenpair(grid)?.vector;
    let cap = radius_cap / std::f64::consts::SQRT_2;
    let t1 = best_amplitude(&e1, p.component(0), cap);
    let t2 = best_amplitude(&e1, p.component(1), cap);
    Ok(StatePair {
        u: e1.scaled(t1),
        v: e1.scaled(t2),
    })
}

/// Minimizes 𝓛 over ‖(u,v)‖ ≤ ρ − τ, τ = 0.01ρ.
pub fn minimize_local_ball(
    p: &ParameterSet,
    init: &StatePair,
    rho: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_radius(init.grid(), p)?;
    if !(rho > 0.0) {
        return precondition(format!("ball radius must be positive, got {rho}"));
    }
    if init.h_norm() >= rho {
        return precondition(format!(
            "init norm {} is outside the ball of radius {rho}",
            init.h_norm()
        ));
    }
    let r = 0.99 * rho;
    let project = move |y: StatePair| -> Result<StatePair> {
        let n = y.h_norm();
        Ok(if n > r { y.scaled(r / n, r / n) } else { y })
    };
    let d = descend(init.clone(), p, opts, &project)?;
    let mut res = finish(SolveKind::LocalMinBall, d, opts.tol, false);
    if res.state.h_norm() >= r * (1.0 - 1e-12) {
        res.notes
            .push("iterate rests on the ball constraint".to_string());
    }
    Ok(res)
}

/// Minimizes 𝓛 on the Nehari set by gradient steps and re-projection.
pub fn minimize_on_nehari(
    p: &ParameterSet,
    init: &StatePair,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_radius(init.grid(), p)?;
    if !p.sigma1_both() {
        return precondition("Nehari minimization needs theta1, theta2 > 0");
    }
    if !init.u.has_positive_part() || !init.v.has_positive_part() {
        return precondition("init needs u⁺ and v⁺ nonzero");
    }
    let ptol = opts.projection_tol;
    let project =
        move |y: StatePair| -> Result<StatePair> { Ok(project_to_nehari(&y, p, ptol)?.projected) };
    let d = descend(init.clone(), p, opts, &project)?;
    let mut res = finish(SolveKind::NehariMin, d, opts.tol, false);
    if p.beta < 0.0 {
        let q = q_certificate(&res.state, p)?;
        res.notes.push(format!("q_certificate: {q}"));
    }
    Ok(res)
}

/// Bubble width used by the default Nehari seed, relative to the radius.
pub const SEED_EPS_FACTOR: f64 = 0.05;

/// Default Σ₁ seed, projected onto 𝓝: (u_{θ₁}, v_ε) with u_{θ₁} the single
/// equation Nehari state of the first component, or (√k v_ε, √l v_ε) when
/// β exceeds β₂.
pub fn default_nehari_init(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    opts: &SolverOptions,
) -> Result<StatePair> {
    if !p.sigma1_both() {
        return precondition("Nehari seeding needs theta1, theta2 > 0");
    }
    let r_cut = 0.5 * grid.radius();
    let v = crate::bubble::bubble_field(SEED_EPS_FACTOR * grid.radius(), grid, r_cut)?;
    let strong = crate::params::beta2_threshold(p).is_ok_and(|b2| p.beta > b2);
    let seed = match crate::params::solve_kl(p.mu1, p.mu2, p.beta) {
        Ok((k, l)) if strong && k > 0.0 && l > 0.0 => StatePair {
            u: v.scaled(k.sqrt()),
            v: v.scaled(l.sqrt()),
        },
        _ => {
            let e1 = principal_eigenpair(grid)?.vector;
            let c = p.component(0);
            let single = solve_single(c.lambda, c.mu, c.theta, SingleMode::NehariMin, &e1, opts)?;
            StatePair {
                u: single.state.u,
                v,
            }
        }
    };
    Ok(project_to_nehari(&seed, p, opts.projection_tol)?.projected)
}

/// Parameters that reduce the system to one equation when v ≡ 0.
fn single_params(c: Component, radius: f64) -> ParameterSet {
    ParameterSet {
        lambda1: c.lambda,
        mu1: c.mu,
        theta1: c.theta,
        lambda2: 0.0,
        mu2: 1.0,
        theta2: 0.0,
        beta: 0.0,
        radius,
    }
}

/// Radius of the local-minimum ball for one equation: Poincaré gap under
/// Σ₃, the bare Sobolev radius under Σ₄.
pub fn single_rho(c: Component, dc: &DomainConstants) -> Result<f64> {
    let sig = sigma_margins(c, dc);
    let s3 = sig.iter().any(|(r, _, m)| *r == Region::Sigma3 && *m);
    let s4 = sig.iter().any(|(r, _, m)| *r == Region::Sigma4 && *m);
    let l1 = dc.lambda1_omega;
    if s3 {
        Ok(((l1 - c.lambda) / (l1 * c.mu)).sqrt() * dc.sobolev_s)
    } else if s4 {
        Ok(dc.sobolev_s / c.mu.sqrt())
    } else {
        precondition("single local minimum needs the component in Sigma3 or Sigma4")
    }
}

/// Single-equation pipelines on J(u) = ½|∇u|² − (λ/2)|u⁺|² − (μ/4)|u⁺|⁴ − (θ/2)∫(u⁺)²(log(u⁺)²−1).
pub fn solve_single(
    lambda: f64,
    mu: f64,
    theta: f64,
    mode: SingleMode,
    init: &RadialField,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let c = Component { lambda, mu, theta };
    let grid = init.grid().clone();
    let sp = single_params(c, grid.radius());
    let x0 = StatePair {
        u: init.clone(),
        v: RadialField::zeros(&grid),
    };
    let mut res = match mode {
        SingleMode::LocalMin => {
            let dc = DomainConstants::for_grid(&grid)?;
            let rho = single_rho(c, &dc)?;
            if init.h1_norm() >= rho {
                return precondition(format!(
                    "init norm {} outside ball of radius {rho}",
                    init.h1_norm()
                ));
            }
            let r = 0.99 * rho;
            let project = move |y: StatePair| -> Result<StatePair> {
                let n = y.h_norm();
                Ok(if n > r { y.scaled(r / n, 0.0) } else { y })
            };
            finish(
                SolveKind::Single,
                descend(x0, &sp, opts, &project)?,
                opts.tol,
                true,
            )
        }
        SingleMode::NehariMin => {
            if !(theta > 0.0) {
                return precondition("single Nehari minimization needs theta > 0");
            }
            let ptol = opts.projection_tol;
            let project = move |y: StatePair| -> Result<StatePair> {
                let f = project_single(&y.u, lambda, mu, theta, ptol)?.field;
                Ok(StatePair { u: f, v: y.v })
            };
            finish(
                SolveKind::Single,
                descend(x0, &sp, opts, &project)?,
                opts.tol,
                true,
            )
        }
        SingleMode::MountainPass => {
            let end_a = if theta < 0.0 {
                let dc = DomainConstants::for_grid(&grid)?;
                match single_rho(c, &dc) {
                    Ok(rho) => {
                        let e1 = principal_eigenpair(&grid)?.vector;
                        let t = best_amplitude(&e1, c, 0.5 * rho);
                        let seed = RadialField::from_raw(&grid, e1.values().to_vec()).scaled(t);
                        solve_single(lambda, mu, theta, SingleMode::LocalMin, &seed, opts)?.state
                    }
                    Err(_) => StatePair::zeros(&grid),
                }
            } else {
                StatePair::zeros(&grid)
            };
            let ea = energy_l(&end_a, &sp)?.total;
            let mut t = 1.0;
            let mut end_b = StatePair {
                u: init.scaled(t),
                v: RadialField::zeros(&grid),
            };
            while energy_l(&end_b, &sp)?.total >= ea {
                t *= 2.0;
                if t > 1e8 {
                    return Err(Error::Numeric(
                        "no low-energy far endpoint along init".into(),
                    ));
                }
                end_b = StatePair {
                    u: init.scaled(t),
                    v: RadialField::zeros(&grid),
                };
            }
            let mp = mountain_pass(&sp, &end_a, &end_b, 16, opts)?;
            let mut r = mp.top;
            r.classification = SolveKind::Single;
            r.positivity.v_min_interior = None;
            r
        }
    };
    res.classification = SolveKind::Single;
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub strong_residual_u: f64,
    pub strong_residual_v: f64,
    pub u_min_interior: f64,
    pub v_min_interior: Option<f64>,
    pub q_certificate: Option<bool>,
    pub nehari_residuals: (f64, f64),
    /// relative error of 𝓛 − ¼𝓛′(u,v)(u,v) against its log-form rewrite
    pub identity_quarter_residual: Option<f64>,
    /// relative error of 𝓛 − ½𝓛′(u,v)(u,v) against its quartic-form rewrite
    pub identity_half_residual: f64,
    pub semi_trivial: bool,
    pub escape_probe: Option<EscapeProbe>,
    pub radial_candidate: bool,
}

/// 𝓛 − ¼𝓛′(s)(s) and its closed form (None if some θᵢ = 0).
pub fn quarter_identity(s: &StatePair, p: &ParameterSet) -> Result<Option<(f64, f64)>> {
    if p.theta1 == 0.0 || p.theta2 == 0.0 {
        return Ok(None);
    }
    let lhs = energy_l(s, p)?.total - 0.25 * derivative(s, p, s)?;
    let side = |f: &RadialField, c: Component| {
        let m = moments(f);
        // −(θ/4)∫(u⁺)² log(e^{λ/θ}(u⁺)²) written as a sum over nodes
        let w = f.grid().weights();
        let shifted: f64 = f
            .values()
            .iter()
            .zip(w)
            .map(|(&a, w)| {
                if a <= crate::radial::LOG_FLOOR {
                    0.0
                } else {
                    w * a * a * (c.lambda / c.theta + (a * a).ln())
                }
            })
            .sum::<f64>()
            * crate::radial::OMEGA4;
        0.25 * m.grad2 - 0.25 * c.theta * shifted + 0.5 * c.theta * m.l2
    };
    let rhs = side(&s.u, p.component(0)) + side(&s.v, p.component(1));
    Ok(Some((lhs, rhs)))
}

/// 𝓛 − ½𝓛′(s)(s) and its closed form.
pub fn half_identity(s: &StatePair, p: &ParameterSet) -> Result<(f64, f64)> {
    let lhs = energy_l(s, p)?.total - 0.5 * derivative(s, p, s)?;
    let (mu, mv) = (moments(&s.u), moments(&s.v));
    let c = crate::functionals::cross_moment(&s.u, &s.v);
    let rhs = 0.25 * (p.mu1 * mu.l4 + p.mu2 * mv.l4 + 2.0 * p.beta * c)
        + 0.5 * p.theta1 * mu.l2
        + 0.5 * p.theta2 * mv.l2;
    Ok((lhs, rhs))
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeProbe {
    /// 1 if u vanished, 2 if v vanished
    pub component: u8,
    pub t: f64,
    pub decrease: f64,
}

/// For a state with one component ≡ 0, looks for a small bump t·w that
/// lowers the energy.
pub fn escape_probe(s: &StatePair, p: &ParameterSet) -> Result<Option<EscapeProbe>> {
    let grid = s.grid().clone();
    let bump = RadialField::from_fn(&grid, |r| (1.0 - (r / grid.radius()).powi(2)).max(0.0));
    let base = energy_l(s, p)?.total;
    for (comp, zero) in [(1u8, s.u.max_abs() == 0.0), (2u8, s.v.max_abs() == 0.0)] {
        if !zero {
            continue;
        }
        for k in 1..=24 {
            let t = 10f64.powi(-k);
            let trial = if comp == 1 {
                StatePair {
                    u: bump.scaled(t),
                    v: s.v.clone(),
                }
            } else {
                StatePair {
                    u: s.u.clone(),
                    v: bump.scaled(t),
                }
            };
            let e = energy_l(&trial, p)?.total;
            if e < base {
                return Ok(Some(EscapeProbe {
                    component: comp,
                    t,
                    decrease: base - e,
                }));
            }
        }
    }
    Ok(None)
}

/// Strong-form residuals, positivity, and identity checks of a result.
pub fn residual_certificate(r: &SolveResult, p: &ParameterSet) -> Result<CertificateReport> {
    let s = &r.state;
    let (ru, rv) = strong_residuals(s, p)?;
    let single = r.positivity.v_min_interior.is_none();
    let semi_trivial = !single && (s.u.max_abs() == 0.0 || s.v.max_abs() == 0.0);
    let q = if single || semi_trivial {
        None
    } else {
        Some(q_certificate(s, p)?)
    };
    let quarter = quarter_identity(s, p)?.map(|(a, b)| rel_err(a, b));
    let (a, b) = half_identity(s, p)?;
    Ok(CertificateReport {
        strong_residual_u: ru,
        strong_residual_v: rv,
        u_min_interior: s.u.min_interior(),
        v_min_interior: if single {
            None
        } else {
            Some(s.v.min_interior())
        },
        q_certificate: q,
        nehari_residuals: nehari_residuals(s, p)?,
        identity_quarter_residual: quarter,
        identity_half_residual: rel_err(a, b),
        semi_trivial,
        escape_probe: if semi_trivial {
            escape_probe(s, p)?
        } else {
            None
        },
        radial_candidate: true,
    })
}

/// 𝓛 − ¼𝓛′(s)(s) minus the θ < 0 lower bound ¼‖s‖² + Σ(θᵢ/4)e^{1−λᵢ/θᵢ}|Ω|.
pub fn boundedness_gap(s: &StatePair, p: &ParameterSet, dc: &DomainConstants) -> Result<f64> {
    let lhs = energy_l(s, p)?.total - 0.25 * derivative(s, p, s)?;
    let vol = dc.volume;
    let bound = 0.25 * s.h_inner(s)
        + 0.25 * p.theta1 * (1.0 - p.lambda1 / p.theta1).exp() * vol
        + 0.25 * p.theta2 * (1.0 - p.lambda2 / p.theta2).exp() * vol;
    Ok(lhs - bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalLowerBound {
    pub case: u8,
    /// displayed expression evaluated at the state
    pub at_state: f64,
    /// infimum of the expression over all states
    pub uniform: f64,
}

/// Lower bounds for the energy of critical points, one per applicable case:
/// 1: 2 min θ ≥ −λ₁(Ω); 2: β > 0; 3: −√(μ₁μ₂) < β < 0. All three need
/// θ₁, θ₂ < 0; otherwise the list is empty.
pub fn critical_level_lower_bounds(
    s: &StatePair,
    p: &ParameterSet,
    dc: &DomainConstants,
) -> Result<Vec<CriticalLowerBound>> {
    let mut out = Vec::new();
    if !p.theta_negative_both() {
        return Ok(out);
    }
    let vol = dc.volume;
    if 2.0 * p.theta1.min(p.theta2) >= -dc.lambda1_omega {
        let v = 0.25
            * vol
            * (p.theta1 * (-p.lambda1 / p.theta1 - 1.0).exp()
                + p.theta2 * (-p.lambda2 / p.theta2 - 1.0).exp());
        out.push(CriticalLowerBound {
            case: 1,
            at_state: v,
            uniform: v,
        });
    }
    let x = moments(&s.u).l4.sqrt();
    let y = moments(&s.v).l4.sqrt();
    let sv = vol.sqrt();
    let expr = |a: f64, b: f64| {
        let val = 0.25 * (a * x * x + b * y * y) + 0.5 * sv * (p.theta1 * x + p.theta2 * y);
        // min over X, Y ≥ 0 of ¼aX² + ½θ√|Ω|X
        let inf = |coef: f64, th: f64| {
            if th < 0.0 {
                -th * th * vol / (4.0 * coef)
            } else {
                0.0
            }
        };
        (val, inf(a, p.theta1) + inf(b, p.theta2))
    };
    if p.beta > 0.0 {
        let (v, u) = expr(p.mu1, p.mu2);
        out.push(CriticalLowerBound {
            case: 2,
            at_state: v,
            uniform: u,
        });
    }
    if p.beta < 0.0 && p.beta > -(p.mu1 * p.mu2).sqrt() {
        let a = p.mu1 + p.beta * (p.mu1 / p.mu2).sqrt();
        let b = p.mu2 + p.beta * (p.mu2 / p.mu1).sqrt();
        let (v, u) = expr(a, b);
        out.push(CriticalLowerBound {
            case: 3,
            at_state: v,
            uniform: u,
        });
    }
    Ok(out)
}

/// Minimum of 𝓛 over `samples` random positive directions scaled to
/// ‖(u,v)‖ = ρ.
pub fn sphere_minimum(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let s = random_smooth_pair(grid, &mut rng, true);
        let split: f64 = rng.gen_range(0.0..=1.0);
        let (nu, nv) = (s.u.h1_norm(), s.v.h1_norm());
        let a = split.sqrt() * rho / nu;
        let b = (1.0 - split).sqrt() * rho / nv;
        best = best.min(energy_l(&s.scaled(a, b), p)?.total);
    }
    Ok(best)
}

/// `random_smooth_pair` with positive amplitudes from a ChaCha8 stream.
pub fn seeded_positive_pair(grid: &Arc<RadialGrid>, seed: u64) -> StatePair {
    use rand::SeedableRng;
    random_smooth_pair(
        grid,
        &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        true,
    )
}

/// Random smooth radial pair: sums of a few Gaussian bumps times (R² − r²).
pub fn random_smooth_pair<R: rand::Rng>(
    grid: &Arc<RadialGrid>,
    rng: &mut R,
    positive: bool,
) -> StatePair {
    let field = |rng: &mut R| {
        let radius = grid.radius();
        let k = rng.gen_range(1..=3);
        let bumps: Vec<(f64, f64, f64)> = (0..k)
            .map(|_| {
                let amp = if positive {
                    rng.gen_range(0.2..2.0)
                } else {
                    rng.gen_range(-2.0..2.0)
                };
                (
                    amp,
                    rng.gen_range(0.0..0.8) * radius,
                    rng.gen_range(0.1..0.6) * radius,
                )
            })
            .collect();
        RadialField::from_fn(grid, |r| {
            let env = (radius * radius - r * r) / (radius * radius);
            env * bumps
                .iter()
                .map(|(a, c, w)| a * (-((r - c) / w).powi(2)).exp())
                .sum::<f64>()
        })
    };
    let u = field(rng);
    let v = field(rng);
    StatePair { u, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ball_geometry;

    #[test]
    fn rho_delta_cases() {
        let dc = ball_geometry(1.0).unwrap();
        let p = ParameterSet::symmetric(0.0, 1.0, -1.0, -0.5, 1.0);
        let rd = rho_delta(&p, &dc).unwrap();
        assert_eq!(rd.case, Region::A1);
        assert!((rd.rho - dc.sobolev_s).abs() < 1e-12);
        let expect = 0.25 * dc.s2() - dc.volume;
        assert!((rd.delta - expect).abs() < 1e-12 * expect);
        // λ < 0 rules out A₁, A₂; A₃ gives ρ = S/√max μ
        let mut q = ParameterSet::symmetric(-40.0, 2.0, -0.5, -0.5, 1.0);
        q.mu1 = 1.0;
        let rd = rho_delta(&q, &dc).unwrap();
        assert_eq!(rd.case, Region::A3);
        assert!((rd.rho - dc.sobolev_s / 2f64.sqrt()).abs() < 1e-12);
        let bad = ParameterSet::symmetric(0.0, 1.0, -10.0, -0.5, 1.0);
        assert!(rho_delta(&bad, &dc).is_err());
    }

    #[test]
    fn single_local_min_gate() {
        let g = RadialGrid::new(1.0, 64).unwrap();
        let init = RadialField::from_fn(&g, |r| 0.01 * (1.0 - r * r));
        let e = solve_single(
            0.0,
            1.0,
            1.0,
            SingleMode::LocalMin,
            &init,
            &SolverOptions::default(),
        );
        assert!(matches!(e, Err(Error::Precondition(_))));
    }
}
