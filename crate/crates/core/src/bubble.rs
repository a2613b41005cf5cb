//! Truncated Aubin–Talenti bubbles, their integrals, and energy-gap reports
//! built from them.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, precondition, Error, Result};
use crate::functionals::{
    cross_moment, energy_from_moments, energy_l, moments, Moments, StatePair,
};
use crate::nehari::project_to_nehari;
use crate::par::{self, Execution};
use crate::params::{
    beta1_threshold, golden_max, lambda_cap, limit_level_a, single_level_bracket, solve_kl,
    Component, DomainConstants, ParameterSet, DEFAULT_BETA_CAP_FACTOR,
};
use crate::radial::{
    dirichlet_energy, integrate_power, log_moment, principal_eigenpair, RadialField, RadialGrid,
    OMEGA4,
};
use crate::solvers::{solve_single, SingleMode, SolverOptions};

/// U_ε(r) = 2√2 ε/(ε² + r²)
pub fn talenti(eps: f64, r: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * eps / (eps * eps + r * r)
}

/// dU_ε/dr
pub fn talenti_slope(eps: f64, r: f64) -> f64 {
    let d = eps * eps + r * r;
    -4.0 * std::f64::consts::SQRT_2 * eps * r / (d * d)
}

/// 1 on [0, r_cut], quintic smoothstep down to 0 on [r_cut, 2r_cut].
pub fn cutoff(r: f64, r_cut: f64) -> f64 {
    let s = (r - r_cut) / r_cut;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Default plateau radius: a quarter of the ball.
pub fn default_r_cut(radius: f64) -> f64 {
    0.25 * radius
}

fn check_geometry(eps: f64, grid: &RadialGrid, r_cut: f64) -> Result<()> {
    if !(eps > 0.0 && eps < r_cut) {
        return domain(format!(
            "need 0 < eps < r_cut, got eps = {eps}, r_cut = {r_cut}"
        ));
    }
    if !(2.0 * r_cut <= grid.radius() * (1.0 + 1e-12)) {
        return domain(format!(
            "support 2*r_cut = {} exceeds the radius {}",
            2.0 * r_cut,
            grid.radius()
        ));
    }
    Ok(())
}

/// ξ U_ε on the grid.
pub fn bubble_field(eps: f64, grid: &Arc<RadialGrid>, r_cut: f64) -> Result<RadialField> {
    check_geometry(eps, grid, r_cut)?;
    Ok(RadialField::from_fn(grid, |r| {
        cutoff(r, r_cut) * talenti(eps, r)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleIntegrals {
    pub eps: f64,
    pub grad2: f64,
    pub l4: f64,
    pub l2: f64,
    pub l2log: f64,
    /// Plateau radius; infinite for the uncut bubble.
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
}

impl BubbleIntegrals {
    /// ω₄ ε² log(1/ε)
    pub fn log_scale(&self) -> f64 {
        OMEGA4 * self.eps * self.eps * (1.0 / self.eps).ln()
    }

    pub fn grad_ratio(&self, s2: f64) -> f64 {
        self.grad2 / s2
    }

    pub fn l4_ratio(&self, s2: f64) -> f64 {
        self.l4 / s2
    }

    /// l2 / (8ω₄ε²|log ε|)
    pub fn l2_ratio(&self) -> f64 {
        self.l2 / (8.0 * self.log_scale())
    }

    /// Leading lower bracket for l2log at plateau radius R.
    pub fn bracket_lower(&self) -> f64 {
        let (e2, r2) = (self.eps * self.eps, self.cutoff_inner * self.cutoff_inner);
        8.0 * (8.0 * (e2 + r2) / (std::f64::consts::E * (e2 + 4.0 * r2).powi(2))).ln()
            * self.log_scale()
    }

    /// Leading upper bracket for l2log at plateau radius R.
    pub fn bracket_upper(&self) -> f64 {
        let (e2, r2) = (self.eps * self.eps, self.cutoff_inner * self.cutoff_inner);
        8.0 * (8.0 * std::f64::consts::E * (e2 + 4.0 * r2) / (e2 + r2).powi(2)).ln()
            * self.log_scale()
    }

    /// Amount by which l2log leaves the brackets, divided by ε² (0 inside).
    pub fn bracket_excess(&self) -> f64 {
        let out = (self.bracket_lower() - self.l2log)
            .max(self.l2log - self.bracket_upper())
            .max(0.0);
        out / (self.eps * self.eps)
    }
}

pub fn bubble_integrals(eps: f64, grid: &Arc<RadialGrid>, r_cut: f64) -> Result<BubbleIntegrals> {
    let f = bubble_field(eps, grid, r_cut)?;
    Ok(BubbleIntegrals {
        eps,
        grad2: dirichlet_energy(&f),
        l4: integrate_power(&f, 4.0)?,
        l2: integrate_power(&f, 2.0)?,
        l2log: log_moment(&f),
        cutoff_inner: r_cut,
        cutoff_outer: 2.0 * r_cut,
    })
}

/// Integrals of the bare bubble over the grid ball, with the exact slope
/// (no Dirichlet jump at the truncation radius).
pub fn uncut_integrals(eps: f64, grid: &Arc<RadialGrid>) -> Result<BubbleIntegrals> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let (mut g, mut l4, mut l2, mut lg) = (0.0, 0.0, 0.0, 0.0);
    for (&r, &w) in grid.nodes().iter().zip(grid.weights()) {
        let u = talenti(eps, r);
        let du = talenti_slope(eps, r);
        g += w * du * du;
        l4 += w * u.powi(4);
        l2 += w * u * u;
        lg += w * crate::radial::s2_log_s2(u);
    }
    Ok(BubbleIntegrals {
        eps,
        grad2: OMEGA4 * g,
        l4: OMEGA4 * l4,
        l2: OMEGA4 * l2,
        l2log: OMEGA4 * lg,
        cutoff_inner: f64::INFINITY,
        cutoff_outer: f64::INFINITY,
    })
}

/// |∇f|² / |f|₄², the quantity minimized by S².
pub fn sobolev_quotient(f: &RadialField) -> Result<f64> {
    let l4 = integrate_power(f, 4.0)?;
    if l4 == 0.0 {
        return precondition("Sobolev quotient of the zero field");
    }
    Ok(dirichlet_energy(f) / l4.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct BubbleRow {
    pub integrals: BubbleIntegrals,
    pub grad_ratio: f64,
    pub l4_ratio: f64,
    pub l2_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub bracketed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BubbleTable {
    pub r_cut: f64,
    pub rows: Vec<BubbleRow>,
    /// ε values that violated the geometry, with the reason.
    pub skipped: Vec<(f64, String)>,
    /// O(ε²) bracket slack estimated from the two smallest ε.
    pub bracket_slack: f64,
}

impl BubbleTable {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::fmt17;
        writeln!(
            w,
            "eps,grad2,l4,l2,l2log,lower,upper,grad_ratio,l4_ratio,l2_ratio,bracketed"
        )?;
        for r in &self.rows {
            let b = &r.integrals;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt17(b.eps),
                fmt17(b.grad2),
                fmt17(b.l4),
                fmt17(b.l2),
                fmt17(b.l2log),
                fmt17(r.lower),
                fmt17(r.upper),
                fmt17(r.grad_ratio),
                fmt17(r.l4_ratio),
                fmt17(r.l2_ratio),
                r.bracketed
            )?;
        }
        Ok(())
    }
}

/// Integrals for each ε, in input order; invalid ε are skipped with a note.
pub fn bubble_table(
    eps_list: &[f64],
    grid: &Arc<RadialGrid>,
    r_cut: f64,
    exec: Execution,
) -> BubbleTable {
    let s2 = crate::params::sobolev_constant().powi(2);
    let results = par::map(exec, eps_list, |&eps| bubble_integrals(eps, grid, r_cut));
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (&eps, res) in eps_list.iter().zip(results) {
        match res {
            Ok(b) => rows.push(BubbleRow {
                grad_ratio: b.grad_ratio(s2),
                l4_ratio: b.l4_ratio(s2),
                l2_ratio: b.l2_ratio(),
                lower: b.bracket_lower(),
                upper: b.bracket_upper(),
                bracketed: b.bracket_lower() <= b.l2log && b.l2log <= b.bracket_upper(),
                integrals: b,
            }),
            Err(e) => skipped.push((eps, e.to_string())),
        }
    }
    let mut by_eps: Vec<&BubbleRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| a.integrals.eps.total_cmp(&b.integrals.eps));
    let bracket_slack = by_eps
        .iter()
        .take(2)
        .map(|r| r.integrals.bracket_excess())
        .fold(0.0, f64::max);
    BubbleTable {
        r_cut,
        rows,
        skipped,
        bracket_slack,
    }
}

fn scaled_moments(m: &Moments, t: f64) -> Moments {
    let t2 = t * t;
    Moments {
        grad2: t2 * m.grad2,
        l2: t2 * m.l2,
        l4: t2 * t2 * m.l4,
        log: t2 * (m.log + t2.ln() * m.l2),
    }
}

/// 𝓛(t₁u, t₂v) from the moments of (u, v).
struct FiberEnergy {
    mu: Moments,
    mv: Moments,
    cross: f64,
}

impl FiberEnergy {
    fn of(s: &StatePair) -> Self {
        FiberEnergy {
            mu: moments(&s.u),
            mv: moments(&s.v),
            cross: cross_moment(&s.u, &s.v),
        }
    }

    fn at(&self, p: &ParameterSet, t1: f64, t2: f64) -> f64 {
        let mu = scaled_moments(&self.mu, t1);
        let mv = scaled_moments(&self.mv, t2);
        energy_from_moments(&mu, &mv, t1 * t1 * t2 * t2 * self.cross, p).total
    }

    /// max over t > 0 of 𝓛(tu, tv) and the maximizer.
    fn ray_max(&self, p: &ParameterSet) -> (f64, f64) {
        let f = |x: f64| self.at(p, x.exp(), x.exp());
        let (lo, hi) = (-8.0, 8.0);
        let m = 1601;
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..m {
            let x = lo + (hi - lo) * k as f64 / (m - 1) as f64;
            let v = f(x);
            if v > best.0 {
                best = (v, k);
            }
        }
        let step = (hi - lo) / (m - 1) as f64;
        let x0 = lo + step * best.1 as f64;
        let x = golden_max(f, x0 - step, x0 + step, 1e-12);
        let v = f(x);
        if v >= best.0 {
            (v, x.exp())
        } else {
            (best.0, x0.exp())
        }
    }
}

/// max over (t₁,t₂) of 𝓛(t₁u, t₂v): coarse log grid, then the Nehari
/// projection from the best grid point.
fn fiber_max(s: &StatePair, p: &ParameterSet, tol: f64) -> Result<(f64, f64, f64)> {
    let fe = FiberEnergy::of(s);
    let (lo, hi, m) = (-6.0, 6.0, 241);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..m {
        let a = lo + (hi - lo) * i as f64 / (m - 1) as f64;
        for j in 0..m {
            let b = lo + (hi - lo) * j as f64 / (m - 1) as f64;
            let v = fe.at(p, a.exp(), b.exp());
            if v > best.0 {
                best = (v, a.exp(), b.exp());
            }
        }
    }
    let proj = project_to_nehari(&s.scaled(best.1, best.2), p, tol)?;
    let (t1, t2) = (best.1 * proj.t1, best.2 * proj.t2);
    let v = fe.at(p, t1, t2);
    if v >= best.0 {
        Ok((v, t1, t2))
    } else {
        Err(Error::Numeric(format!(
            "fiber critical point {v} below the grid maximum {}",
            best.0
        )))
    }
}

fn single_nehari_energy(
    c: Component,
    grid: &Arc<RadialGrid>,
    opts: &SolverOptions,
) -> Result<(f64, RadialField)> {
    let e1 = principal_eigenpair(grid)?.vector;
    let r = solve_single(c.lambda, c.mu, c.theta, SingleMode::NehariMin, &e1, opts)?;
    if r.grid_collapse {
        return Err(Error::Numeric(
            "single Nehari solve collapsed to grid scale; refine the grid".into(),
        ));
    }
    if !r.converged {
        return Err(Error::Numeric(format!(
            "single Nehari solve stopped at relative gradient {:e}",
            r.gradient_norm
        )));
    }
    Ok((r.energy, r.state.u))
}

#[derive(Debug, Clone, Serialize)]
pub struct NehariGapRow {
    pub eps: f64,
    pub s1: f64,
    pub s2: f64,
    pub energy: f64,
    /// |β|∫u²v_ε² and (θ₂/2)∫v_ε²
    pub coupling_lhs: f64,
    pub coupling_rhs: f64,
    pub s_ranges_hold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NehariGapReport {
    pub params: ParameterSet,
    pub r_cut: f64,
    pub rows: Vec<NehariGapRow>,
    pub skipped: Vec<(f64, String)>,
    /// Numerical upper bounds for the single-equation least levels.
    pub single_energies: (f64, f64),
    pub single_brackets: [(f64, f64); 2],
    /// max over the plateau ball of u_{θ₁}² against θ₂/(2|β|)
    pub pi_squared: f64,
    pub pi_condition: bool,
    pub upper_bound: f64,
    /// C₁ + ¼μ₂⁻¹S²
    pub first_target: f64,
    /// min of the three competing levels
    pub target: f64,
    pub strict_gap: bool,
    pub notes: Vec<String>,
}

/// Projects (u_{θ₁}, v_ε) onto the Nehari set for each ε and compares the
/// resulting energies with the semi-trivial levels.
pub fn nehari_gap_report(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    eps_list: &[f64],
    r_cut: f64,
    opts: &SolverOptions,
) -> Result<NehariGapReport> {
    if !p.sigma1_both() {
        return precondition("gap report needs theta1, theta2 > 0");
    }
    let cap = DEFAULT_BETA_CAP_FACTOR * (p.mu1 * p.mu2).sqrt();
    let beta1 = beta1_threshold(p);
    if !((p.beta > -cap && p.beta < 0.0) || (p.beta > 0.0 && p.beta < beta1)) {
        return precondition(format!(
            "beta = {} outside (-{cap}, 0) U (0, {beta1})",
            p.beta
        ));
    }
    let s2 = crate::params::sobolev_constant().powi(2);
    let (c1, u1) = single_nehari_energy(p.component(0), grid, opts)?;
    let (c2, _) = single_nehari_energy(p.component(1), grid, opts)?;
    let single_brackets = [
        single_level_bracket(p.component(0), s2),
        single_level_bracket(p.component(1), s2),
    ];
    let pi_squared = u1
        .values()
        .iter()
        .zip(grid.nodes())
        .filter(|(_, r)| **r <= 2.0 * r_cut)
        .map(|(v, _)| v * v)
        .fold(0.0, f64::max);
    let pi_condition = pi_squared <= p.theta2 / (2.0 * p.beta.abs());
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &eps in eps_list {
        let row = (|| -> Result<NehariGapRow> {
            let v = bubble_field(eps, grid, r_cut)?;
            let s = StatePair::new(u1.clone(), v.clone())?;
            let proj = project_to_nehari(&s, p, opts.projection_tol)?;
            let energy = energy_l(&proj.projected, p)?.total;
            let (a, b) = (proj.t1 * proj.t1, proj.t2 * proj.t2);
            Ok(NehariGapRow {
                eps,
                s1: proj.t1,
                s2: proj.t2,
                energy,
                coupling_lhs: p.beta.abs() * cross_moment(&u1, &v),
                coupling_rhs: 0.5 * p.theta2 * integrate_power(&v, 2.0)?,
                s_ranges_hold: (0.5..=2.0).contains(&a) && (0.5 / p.mu2..=2.0 / p.mu2).contains(&b),
            })
        })();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => skipped.push((eps, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::Numeric(
            "no epsilon produced a Nehari projection".into(),
        ));
    }
    let upper_bound = rows.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    let first_target = c1 + 0.25 * s2 / p.mu2;
    let target = first_target
        .min(c2 + 0.25 * s2 / p.mu1)
        .min(0.25 * (1.0 / p.mu1 + 1.0 / p.mu2) * s2);
    let smallest = rows
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .expect("nonempty");
    let mut notes = vec![
        "single energies are numerical upper bounds for the single-equation least levels"
            .to_string(),
    ];
    if !pi_condition {
        notes.push(
            "smallness condition on max u^2 fails; coupling comparison is informational".into(),
        );
    }
    Ok(NehariGapReport {
        params: *p,
        r_cut,
        strict_gap: smallest.energy < first_target,
        rows,
        skipped,
        single_energies: (c1, c2),
        single_brackets,
        pi_squared,
        pi_condition,
        upper_bound,
        first_target,
        target,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapVariant {
    /// max over (t₁, t₂)
    TwoScale,
    /// max over the single ray t(w, z)
    SingleScale,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitGapRow {
    pub eps: f64,
    pub t1: f64,
    pub t2: f64,
    pub level: f64,
    /// max_t 𝓛(t v_ε, 0) and max_t 𝓛(0, t v_ε)
    pub semi_trivial: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitGapReport {
    pub params: ParameterSet,
    pub variant: GapVariant,
    pub r_cut: f64,
    pub k: Option<f64>,
    pub l: Option<f64>,
    pub rows: Vec<LimitGapRow>,
    pub skipped: Vec<(f64, String)>,
    pub limit_level: f64,
    pub upper_bound: f64,
    pub below_limit: bool,
    /// ¼ min μᵢ⁻¹ S² and whether the semi-trivial rays beat it
    pub semi_trivial_target: f64,
    pub semi_trivial_below: bool,
    /// ∇g(1,1) and the largest Hessian eigenvalue of the quartic surrogate
    pub surrogate_gradient: Option<(f64, f64)>,
    pub surrogate_max_eigenvalue: Option<f64>,
    /// (Λ, k + l) when β > max μ and Λ is defined
    pub cap_comparison: Option<(f64, f64)>,
    pub radius_gate: Option<[f64; 2]>,
    pub notes: Vec<String>,
}

fn surrogate(k: f64, l: f64, p: &ParameterSet) -> ((f64, f64), f64) {
    // g(t₁,t₂) = ½(kt₁² + lt₂²) − ¼(μ₁k²t₁⁴ + 2βklt₁²t₂² + μ₂l²t₂⁴) at (1,1)
    let g1 = k - p.mu1 * k * k - p.beta * k * l;
    let g2 = l - p.mu2 * l * l - p.beta * k * l;
    let h11 = k - 3.0 * p.mu1 * k * k - p.beta * k * l;
    let h22 = l - 3.0 * p.mu2 * l * l - p.beta * k * l;
    let h12 = -2.0 * p.beta * k * l;
    let tr = h11 + h22;
    let det = h11 * h22 - h12 * h12;
    let top = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
    ((g1, g2), top)
}

/// Compares test-pair levels built from (√k v_ε, √l v_ε) and the
/// semi-trivial rays with the limit level 𝓐.
pub fn limit_gap_report(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    eps_list: &[f64],
    r_cut: f64,
    variant: GapVariant,
    opts: &SolverOptions,
) -> Result<LimitGapReport> {
    let dc = DomainConstants::for_grid(grid)?;
    let limit_level = limit_level_a(p, &dc)?;
    let kl = solve_kl(p.mu1, p.mu2, p.beta)
        .ok()
        .filter(|(k, l)| *k > 0.0 && *l > 0.0);
    if p.beta > 0.0 && kl.is_none() {
        return precondition(format!("no positive (k, l) for beta = {}", p.beta));
    }
    let use_pair = p.beta > 0.0;
    let s2 = dc.s2();
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &eps in eps_list {
        let row = (|| -> Result<LimitGapRow> {
            let v = bubble_field(eps, grid, r_cut)?;
            let zero = RadialField::zeros(grid);
            let su = FiberEnergy::of(&StatePair::new(v.clone(), zero.clone())?)
                .ray_max(p)
                .0;
            let sv = FiberEnergy::of(&StatePair::new(zero, v.clone())?)
                .ray_max(p)
                .0;
            let (level, t1, t2) = match (use_pair, kl) {
                (true, Some((k, l))) => {
                    let s = StatePair::new(v.scaled(k.sqrt()), v.scaled(l.sqrt()))?;
                    match variant {
                        GapVariant::TwoScale => fiber_max(&s, p, opts.projection_tol)?,
                        GapVariant::SingleScale => {
                            let (m, t) = FiberEnergy::of(&s).ray_max(p);
                            (m, t, t)
                        }
                    }
                }
                _ => (su.min(sv), f64::NAN, f64::NAN),
            };
            Ok(LimitGapRow {
                eps,
                t1,
                t2,
                level,
                semi_trivial: (su, sv),
            })
        })();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => skipped.push((eps, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::Numeric("no epsilon produced a level".into()));
    }
    if !use_pair {
        notes.push("beta < 0: the bound comes from the semi-trivial rays".into());
    }
    let upper_bound = rows.iter().map(|r| r.level).fold(f64::INFINITY, f64::min);
    let semi_trivial_target = 0.25 * s2 / p.max_mu();
    let smallest = rows
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .expect("nonempty");
    let semi_trivial_below =
        smallest.semi_trivial.0.min(smallest.semi_trivial.1) < semi_trivial_target;
    let (surrogate_gradient, surrogate_max_eigenvalue) = match kl {
        Some((k, l)) if use_pair => {
            let (g, e) = surrogate(k, l, p);
            (Some(g), Some(e))
        }
        _ => (None, None),
    };
    let cap_comparison = match (kl, lambda_cap(p)) {
        (Some((k, l)), Ok(cap)) if p.beta > p.max_mu() => Some((cap, k + l)),
        _ => None,
    };
    let radius_gate = (p.theta1 < 0.0 && p.theta2 < 0.0).then(|| {
        [
            crate::params::radius_gate_value(p.component(0), p.radius),
            crate::params::radius_gate_value(p.component(1), p.radius),
        ]
    });
    Ok(LimitGapReport {
        params: *p,
        variant,
        r_cut,
        k: kl.map(|x| x.0),
        l: kl.map(|x| x.1),
        below_limit: smallest.level < limit_level,
        rows,
        skipped,
        limit_level,
        upper_bound,
        semi_trivial_target,
        semi_trivial_below,
        surrogate_gradient,
        surrogate_max_eigenvalue,
        cap_comparison,
        radius_gate,
        notes,
    })
}
