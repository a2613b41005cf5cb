//! Energy functionals, Riesz gradients and Nehari residuals.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::params::ParameterSet;
use crate::radial::{dirichlet_energy, riesz_solve, s2_log_s2, RadialField, RadialGrid, OMEGA4};

#[derive(Debug, Clone, Serialize)]
pub struct StatePair {
    pub u: RadialField,
    pub v: RadialField,
}

impl StatePair {
    pub fn new(u: RadialField, v: RadialField) -> Result<Self> {
        u.check_grid(&v)?;
        Ok(StatePair { u, v })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        StatePair {
            u: RadialField::zeros(grid),
            v: RadialField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.u.grid()
    }

    pub fn scaled(&self, t1: f64, t2: f64) -> Self {
        StatePair {
            u: self.u.scaled(t1),
            v: self.v.scaled(t2),
        }
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &StatePair) -> Self {
        StatePair {
            u: self.u.axpy(a, &other.u),
            v: self.v.axpy(a, &other.v),
        }
    }

    pub fn h_inner(&self, other: &StatePair) -> f64 {
        self.u.h1_inner(&other.u) + self.v.h1_inner(&other.v)
    }

    /// ‖(u,v)‖_𝓗 = (|∇u|² + |∇v|²)^{1/2}
    pub fn h_norm(&self) -> f64 {
        self.h_inner(self).max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .values()
            .iter()
            .chain(self.v.values())
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub gradient_u: f64,
    pub gradient_v: f64,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub quartic_u: f64,
    pub quartic_v: f64,
    pub coupling: f64,
    pub log_u: f64,
    pub log_v: f64,
}

impl EnergyBreakdown {
    pub fn term_sum(&self) -> f64 {
        self.gradient_u
            + self.gradient_v
            + self.lambda_u
            + self.lambda_v
            + self.quartic_u
            + self.quartic_v
            + self.coupling
            + self.log_u
            + self.log_v
    }
}

/// Integrals of one field that every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Moments {
    /// |∇u|²
    pub grad2: f64,
    /// |u⁺|₂²
    pub l2: f64,
    /// |u⁺|₄⁴
    pub l4: f64,
    /// ∫(u⁺)² log (u⁺)²
    pub log: f64,
}

pub fn moments(f: &RadialField) -> Moments {
    let mut l2 = 0.0;
    let mut l4 = 0.0;
    let mut lg = 0.0;
    for (&x, &w) in f.values().iter().zip(f.grid().weights()) {
        if x > 0.0 {
            let x2 = x * x;
            l2 += w * x2;
            l4 += w * x2 * x2;
            lg += w * s2_log_s2(x);
        }
    }
    Moments {
        grad2: dirichlet_energy(f),
        l2: OMEGA4 * l2,
        l4: OMEGA4 * l4,
        log: OMEGA4 * lg,
    }
}

/// |u⁺v⁺|₂²
pub fn cross_moment(u: &RadialField, v: &RadialField) -> f64 {
    OMEGA4
        * u.values()
            .iter()
            .zip(v.values())
            .zip(u.grid().weights())
            .map(|((a, b), w)| {
                let (a, b) = (a.max(0.0), b.max(0.0));
                w * a * a * b * b
            })
            .sum::<f64>()
}

fn check_state(s: &StatePair, p: &ParameterSet) -> Result<()> {
    s.u.check_grid(&s.v)?;
    let r = s.grid().radius();
    if (r - p.radius).abs() > 1e-12 * r.max(p.radius) {
        return domain(format!(
            "state lives on radius {r} but parameters say {}",
            p.radius
        ));
    }
    Ok(())
}

fn single_terms(m: &Moments, lambda: f64, mu: f64, theta: f64) -> [f64; 4] {
    [
        0.5 * m.grad2,
        -0.5 * lambda * m.l2,
        -0.25 * mu * m.l4,
        -0.5 * theta * (m.log - m.l2),
    ]
}

pub fn energy_from_moments(
    mu: &Moments,
    mv: &Moments,
    cross: f64,
    p: &ParameterSet,
) -> EnergyBreakdown {
    let [gu, lu, qu, logu] = single_terms(mu, p.lambda1, p.mu1, p.theta1);
    let [gv, lv, qv, logv] = single_terms(mv, p.lambda2, p.mu2, p.theta2);
    let coupling = -0.5 * p.beta * cross;
    let mut e = EnergyBreakdown {
        total: 0.0,
        gradient_u: gu,
        gradient_v: gv,
        lambda_u: lu,
        lambda_v: lv,
        quartic_u: qu,
        quartic_v: qv,
        coupling,
        log_u: logu,
        log_v: logv,
    };
    e.total = e.term_sum();
    e
}

/// 𝓛(u,v) with its term-by-term breakdown.
pub fn energy_l(s: &StatePair, p: &ParameterSet) -> Result<EnergyBreakdown> {
    check_state(s, p)?;
    Ok(energy_from_moments(
        &moments(&s.u),
        &moments(&s.v),
        cross_moment(&s.u, &s.v),
        p,
    ))
}

/// Pointwise right-hand side λu⁺ + μ(u⁺)³ + β(v⁺)²u⁺ + θu⁺log(u⁺)².
fn forcing(
    u: &RadialField,
    v: &RadialField,
    lambda: f64,
    mu: f64,
    theta: f64,
    beta: f64,
) -> Vec<f64> {
    u.values()
        .iter()
        .zip(v.values())
        .map(|(&a, &b)| {
            if a <= 0.0 {
                return 0.0;
            }
            let b = b.max(0.0);
            let lg = if a <= crate::radial::LOG_FLOOR {
                0.0
            } else {
                (a * a).ln()
            };
            lambda * a + mu * a * a * a + beta * b * b * a + theta * a * lg
        })
        .collect()
}

/// Right-hand sides of both equations at the nodes.
pub fn forcings(s: &StatePair, p: &ParameterSet) -> (Vec<f64>, Vec<f64>) {
    (
        forcing(&s.u, &s.v, p.lambda1, p.mu1, p.theta1, p.beta),
        forcing(&s.v, &s.u, p.lambda2, p.mu2, p.theta2, p.beta),
    )
}

/// H₀¹ Riesz representative of 𝓛′(u,v): g = u − (−Δ)⁻¹ f(u,v).
pub fn grad_l(s: &StatePair, p: &ParameterSet) -> Result<StatePair> {
    check_state(s, p)?;
    let (fu, fv) = forcings(s, p);
    let grid = s.grid();
    let ru = riesz_solve(&RadialField::from_raw(grid, fu))?;
    let rv = riesz_solve(&RadialField::from_raw(grid, fv))?;
    Ok(StatePair {
        u: s.u.axpy(-1.0, &ru),
        v: s.v.axpy(-1.0, &rv),
    })
}

/// 𝓛′(u,v)(φ,ψ) assembled in weak form.
pub fn derivative(s: &StatePair, p: &ParameterSet, dir: &StatePair) -> Result<f64> {
    check_state(s, p)?;
    s.u.check_grid(&dir.u)?;
    let (fu, fv) = forcings(s, p);
    let w = s.grid().weights();
    let weak = |f: &RadialField, rhs: &[f64], phi: &RadialField| {
        let load: f64 = rhs
            .iter()
            .zip(phi.values())
            .zip(w)
            .map(|((a, b), w)| a * b * w)
            .sum();
        f.h1_inner(phi) - OMEGA4 * load
    };
    Ok(weak(&s.u, &fu, &dir.u) + weak(&s.v, &fv, &dir.v))
}

/// Single-equation functional J(u).
pub fn energy_j(u: &RadialField, lambda: f64, mu: f64, theta: f64) -> f64 {
    single_terms(&moments(u), lambda, mu, theta).iter().sum()
}

/// Limit functional without lower-order terms, no positive-part truncation.
pub fn energy_limit_e(s: &StatePair, mu1: f64, mu2: f64, beta: f64) -> f64 {
    let w = s.grid().weights();
    let quartic: f64 =
        s.u.values()
            .iter()
            .zip(s.v.values())
            .zip(w)
            .map(|((a, b), w)| {
                let (a2, b2) = (a * a, b * b);
                w * (mu1 * a2 * a2 + 2.0 * beta * a2 * b2 + mu2 * b2 * b2)
            })
            .sum();
    0.5 * (dirichlet_energy(&s.u) + dirichlet_energy(&s.v)) - 0.25 * OMEGA4 * quartic
}

pub fn residuals_from_moments(
    mu: &Moments,
    mv: &Moments,
    cross: f64,
    p: &ParameterSet,
) -> (f64, f64) {
    (
        mu.grad2 - p.lambda1 * mu.l2 - p.mu1 * mu.l4 - p.beta * cross - p.theta1 * mu.log,
        mv.grad2 - p.lambda2 * mv.l2 - p.mu2 * mv.l4 - p.beta * cross - p.theta2 * mv.log,
    )
}

/// (𝓛′(u,v)(u,0), 𝓛′(u,v)(0,v)).
pub fn nehari_residuals(s: &StatePair, p: &ParameterSet) -> Result<(f64, f64)> {
    check_state(s, p)?;
    Ok(residuals_from_moments(
        &moments(&s.u),
        &moments(&s.v),
        cross_moment(&s.u, &s.v),
        p,
    ))
}

/// Nehari matrix and its strict diagonal dominance flag.
pub fn nehari_matrix(s: &StatePair, p: &ParameterSet) -> Result<([[f64; 2]; 2], bool)> {
    check_state(s, p)?;
    let (mu, mv) = (moments(&s.u), moments(&s.v));
    let c = p.beta * cross_moment(&s.u, &s.v);
    let m = [
        [p.mu1 * mu.l4 + p.theta1 * mu.l2, c],
        [c, p.mu2 * mv.l4 + p.theta2 * mv.l2],
    ];
    let dominant = m[0][0] - m[0][1].abs() > 0.0 && m[1][1] - m[1][0].abs() > 0.0;
    Ok((m, dominant))
}

/// Discrete strong residuals ‖−Δu − f₁‖₂/‖u‖_{H₀¹} and the v analogue.
pub fn strong_residuals(s: &StatePair, p: &ParameterSet) -> Result<(f64, f64)> {
    check_state(s, p)?;
    let (fu, fv) = forcings(s, p);
    let grid = s.grid();
    let w = grid.weights();
    let one = |f: &RadialField, rhs: &[f64]| {
        let kf = grid.stiffness_apply(f.values());
        let r2: f64 = kf
            .iter()
            .zip(rhs)
            .zip(w)
            .map(|((k, g), w)| {
                let d = k / w - g;
                d * d * w
            })
            .sum();
        let norm = f.h1_norm();
        if norm == 0.0 {
            0.0
        } else {
            (OMEGA4 * r2).sqrt() / norm
        }
    };
    Ok((one(&s.u, &fu), one(&s.v, &fv)))
}
