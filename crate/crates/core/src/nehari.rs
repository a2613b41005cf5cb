//! Projection onto the Nehari set along fibers (t₁u, t₂v).

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::functionals::{cross_moment, moments, nehari_matrix, Moments, StatePair};
use crate::params::ParameterSet;
use crate::radial::RadialField;

pub const MAX_NEWTON: usize = 50;
const POLISH_STEPS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonStep {
    pub a: f64,
    pub b: f64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NehariProjection {
    pub t1: f64,
    pub t2: f64,
    pub projected: StatePair,
    pub iterations: usize,
    pub residuals: (f64, f64),
    /// Set outside Σ₁, where a fiber may meet the Nehari set more than once.
    pub multiplicity_unknown: bool,
    pub trace: Vec<NewtonStep>,
}

/// Fiber data of (u, v): everything the scaled residuals depend on.
#[derive(Debug, Clone, Copy)]
pub struct Fiber {
    pub mu: Moments,
    pub mv: Moments,
    pub cross: f64,
}

impl Fiber {
    pub fn of(s: &StatePair) -> Self {
        Fiber {
            mu: moments(&s.u),
            mv: moments(&s.v),
            cross: cross_moment(&s.u, &s.v),
        }
    }

    /// F(a,b) = LHS − RHS of the projection system; the Nehari residual of
    /// (t₁u, t₂v) is −t₁²F₁ (resp. −t₂²F₂).
    pub fn system(&self, p: &ParameterSet, a: f64, b: f64) -> (f64, f64) {
        let (u, v) = (&self.mu, &self.mv);
        let rhs1 = u.grad2 - p.lambda1 * u.l2 - p.theta1 * u.log;
        let rhs2 = v.grad2 - p.lambda2 * v.l2 - p.theta2 * v.log;
        (
            p.mu1 * u.l4 * a.exp() + p.beta * self.cross * b.exp() + p.theta1 * u.l2 * a - rhs1,
            p.mu2 * v.l4 * b.exp() + p.beta * self.cross * a.exp() + p.theta2 * v.l2 * b - rhs2,
        )
    }

    pub fn jacobian(&self, p: &ParameterSet, a: f64, b: f64) -> [[f64; 2]; 2] {
        let c = p.beta * self.cross;
        [
            [
                p.mu1 * self.mu.l4 * a.exp() + p.theta1 * self.mu.l2,
                c * b.exp(),
            ],
            [
                c * a.exp(),
                p.mu2 * self.mv.l4 * b.exp() + p.theta2 * self.mv.l2,
            ],
        ]
    }

    fn scaled_residuals(&self, p: &ParameterSet, a: f64, b: f64) -> (f64, f64) {
        let (f1, f2) = self.system(p, a, b);
        (-a.exp() * f1, -b.exp() * f2)
    }
}

/// Finds t₁, t₂ > 0 with (t₁u, t₂v) ∈ 𝓝 by damped Newton in (log t₁², log t₂²).
pub fn project_to_nehari(s: &StatePair, p: &ParameterSet, tol: f64) -> Result<NehariProjection> {
    if !s.u.has_positive_part() || !s.v.has_positive_part() {
        return precondition("projection needs u⁺ and v⁺ nonzero");
    }
    let fiber = Fiber::of(s);
    let (mut a, mut b) = (0.0f64, 0.0f64);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let ok = |r: (f64, f64)| r.0.abs() <= tol && r.1.abs() <= tol;
    loop {
        let (f1, f2) = fiber.system(p, a, b);
        trace.push(NewtonStep { a, b, f1, f2 });
        if ok(fiber.scaled_residuals(p, a, b)) {
            break;
        }
        if iterations == MAX_NEWTON {
            return Err(Error::Numeric(format!(
                "Nehari projection did not converge in {MAX_NEWTON} steps; trace {}",
                serde_json::to_string(&trace).unwrap_or_default()
            )));
        }
        iterations += 1;
        let j = fiber.jacobian(p, a, b);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::Numeric(format!(
                "singular Nehari Jacobian at a={a}, b={b}"
            )));
        }
        let da = -(j[1][1] * f1 - j[0][1] * f2) / det;
        let db = -(-j[1][0] * f1 + j[0][0] * f2) / det;
        let norm0 = f1.hypot(f2);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (na, nb) = (a + step * da, b + step * db);
            let (g1, g2) = fiber.system(p, na, nb);
            if g1.is_finite() && g2.is_finite() && g1.hypot(g2) < norm0 {
                a = na;
                b = nb;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::Numeric(format!(
                "Nehari projection stalled at a={a}, b={b}, |F|={norm0:e}"
            )));
        }
    }
    let (mut t1, mut t2) = ((0.5 * a).exp(), (0.5 * b).exp());
    let mut projected = s.scaled(t1, t2);
    let mut residuals = crate::functionals::nehari_residuals(&projected, p)?;
    // Residuals recomputed on the scaled fields carry their own round-off;
    // polish with Newton on the projected fiber and keep the best.
    let size = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let mut cur = (t1, t2, projected.clone());
    for _ in 0..POLISH_STEPS {
        if size(residuals) <= tol {
            break;
        }
        let f = Fiber::of(&cur.2);
        let (f1, f2) = f.system(p, 0.0, 0.0);
        let j = f.jacobian(p, 0.0, 0.0);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let da = -(j[1][1] * f1 - j[0][1] * f2) / det;
        let db = -(-j[1][0] * f1 + j[0][0] * f2) / det;
        let (s1, s2) = ((0.5 * da).exp(), (0.5 * db).exp());
        cur = (cur.0 * s1, cur.1 * s2, cur.2.scaled(s1, s2));
        let r = crate::functionals::nehari_residuals(&cur.2, p)?;
        if size(r) < size(residuals) {
            (t1, t2, projected, residuals) = (cur.0, cur.1, cur.2.clone(), r);
        }
    }
    Ok(NehariProjection {
        t1,
        t2,
        projected,
        iterations,
        residuals,
        multiplicity_unknown: !p.sigma1_both(),
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleProjection {
    pub t: f64,
    pub field: RadialField,
    pub iterations: usize,
    pub residual: f64,
}

/// Scalar version on 𝓝ᵢ = {u : J′(u)u = 0}.
pub fn project_single(
    u: &RadialField,
    lambda: f64,
    mu: f64,
    theta: f64,
    tol: f64,
) -> Result<SingleProjection> {
    if !u.has_positive_part() {
        return precondition("projection needs u⁺ nonzero");
    }
    let m = moments(u);
    let rhs = m.grad2 - lambda * m.l2 - theta * m.log;
    let f = |a: f64| mu * m.l4 * a.exp() + theta * m.l2 * a - rhs;
    let mut a = 0.0f64;
    let mut iterations = 0;
    while (a.exp() * f(a)).abs() > tol {
        if iterations == MAX_NEWTON {
            return Err(Error::Numeric(format!(
                "single projection did not converge, a={a}"
            )));
        }
        iterations += 1;
        let fa = f(a);
        let d = mu * m.l4 * a.exp() + theta * m.l2;
        let da = -fa / d;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let na = a + step * da;
            let fn_ = f(na);
            if fn_.is_finite() && fn_.abs() < fa.abs() {
                a = na;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::Numeric(format!(
                "single projection stalled at a={a}"
            )));
        }
    }
    let t = (0.5 * a).exp();
    let field = u.scaled(t);
    let mm = moments(&field);
    let residual = mm.grad2 - lambda * mm.l2 - mu * mm.l4 - theta * mm.log;
    Ok(SingleProjection {
        t,
        field,
        iterations,
        residual,
    })
}

/// Strict diagonal dominance of the Nehari matrix.
pub fn q_certificate(s: &StatePair, p: &ParameterSet) -> Result<bool> {
    Ok(nehari_matrix(s, p)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::nehari_residuals;
    use crate::radial::RadialGrid;

    fn state(amp: f64) -> StatePair {
        let g = RadialGrid::new(1.0, 128).unwrap();
        StatePair::new(
            RadialField::from_fn(&g, |r| amp * (1.0 - r * r)),
            RadialField::from_fn(&g, |r| amp * (1.0 - r * r) * (1.0 + r)),
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_takes_no_steps() {
        let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
        let first = project_to_nehari(&state(1.0), &p, 1e-12).unwrap();
        let again = project_to_nehari(&first.projected, &p, 1e-10).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!((again.t1, again.t2), (1.0, 1.0));
        let (g1, g2) = nehari_residuals(&first.projected, &p).unwrap();
        assert!(g1.abs() <= 1e-10 && g2.abs() <= 1e-10);
    }

    #[test]
    fn ray_invariance() {
        let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
        let a = project_to_nehari(&state(1.0), &p, 1e-11).unwrap();
        let b = project_to_nehari(&state(2.0), &p, 1e-11).unwrap();
        for (x, y) in a.projected.u.values().iter().zip(b.projected.u.values()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn single_matches_bisection() {
        let g = RadialGrid::new(1.0, 128).unwrap();
        let u = RadialField::from_fn(&g, |r| 0.3 * (1.0 - r * r));
        let (lambda, mu, theta) = (2.0, 1.5, 0.8);
        let res = project_single(&u, lambda, mu, theta, 1e-11).unwrap();
        let m = moments(&u);
        let rhs = m.grad2 - lambda * m.l2 - theta * m.log;
        let f = |a: f64| mu * m.l4 * a.exp() + theta * m.l2 * a - rhs;
        let (mut lo, mut hi) = (-1.0, 1.0);
        while f(lo) > 0.0 {
            lo *= 2.0;
        }
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let t_bis = (0.25 * (lo + hi)).exp();
        assert!((res.t - t_bis).abs() <= 1e-11 * t_bis);
        let neg = u.scaled(-1.0);
        assert!(matches!(
            project_single(&neg, lambda, mu, theta, 1e-10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn semi_trivial_rejected() {
        let s = state(1.0);
        let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
        let z = StatePair {
            u: s.u.clone(),
            v: s.v.scaled(0.0),
        };
        assert!(matches!(
            project_to_nehari(&z, &p, 1e-10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn overlapping_spikes_fail_certificate() {
        let g = RadialGrid::new(1.0, 128).unwrap();
        let spike = RadialField::from_fn(&g, |r| 30.0 * (-(r / 0.05).powi(2)).exp());
        let s = StatePair::new(spike.clone(), spike).unwrap();
        let p = ParameterSet::symmetric(0.0, 1.0, 1.0, -50.0, 1.0);
        assert!(!q_certificate(&s, &p).unwrap());
    }
}
