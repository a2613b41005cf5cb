use serde::Serialize;

use super::{
    a_region_margins, ball_geometry, beta1_threshold, beta2_threshold, epsilon_shift_search,
    lambda_cap, limit_level_a, radius_gate_value, region_membership, sigma_margins, solve_kl,
    DomainConstants, EpsilonShift, ParameterSet, Region, RegionLabel,
};
use crate::error::Result;
use crate::nonexistence::{theorem16_margin, theorem17_expression};
use crate::solvers::rho_delta;

/// Results the classifier can certify, named by their conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    /// Positive least-energy solution, both θ > 0, small negative β.
    LeastEnergyNegativeCoupling,
    /// Positive least-energy solution, both θ > 0, 0 < β < β₁.
    LeastEnergyWeakCoupling,
    /// Positive least-energy solution, both θ > 0, β > β₂.
    LeastEnergyStrongCoupling,
    /// Positive local minimizer with negative energy, θ < 0.
    LocalMinimum,
    /// Nonnegative solution at the lowest critical level.
    LowestCriticalLevel,
    /// Second nonnegative solution through a mountain pass.
    MountainPass,
    /// No positive solutions: one component dominated by its log term.
    NonexistenceLogDominated,
    /// No positive solutions: log coefficients of opposite signs.
    NonexistenceOppositeLog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

fn hyp(name: &str, holds: bool, margin: Option<f64>) -> Hypothesis {
    Hypothesis {
        name: name.to_string(),
        holds,
        margin,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub theorem: TheoremId,
    pub hypotheses: Vec<Hypothesis>,
}

impl TheoremCheck {
    pub fn holds(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Thresholds {
    pub beta1: f64,
    pub beta2: Option<f64>,
    pub lambda_cap: Option<f64>,
    pub k: Option<f64>,
    pub l: Option<f64>,
    pub a_level: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub beta_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub params: ParameterSet,
    pub domain: DomainConstants,
    pub regions: Vec<RegionLabel>,
    pub epsilon_shift: Option<EpsilonShift>,
    pub applicable_theorems: Vec<TheoremCheck>,
    /// Every theorem evaluated, including those whose hypotheses fail.
    pub evaluated: Vec<TheoremCheck>,
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn lists(&self, id: TheoremId) -> bool {
        self.applicable_theorems.iter().any(|t| t.theorem == id)
    }

    pub fn check(&self, id: TheoremId) -> Option<&TheoremCheck> {
        self.evaluated.iter().find(|t| t.theorem == id)
    }
}

/// Default |β| cap for the negative-coupling least-energy window, as a
/// multiple of √(μ₁μ₂).
pub const DEFAULT_BETA_CAP_FACTOR: f64 = 0.05;

/// Classifies with ball constants of radius `p.radius`.
pub fn classify(p: &ParameterSet) -> Result<ClassificationReport> {
    p.validate()?;
    let dc = ball_geometry(p.radius)?;
    classify_with(p, &dc, DEFAULT_BETA_CAP_FACTOR)
}

pub fn classify_with(
    p: &ParameterSet,
    dc: &DomainConstants,
    beta_cap_factor: f64,
) -> Result<ClassificationReport> {
    p.validate()?;
    let mut notes = Vec::new();
    let regions = region_membership(p, dc);
    let sigma1 = [p.theta1 > 0.0, p.theta2 > 0.0];
    let beta1 = beta1_threshold(p);
    let beta_cap = beta_cap_factor * (p.mu1 * p.mu2).sqrt();
    let mut th = Thresholds {
        beta1,
        beta_cap,
        ..Default::default()
    };

    if p.sigma1_both() {
        let cap = lambda_cap(p)?;
        th.lambda_cap = Some(cap);
        match beta2_threshold(p) {
            Ok(b2) => th.beta2 = Some(b2),
            Err(e) => notes.push(format!("beta2 unavailable: {e}")),
        }
    }
    if let Ok((k, l)) = solve_kl(p.mu1, p.mu2, p.beta) {
        if k > 0.0 && l > 0.0 {
            th.k = Some(k);
            th.l = Some(l);
        }
    }
    match limit_level_a(p, dc) {
        Ok(a) => th.a_level = Some(a),
        Err(e) => notes.push(format!("limit level unavailable: {e}")),
    }
    let shift = if p.beta > 0.0 {
        epsilon_shift_search(p, dc)?
    } else {
        None
    };
    if let Ok(rd) = rho_delta(p, dc) {
        th.rho = Some(rd.rho);
        th.delta = Some(rd.delta);
    }

    let mut evaluated = Vec::new();
    let s1 = |i: usize| {
        hyp(
            &format!("sigma1_component{}", i + 1),
            sigma1[i],
            Some(p.component(i).theta),
        )
    };

    // both θ > 0
    evaluated.push(TheoremCheck {
        theorem: TheoremId::LeastEnergyNegativeCoupling,
        hypotheses: vec![
            s1(0),
            s1(1),
            hyp("beta_negative", p.beta < 0.0, Some(-p.beta)),
            hyp(
                "abs_beta_within_cap",
                p.beta.abs() <= beta_cap,
                Some(beta_cap - p.beta.abs()),
            ),
        ],
    });
    if p.sigma1_both() && p.beta < 0.0 {
        notes.push(
            "negative-coupling window beta0 not closed-form; applicability limited by the configured |beta| cap"
                .to_string(),
        );
        if p.beta.abs() > beta_cap {
            notes.push(format!(
                "|beta| = {} exceeds the cap {}",
                p.beta.abs(),
                beta_cap
            ));
        }
    }
    evaluated.push(TheoremCheck {
        theorem: TheoremId::LeastEnergyWeakCoupling,
        hypotheses: vec![
            s1(0),
            s1(1),
            hyp("beta_positive", p.beta > 0.0, Some(p.beta)),
            hyp("beta_below_beta1", p.beta < beta1, Some(beta1 - p.beta)),
        ],
    });
    evaluated.push(TheoremCheck {
        theorem: TheoremId::LeastEnergyStrongCoupling,
        hypotheses: vec![
            s1(0),
            s1(1),
            hyp(
                "beta_above_beta2",
                th.beta2.is_some_and(|b2| p.beta > b2),
                th.beta2.map(|b2| p.beta - b2),
            ),
        ],
    });

    // both θ < 0: local minimum gates
    let a = a_region_margins(p, dc);
    let local_min = if p.beta < 0.0 {
        let best = a
            .iter()
            .flatten()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let m = if best.is_finite() { Some(best) } else { None };
        vec![hyp("a_region_member", best > 0.0, m)]
    } else {
        vec![hyp(
            "a_region_member_after_epsilon_shift",
            shift.is_some(),
            shift.map(|s| s.label.margin),
        )]
    };
    evaluated.push(TheoremCheck {
        theorem: TheoremId::LocalMinimum,
        hypotheses: local_min.clone(),
    });

    let gate13 = 2.0 * p.theta1.min(p.theta2) >= -dc.lambda1_omega
        || p.beta > 0.0
        || (p.beta < 0.0 && p.beta > -(p.mu1 * p.mu2).sqrt());
    let mut h13 = local_min.clone();
    h13.push(hyp("theta_or_beta_gate", gate13, None));
    evaluated.push(TheoremCheck {
        theorem: TheoremId::LowestCriticalLevel,
        hypotheses: h13,
    });

    let mut h15 = local_min;
    let outside = p.beta < p.min_mu() || p.beta > p.max_mu();
    h15.push(hyp("beta_outside_mu_interval", outside, None));
    for i in 0..2 {
        let v = radius_gate_value(p.component(i), p.radius);
        h15.push(hyp(
            &format!("radius_gate_component{}", i + 1),
            v < 1.0,
            Some(1.0 - v),
        ));
    }
    evaluated.push(TheoremCheck {
        theorem: TheoremId::MountainPass,
        hypotheses: h15,
    });

    // nonexistence
    let mut sigma2_best: Option<f64> = None;
    for i in 0..2 {
        let c = p.component(i);
        if c.theta < 0.0 {
            let m = theorem16_margin(c.lambda, c.mu, c.theta, dc);
            sigma2_best = Some(sigma2_best.map_or(m, |b: f64| b.max(m)));
        }
    }
    evaluated.push(TheoremCheck {
        theorem: TheoremId::NonexistenceLogDominated,
        hypotheses: vec![
            hyp(
                "sigma2_some_component",
                sigma2_best.is_some_and(|m| m >= 0.0),
                sigma2_best,
            ),
            hyp("beta_positive", p.beta > 0.0, Some(p.beta)),
        ],
    });
    let forward =
        p.mu1 < p.mu2 && p.mu1 < p.beta && p.beta < p.mu2 && p.theta2 < 0.0 && p.theta1 > 0.0;
    let mirrored =
        p.mu2 < p.mu1 && p.mu2 < p.beta && p.beta < p.mu1 && p.theta1 < 0.0 && p.theta2 > 0.0;
    let t17 = if forward || mirrored {
        let e = theorem17_expression(p);
        let m = if forward { e } else { -e };
        vec![
            hyp("ordering_and_signs", true, None),
            hyp("log_balance", m > 0.0, Some(m)),
        ]
    } else {
        vec![hyp("ordering_and_signs", false, None)]
    };
    evaluated.push(TheoremCheck {
        theorem: TheoremId::NonexistenceOppositeLog,
        hypotheses: t17,
    });

    if !p.sigma1_both() && !p.theta_negative_both() {
        notes.push("mixed-sign log coefficients: only nonexistence gates apply".to_string());
    }
    let sigmas: Vec<_> = (0..2)
        .flat_map(|i| sigma_margins(p.component(i), dc))
        .collect();
    if sigmas.iter().any(|(r, _, m)| *r == Region::Sigma2 && *m) && p.beta < 0.0 {
        notes.push("sigma2 component with beta < 0: nonexistence gate needs beta > 0".to_string());
    }

    let applicable_theorems = evaluated.iter().filter(|t| t.holds()).cloned().collect();
    Ok(ClassificationReport {
        params: *p,
        domain: *dc,
        regions,
        epsilon_shift: shift,
        applicable_theorems,
        evaluated,
        thresholds: th,
        notes,
    })
}

/// Re-evaluates every listed theorem from scratch on the stored parameters.
pub fn verify_report(report: &ClassificationReport) -> Result<bool> {
    let fresh = classify_with(
        &report.params,
        &report.domain,
        report.thresholds.beta_cap / (report.params.mu1 * report.params.mu2).sqrt(),
    )?;
    Ok(report
        .applicable_theorems
        .iter()
        .all(|t| fresh.check(t.theorem).is_some_and(|c| c.holds())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_coupling_listed() {
        let p = ParameterSet::symmetric(0.0, 1.0, 1.0, 0.1, 1.0);
        let r = classify(&p).unwrap();
        assert!(r.lists(TheoremId::LeastEnergyWeakCoupling));
        assert!(!r.lists(TheoremId::LeastEnergyStrongCoupling));
        assert_eq!(r.thresholds.beta1, 0.25);
        assert!(verify_report(&r).unwrap());
    }

    #[test]
    fn nonexistence_listed() {
        let dc = ball_geometry(1.0).unwrap();
        let p = ParameterSet::symmetric(dc.lambda1_omega, 1.0, -1.0, 1.0, 1.0);
        let r = classify_with(&p, &dc, DEFAULT_BETA_CAP_FACTOR).unwrap();
        assert!(r.lists(TheoremId::NonexistenceLogDominated));
        let m = r
            .check(TheoremId::NonexistenceLogDominated)
            .unwrap()
            .hypotheses[0]
            .margin
            .unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_coupling_with_caveat() {
        let p = ParameterSet::symmetric(0.0, 1.0, 1.0, -0.01, 1.0);
        let r = classify(&p).unwrap();
        assert!(r.lists(TheoremId::LeastEnergyNegativeCoupling));
        assert!(r.notes.iter().any(|n| n.contains("beta0")));
        let q = ParameterSet::symmetric(0.0, 1.0, 1.0, -0.5, 1.0);
        let r = classify(&q).unwrap();
        assert!(!r.lists(TheoremId::LeastEnergyNegativeCoupling));
    }

    #[test]
    fn local_minimum_regimes() {
        let p = ParameterSet::symmetric(0.0, 1.0, -1.0, -0.5, 1.0);
        let r = classify(&p).unwrap();
        assert!(r.lists(TheoremId::LocalMinimum));
        assert!(r.lists(TheoremId::LowestCriticalLevel));
        // radius gate: 32/(1·1) > 1
        assert!(!r.lists(TheoremId::MountainPass));
        let q = ParameterSet::symmetric(5.0, 1.0, -0.1, -0.5, 1.0);
        let r = classify(&q).unwrap();
        assert!(r.lists(TheoremId::MountainPass));
        assert!(verify_report(&r).unwrap());
    }

    #[test]
    fn strong_coupling_listed() {
        let p = ParameterSet::symmetric(1.0, 1.0, 1.0, 8.0, 1.0);
        let r = classify(&p).unwrap();
        assert_eq!(r.thresholds.beta2, Some(7.0));
        assert!(r.lists(TheoremId::LeastEnergyStrongCoupling));
    }
}
