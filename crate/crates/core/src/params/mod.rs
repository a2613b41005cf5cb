//! Parameter sets, domain constants and closed-form thresholds.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Error, Result};
use crate::radial::{bessel_j1_first_zero, principal_eigenpair, RadialGrid, OMEGA4};

mod classify;
mod regions;

pub(crate) use regions::golden_max;

pub use classify::{
    classify, classify_with, verify_report, ClassificationReport, Hypothesis, TheoremCheck,
    TheoremId, Thresholds, DEFAULT_BETA_CAP_FACTOR,
};
pub use regions::{
    a_region_margins, epsilon_shift_search, region_membership, sigma_margins, EpsilonShift, Region,
    RegionLabel, EPS_GRID_POINTS, EPS_WINDOW,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    pub radius: f64,
}

/// One equation's coefficients (λ, μ, θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
}

impl ParameterSet {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda1,
            self.lambda2,
            self.mu1,
            self.mu2,
            self.theta1,
            self.theta2,
            self.beta,
            self.radius,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return domain("parameters must be finite");
        }
        if !(self.mu1 > 0.0 && self.mu2 > 0.0) {
            return domain(format!(
                "mu1, mu2 must be positive (got {}, {})",
                self.mu1, self.mu2
            ));
        }
        if self.beta == 0.0 {
            return domain("beta must be nonzero");
        }
        if !(self.radius > 0.0) {
            return domain(format!("radius must be positive, got {}", self.radius));
        }
        Ok(())
    }

    /// Equal coefficients in both equations.
    pub fn symmetric(lambda: f64, mu: f64, theta: f64, beta: f64, radius: f64) -> Self {
        ParameterSet {
            lambda1: lambda,
            lambda2: lambda,
            mu1: mu,
            mu2: mu,
            theta1: theta,
            theta2: theta,
            beta,
            radius,
        }
    }

    pub fn component(&self, i: usize) -> Component {
        match i {
            0 => Component {
                lambda: self.lambda1,
                mu: self.mu1,
                theta: self.theta1,
            },
            _ => Component {
                lambda: self.lambda2,
                mu: self.mu2,
                theta: self.theta2,
            },
        }
    }

    /// Exchanges the roles of u and v.
    pub fn swapped(&self) -> Self {
        ParameterSet {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
            mu1: self.mu2,
            mu2: self.mu1,
            theta1: self.theta2,
            theta2: self.theta1,
            ..*self
        }
    }

    pub fn max_mu(&self) -> f64 {
        self.mu1.max(self.mu2)
    }

    pub fn min_mu(&self) -> f64 {
        self.mu1.min(self.mu2)
    }

    pub fn sigma1_both(&self) -> bool {
        self.theta1 > 0.0 && self.theta2 > 0.0
    }

    pub fn theta_negative_both(&self) -> bool {
        self.theta1 < 0.0 && self.theta2 < 0.0
    }

    /// Reads a field by its config name.
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "lambda1" => self.lambda1,
            "lambda2" => self.lambda2,
            "mu1" => self.mu1,
            "mu2" => self.mu2,
            "theta1" => self.theta1,
            "theta2" => self.theta2,
            "beta" => self.beta,
            "radius" => self.radius,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "lambda1" => &mut self.lambda1,
            "lambda2" => &mut self.lambda2,
            "mu1" => &mut self.mu1,
            "mu2" => &mut self.mu2,
            "theta1" => &mut self.theta1,
            "theta2" => &mut self.theta2,
            "beta" => &mut self.beta,
            "radius" => &mut self.radius,
            _ => return domain(format!("unknown parameter `{key}`")),
        };
        *slot = value;
        Ok(())
    }

    pub const KEYS: [&'static str; 8] = [
        "lambda1", "lambda2", "mu1", "mu2", "theta1", "theta2", "beta", "radius",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainConstants {
    pub radius: f64,
    pub volume: f64,
    pub lambda1_omega: f64,
    /// j₁,₁²/R², reported next to the numerical value.
    pub lambda1_bessel: f64,
    pub sobolev_s: f64,
    pub omega4: f64,
}

impl DomainConstants {
    pub fn s2(&self) -> f64 {
        self.sobolev_s * self.sobolev_s
    }

    /// Constants matching a specific grid: λ₁(Ω) is that grid's discrete
    /// principal eigenvalue, so gates agree with what the solvers see.
    pub fn for_grid(grid: &std::sync::Arc<RadialGrid>) -> Result<Self> {
        let eig = principal_eigenpair(grid)?;
        let r = grid.radius();
        let j = bessel_j1_first_zero();
        Ok(DomainConstants {
            radius: r,
            volume: ball_volume(r),
            lambda1_omega: eig.lambda,
            lambda1_bessel: j * j / (r * r),
            sobolev_s: sobolev_constant(),
            omega4: OMEGA4,
        })
    }
}

pub fn ball_volume(radius: f64) -> f64 {
    PI * PI * radius.powi(4) / 2.0
}

/// Best Sobolev constant S of D^{1,2}(R⁴) ↪ L⁴(R⁴); S² = 32π²/3.
pub fn sobolev_constant() -> f64 {
    (32.0 * PI * PI / 3.0).sqrt()
}

fn unit_ball_eigenvalue() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        let fine = |n| {
            let grid = RadialGrid::new(1.0, n).expect("valid grid");
            principal_eigenpair(&grid)
                .expect("eigen solve on unit ball")
                .lambda
        };
        let (a, b) = (fine(2048), fine(4096));
        (4.0 * b - a) / 3.0
    })
}

/// Volume, λ₁ and constants of B_R. λ₁ comes from a Richardson-extrapolated
/// radial eigen-solve on the unit ball, scaled by R⁻².
pub fn ball_geometry(radius: f64) -> Result<DomainConstants> {
    if !(radius > 0.0 && radius.is_finite()) {
        return domain(format!("radius must be positive, got {radius}"));
    }
    let j = bessel_j1_first_zero();
    Ok(DomainConstants {
        radius,
        volume: ball_volume(radius),
        lambda1_omega: unit_ball_eigenvalue() / (radius * radius),
        lambda1_bessel: j * j / (radius * radius),
        sobolev_s: sobolev_constant(),
        omega4: OMEGA4,
    })
}

/// Λ = min_i μᵢ/(μᵢ + θᵢ e^{λᵢ/θᵢ−1})².
pub fn lambda_cap(p: &ParameterSet) -> Result<f64> {
    if !p.sigma1_both() {
        return precondition(format!(
            "lambda cap needs theta1, theta2 > 0 (got {}, {})",
            p.theta1, p.theta2
        ));
    }
    let term = |c: Component| c.mu / (c.mu + c.theta * (c.lambda / c.theta - 1.0).exp()).powi(2);
    Ok(term(p.component(0)).min(term(p.component(1))))
}

/// β₁ = min{μ₁, μ₂, √μ₁/(2√(2(μ₁⁻¹+μ₂⁻¹))), √μ₂/(2√(2(μ₁⁻¹+μ₂⁻¹)))}.
pub fn beta1_threshold(p: &ParameterSet) -> f64 {
    beta1_from_mu(p.mu1, p.mu2)
}

pub fn beta1_from_mu(mu1: f64, mu2: f64) -> f64 {
    // √μᵢ/(2√(2(μ₁⁻¹+μ₂⁻¹))) = ¼√(μᵢh) with h the harmonic mean; this
    // form of h is exact for μ₁ = μ₂, so β₁(μ,μ) = μ/4 in floating point.
    let h = mu1 * (2.0 * mu2 / (mu1 + mu2));
    mu1.min(mu2)
        .min(0.25 * (mu1 * h).sqrt())
        .min(0.25 * (mu2 * h).sqrt())
}

/// Largest root of β² − (2/Λ)β + (μ₁+μ₂)/Λ − μ₁μ₂.
pub fn beta2_threshold(p: &ParameterSet) -> Result<f64> {
    beta2_from_cap(lambda_cap(p)?, p.mu1, p.mu2)
}

pub fn beta2_from_cap(cap: f64, mu1: f64, mu2: f64) -> Result<f64> {
    let inv = 1.0 / cap;
    let disc = (inv - mu1) * (inv - mu2);
    if !(disc >= 0.0) {
        return Err(Error::Numeric(format!(
            "threshold quadratic has no real roots (discriminant {disc:e}); inconsistent cap {cap}"
        )));
    }
    let root = inv + disc.sqrt();
    if !(root > mu1.max(mu2)) {
        return Err(Error::Numeric(format!(
            "degenerate threshold: largest root {root} does not exceed max(mu1, mu2) = {}",
            mu1.max(mu2)
        )));
    }
    Ok(root)
}

/// Solves μ₁k + βl = 1, βk + μ₂l = 1.
pub fn solve_kl(mu1: f64, mu2: f64, beta: f64) -> Result<(f64, f64)> {
    let det = mu1 * mu2 - beta * beta;
    if det.abs() <= 1e-14 * (mu1 * mu2).abs().max(beta * beta) {
        return Err(Error::Singular(format!(
            "beta^2 = mu1*mu2 ({} vs {})",
            beta * beta,
            mu1 * mu2
        )));
    }
    Ok(((mu2 - beta) / det, (mu1 - beta) / det))
}

/// Limit level 𝓐 of the critical system without lower-order terms.
pub fn limit_level_a(p: &ParameterSet, dc: &DomainConstants) -> Result<f64> {
    let s2 = dc.s2();
    if p.beta < 0.0 {
        return Ok(0.25 * (1.0 / p.mu1 + 1.0 / p.mu2) * s2);
    }
    if p.beta < p.min_mu() || p.beta > p.max_mu() {
        let (k, l) = solve_kl(p.mu1, p.mu2, p.beta)?;
        return Ok(0.25 * (k + l) * s2);
    }
    Err(Error::Unsupported(format!(
        "beta = {} lies in [min mu, max mu] = [{}, {}]",
        p.beta,
        p.min_mu(),
        p.max_mu()
    )))
}

/// Closed-form bracket [lower, upper) for the single-equation least level
/// with θ > 0.
pub fn single_level_bracket(c: Component, s2: f64) -> (f64, f64) {
    let lower = c.mu * s2 / (4.0 * (c.mu + c.theta * (c.lambda / c.theta - 1.0).exp()).powi(2));
    (lower, 0.25 * s2 / c.mu)
}

/// 32 e^{λᵢ/θᵢ}/(μᵢR²) for the mountain-pass radius gate.
pub fn radius_gate_value(c: Component, radius: f64) -> f64 {
    32.0 * (c.lambda / c.theta).exp() / (c.mu * radius * radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym(lambda: f64, mu: f64, theta: f64, beta: f64) -> ParameterSet {
        ParameterSet::symmetric(lambda, mu, theta, beta, 1.0)
    }

    #[test]
    fn unit_ball_constants() {
        let dc = ball_geometry(1.0).unwrap();
        assert_relative_eq!(dc.volume, PI * PI / 2.0, max_relative = 1e-15);
        let j = bessel_j1_first_zero();
        assert_relative_eq!(j, 3.831705970207512, max_relative = 1e-13);
        assert_relative_eq!(dc.lambda1_omega, j * j, max_relative = 1e-6);
        let dc2 = ball_geometry(2.0).unwrap();
        assert_relative_eq!(
            dc2.lambda1_omega,
            dc.lambda1_omega / 4.0,
            max_relative = 1e-14
        );
        assert!(ball_geometry(0.0).is_err());
        assert!(ball_geometry(-1.0).is_err());
    }

    #[test]
    fn sobolev_value() {
        assert_relative_eq!(
            sobolev_constant().powi(2),
            105.27578027828648,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lambda_cap_examples() {
        assert_relative_eq!(
            lambda_cap(&sym(1.0, 1.0, 1.0, 0.1)).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        let tiny = lambda_cap(&sym(-1.0, 1.0, 1e-6, 0.1)).unwrap();
        assert!((tiny - 1.0).abs() < 1e-6);
        // θ₁e^{λ₁/θ₁−1} = 1 and θ₂e^{λ₂/θ₂−1} → 0
        let p = ParameterSet {
            lambda1: 1.0,
            mu1: 1.0,
            theta1: 1.0,
            lambda2: -1.0,
            mu2: 4.0,
            theta2: 1e-9,
            beta: 0.1,
            radius: 1.0,
        };
        assert_relative_eq!(lambda_cap(&p).unwrap(), 0.25, max_relative = 1e-12);
        assert!(matches!(
            lambda_cap(&sym(0.0, 1.0, -1.0, 0.1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn beta1_examples() {
        assert_eq!(beta1_from_mu(1.0, 1.0), 0.25);
        for mu in [0.3, 1.0, 2.0, 7.5] {
            assert_relative_eq!(beta1_from_mu(mu, mu), mu / 4.0, max_relative = 1e-15);
        }
        assert_relative_eq!(
            beta1_from_mu(1.0, 100.0),
            1.0 / (2.0 * 2.02f64.sqrt()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn beta2_examples() {
        assert_relative_eq!(
            beta2_from_cap(0.25, 1.0, 1.0).unwrap(),
            7.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            beta2_from_cap(0.2, 1.0, 2.0).unwrap(),
            5.0 + 12f64.sqrt(),
            max_relative = 1e-15
        );
        // double root at β = μ is flagged rather than returned
        assert!(matches!(
            beta2_from_cap(1.0, 1.0, 1.0),
            Err(Error::Numeric(_))
        ));
        // Λ between 1/μ₂ and 1/μ₁ gives a negative discriminant
        assert!(matches!(
            beta2_from_cap(0.7, 1.0, 2.0),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn kl_examples() {
        let (k, l) = solve_kl(2.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(k, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(l, 1.0 / 3.0, max_relative = 1e-15);
        let (k, l) = solve_kl(2.0, 3.0, 1.0).unwrap();
        assert_relative_eq!(k, 0.4, max_relative = 1e-15);
        assert_relative_eq!(l, 0.2, max_relative = 1e-15);
        assert!(matches!(solve_kl(1.0, 4.0, 2.0), Err(Error::Singular(_))));
    }

    #[test]
    fn limit_level_cases() {
        let dc = ball_geometry(1.0).unwrap();
        let s2 = dc.s2();
        assert_relative_eq!(
            limit_level_a(&sym(0.0, 1.0, 1.0, -1.0), &dc).unwrap(),
            s2 / 2.0
        );
        assert_relative_eq!(
            limit_level_a(&sym(0.0, 1.0, 1.0, 0.5), &dc).unwrap(),
            s2 / 3.0,
            max_relative = 1e-14
        );
        let below = limit_level_a(&sym(0.0, 1.0, 1.0, -1e-9), &dc).unwrap();
        let above = limit_level_a(&sym(0.0, 1.0, 1.0, 1e-9), &dc).unwrap();
        assert!((below - s2 / 2.0).abs() < 1e-6 && (above - s2 / 2.0).abs() < 1e-6);
        let mut p = sym(0.0, 1.0, 1.0, 2.0);
        p.mu2 = 3.0;
        assert!(matches!(limit_level_a(&p, &dc), Err(Error::Unsupported(_))));
    }

    #[test]
    fn validation() {
        assert!(sym(0.0, 1.0, 1.0, 0.0).validate().is_err());
        assert!(sym(0.0, -1.0, 1.0, 1.0).validate().is_err());
        assert!(ParameterSet {
            radius: 0.0,
            ..sym(0.0, 1.0, 1.0, 1.0)
        }
        .validate()
        .is_err());
        assert!(sym(0.0, 1.0, 1.0, 1.0).validate().is_ok());
    }
}
