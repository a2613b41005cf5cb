use serde::Serialize;

use super::{Component, DomainConstants, ParameterSet};
use crate::error::{precondition, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Sigma1,
    Sigma2,
    Sigma3,
    Sigma4,
    A1,
    A2,
    A3,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionLabel {
    pub region: Region,
    pub margin: f64,
    /// 1 or 2 for per-component sets, absent for system-level sets.
    pub component: Option<u8>,
}

/// Log-spaced search window for the ε-shift and its grid size.
pub const EPS_WINDOW: (f64, f64) = (1e-6, 1e6);
pub const EPS_GRID_POINTS: usize = 121;

/// Margins of the three A-regions, `None` when the sign/range side
/// conditions of the region fail.
pub fn a_region_margins(p: &ParameterSet, dc: &DomainConstants) -> [Option<f64>; 3] {
    if !p.theta_negative_both() || !(p.mu1 > 0.0 && p.mu2 > 0.0) {
        return [None; 3];
    }
    let l1 = dc.lambda1_omega;
    let s2 = dc.s2();
    let vol = dc.volume;
    let maxmu = p.max_mu();
    let in_range = |l: f64| (0.0..l1).contains(&l);
    let a1 = (in_range(p.lambda1) && in_range(p.lambda2)).then(|| {
        let m = (l1 - p.lambda1).min(l1 - p.lambda2);
        m * m * s2 / (l1 * l1 * maxmu) + 2.0 * (p.theta1 + p.theta2) * vol
    });
    let a2 = in_range(p.lambda1).then(|| {
        let m = l1 - p.lambda1;
        m * m * s2 / (l1 * l1 * maxmu)
            + 2.0 * (p.theta1 + p.theta2 * (-p.lambda2 / p.theta2).exp()) * vol
    });
    let a3 = Some(
        s2 / maxmu
            + 2.0
                * (p.theta1 * (-p.lambda1 / p.theta1).exp()
                    + p.theta2 * (-p.lambda2 / p.theta2).exp())
                * vol,
    );
    [a1, a2, a3]
}

/// Σ-set margins of a single component: (region, margin, member).
pub fn sigma_margins(c: Component, dc: &DomainConstants) -> Vec<(Region, f64, bool)> {
    let mut out = Vec::new();
    if c.theta > 0.0 {
        out.push((Region::Sigma1, c.theta, true));
        return out;
    }
    if c.theta < 0.0 {
        let l1 = dc.lambda1_omega;
        let t = c.theta;
        let s2m = -t + t * (-t).ln() - t * c.mu.ln() + c.lambda - l1;
        out.push((Region::Sigma2, s2m, s2m >= 0.0));
        if (0.0..l1).contains(&c.lambda) {
            let m = l1 - c.lambda;
            let s3m = m * m * dc.s2() / (l1 * l1 * c.mu) + 2.0 * t * dc.volume;
            out.push((Region::Sigma3, s3m, s3m > 0.0));
        }
        let s4m = dc.s2() / c.mu + 2.0 * t * (-c.lambda / t).exp() * dc.volume;
        out.push((Region::Sigma4, s4m, s4m > 0.0));
    }
    out
}

/// Every region containing `p`, with signed margins.
pub fn region_membership(p: &ParameterSet, dc: &DomainConstants) -> Vec<RegionLabel> {
    let mut out = Vec::new();
    for i in 0..2 {
        for (region, margin, member) in sigma_margins(p.component(i), dc) {
            if member {
                out.push(RegionLabel {
                    region,
                    margin,
                    component: Some(i as u8 + 1),
                });
            }
        }
    }
    let kinds = [Region::A1, Region::A2, Region::A3];
    for (kind, m) in kinds.iter().zip(a_region_margins(p, dc)) {
        if let Some(m) = m {
            if m > 0.0 {
                out.push(RegionLabel {
                    region: *kind,
                    margin: m,
                    component: None,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonShift {
    pub epsilon: f64,
    pub label: RegionLabel,
    pub shifted_mu1: f64,
    pub shifted_mu2: f64,
}

impl EpsilonShift {
    pub fn shifted(&self, p: &ParameterSet) -> ParameterSet {
        ParameterSet {
            mu1: self.shifted_mu1,
            mu2: self.shifted_mu2,
            ..*p
        }
    }
}

fn shifted(p: &ParameterSet, eps: f64) -> ParameterSet {
    ParameterSet {
        mu1: p.mu1 + p.beta * eps,
        mu2: p.mu2 + p.beta / eps,
        ..*p
    }
}

/// Searches ε > 0 with (λ₁, μ₁+βε, θ₁; λ₂, μ₂+β/ε, θ₂) in A₁, A₂ or A₃.
pub fn epsilon_shift_search(
    p: &ParameterSet,
    dc: &DomainConstants,
) -> Result<Option<EpsilonShift>> {
    if !(p.beta > 0.0) {
        return precondition(format!("epsilon shift needs beta > 0, got {}", p.beta));
    }
    let (lo, hi) = (EPS_WINDOW.0.log10(), EPS_WINDOW.1.log10());
    let step = (hi - lo) / (EPS_GRID_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..EPS_GRID_POINTS).map(|k| lo + step * k as f64).collect();
    let kinds = [Region::A1, Region::A2, Region::A3];
    for (idx, kind) in kinds.iter().enumerate() {
        let margin = |x: f64| a_region_margins(&shifted(p, 10f64.powf(x)), dc)[idx];
        if margin(0.0).is_none() {
            continue;
        }
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x| margin(x).unwrap_or(f64::NEG_INFINITY))
            .collect();
        let (kbest, &vbest) =
            vals.iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |acc, (k, v)| {
                    if *v > *acc.1 {
                        (k, v)
                    } else {
                        acc
                    }
                });
        let a = xs[kbest.saturating_sub(1)];
        let b = xs[(kbest + 1).min(EPS_GRID_POINTS - 1)];
        let xr = golden_max(
            |x| margin(x).unwrap_or(f64::NEG_INFINITY),
            a,
            b,
            1e-10 / std::f64::consts::LN_10,
        );
        let vr = margin(xr).unwrap_or(f64::NEG_INFINITY);
        let (x, v) = if vr >= vbest {
            (xr, vr)
        } else {
            (xs[kbest], vbest)
        };
        if v > 0.0 {
            let eps = 10f64.powf(x);
            let q = shifted(p, eps);
            return Ok(Some(EpsilonShift {
                epsilon: eps,
                label: RegionLabel {
                    region: *kind,
                    margin: v,
                    component: None,
                },
                shifted_mu1: q.mu1,
                shifted_mu2: q.mu2,
            }));
        }
    }
    Ok(None)
}

/// Golden-section maximization on [a, b] down to width `tol`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
