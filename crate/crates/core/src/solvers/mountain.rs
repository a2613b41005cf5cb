//! Mountain pass by path deformation: interior samples of a polyline
//! follow −∇𝓛, and one sample is kept on the highest point of the path.

use std::sync::Arc;

use serde::Serialize;

use super::{
    default_local_init, finish_top, minimize_local_ball, relative_gradient, rho_delta, strong_ok,
    SolveResult, SolverOptions,
};
use crate::error::{precondition, Error, Result};
use crate::functionals::{energy_l, grad_l, StatePair};
use crate::params::{golden_max, solve_kl, DomainConstants, ParameterSet};
use crate::radial::{principal_eigenpair, RadialField, RadialGrid};

pub const MAX_SWEEPS: usize = 3000;

#[derive(Debug, Clone, Serialize)]
pub struct PathState {
    pub samples: Vec<StatePair>,
    pub energies: Vec<f64>,
    pub max_index: usize,
    pub max_energy: f64,
}

/// Highest point of the piecewise-linear path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPeak {
    pub segment: usize,
    /// position inside the segment, 0..=1
    pub s: f64,
    pub energy: f64,
}

impl PathState {
    pub fn new(samples: Vec<StatePair>, p: &ParameterSet) -> Result<Self> {
        let energies = samples
            .iter()
            .map(|s| energy_l(s, p).map(|e| e.total))
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite energy at path sample {k}"
            )));
        }
        let (max_index, max_energy) =
            energies
                .iter()
                .cloned()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |a, (i, e)| if e > a.1 { (i, e) } else { a },
                );
        Ok(PathState {
            samples,
            energies,
            max_index,
            max_energy,
        })
    }

    fn point(&self, j: usize, s: f64) -> StatePair {
        self.samples[j]
            .scaled(1.0 - s, 1.0 - s)
            .axpy(s, &self.samples[j + 1])
    }

    /// Maximum of 𝓛 along the polyline: three probes per segment, golden
    /// refinement on the three most promising segments.
    pub fn peak(&self, p: &ParameterSet) -> Result<PathPeak> {
        chord_peak(&self.samples, &self.energies, p, 3)
    }
}

fn chord_peak(
    samples: &[StatePair],
    energies: &[f64],
    p: &ParameterSet,
    refine: usize,
) -> Result<PathPeak> {
    let e_at = |j: usize, s: f64| -> f64 {
        let x = samples[j].scaled(1.0 - s, 1.0 - s).axpy(s, &samples[j + 1]);
        energy_l(&x, p).map(|e| e.total).unwrap_or(f64::NAN)
    };
    let mut coarse = Vec::with_capacity(samples.len() - 1);
    for j in 0..samples.len() - 1 {
        let mut best = if energies[j] >= energies[j + 1] {
            (energies[j], 0.0)
        } else {
            (energies[j + 1], 1.0)
        };
        for s in [0.25, 0.5, 0.75] {
            let e = e_at(j, s);
            if !e.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite energy inside segment {j}"
                )));
            }
            if e > best.0 {
                best = (e, s);
            }
        }
        coarse.push((best.0, j, best.1));
    }
    coarse.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut top = PathPeak {
        segment: coarse[0].1,
        s: coarse[0].2,
        energy: coarse[0].0,
    };
    for &(e0, j, s0) in coarse.iter().take(refine) {
        let s = golden_max(
            |s| e_at(j, s),
            (s0 - 0.25).max(0.0),
            (s0 + 0.25).min(1.0),
            1e-9,
        );
        let e = e_at(j, s);
        let (e, s) = if e > e0 { (e, s) } else { (e0, s0) };
        if e > top.energy {
            top = PathPeak {
                segment: j,
                s,
                energy: e,
            };
        }
    }
    Ok(top)
}

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassResult {
    pub path: PathState,
    /// Maximum along the final piecewise-linear path: an upper bound for
    /// the mountain-pass level.
    pub level: f64,
    pub peak: PathPeak,
    /// Path maximum after each accepted sweep.
    pub max_history: Vec<f64>,
    pub sweeps: usize,
    /// The highest sample as a solve result.
    pub top: SolveResult,
}

/// Longest over shortest segment.
fn spacing_ratio(samples: &[StatePair]) -> f64 {
    let d: Vec<f64> = samples
        .windows(2)
        .map(|w| w[1].axpy(-1.0, &w[0]).h_norm())
        .collect();
    let hi = d.iter().cloned().fold(0.0, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn reparametrize(samples: &[StatePair]) -> Result<Vec<StatePair>> {
    let m = samples.len() - 1;
    let mut cum = vec![0.0; m + 1];
    for i in 0..m {
        let d = samples[i + 1].axpy(-1.0, &samples[i]).h_norm();
        if !(d > 1e-12) {
            return Err(Error::Numeric(format!(
                "path collapse between samples {i} and {}",
                i + 1
            )));
        }
        cum[i + 1] = cum[i] + d;
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(m + 1);
    out.push(samples[0].clone());
    let mut j = 0;
    for k in 1..m {
        let target = total * k as f64 / m as f64;
        while j + 1 < m && cum[j + 1] < target {
            j += 1;
        }
        let w = (target - cum[j]) / (cum[j + 1] - cum[j]);
        let a = samples[j].scaled(1.0 - w, 1.0 - w);
        out.push(a.axpy(w, &samples[j + 1]));
    }
    out.push(samples[m].clone());
    Ok(out)
}

/// Moves a sample onto the path peak when the peak sits inside a segment.
/// Near a vertex the vertex itself is moved; otherwise a low sample whose
/// neighbours' chord stays below the peak is dropped and the peak inserted.
fn resolve_peak(path: PathState, peak: PathPeak, p: &ParameterSet) -> Result<PathState> {
    let m = path.samples.len() - 1;
    let j = peak.segment;
    if peak.s <= 0.0 || peak.s >= 1.0 {
        return Ok(path);
    }
    let near = if peak.s < 0.5 { j } else { j + 1 };
    if (peak.s <= 0.05 || peak.s >= 0.95) && near != 0 && near != m {
        let mut samples = path.samples.clone();
        samples[near] = path.point(j, peak.s);
        return PathState::new(samples, p);
    }
    if peak.s <= 0.05 || peak.s >= 0.95 {
        return Ok(path);
    }
    let mut order: Vec<usize> = (1..m).filter(|&k| k != j && k != j + 1).collect();
    let height = |k: usize| {
        path.energies[k - 1]
            .max(path.energies[k])
            .max(path.energies[k + 1])
    };
    order.sort_by(|&a, &b| height(a).total_cmp(&height(b)));
    for &k in order.iter().take(4) {
        let pair = [path.samples[k - 1].clone(), path.samples[k + 1].clone()];
        let ends = [path.energies[k - 1], path.energies[k + 1]];
        let chord = chord_peak(&pair, &ends, p, 1)?;
        if chord.energy < peak.energy {
            let mut samples = path.samples.clone();
            let new = path.point(j, peak.s);
            samples.remove(k);
            let at = if k < j + 1 { j } else { j + 1 };
            samples.insert(at, new);
            return PathState::new(samples, p);
        }
    }
    Ok(path)
}

/// Deforms the straight path end_a → end_b downhill with the endpoints
/// pinned. Only samples above both endpoint energies move, each by at most
/// half its shorter adjacent segment, and a sweep is kept only if the
/// maximum along the polyline does not increase.
pub fn mountain_pass(
    p: &ParameterSet,
    end_a: &StatePair,
    end_b: &StatePair,
    segments: usize,
    opts: &SolverOptions,
) -> Result<MountainPassResult> {
    if segments < 2 {
        return precondition("mountain pass needs at least 2 segments");
    }
    let ea = energy_l(end_a, p)?;
    let eb = energy_l(end_b, p)?;
    if !(eb.total < ea.total) {
        return precondition(format!(
            "far endpoint energy {} is not below the start energy {}",
            eb.total, ea.total
        ));
    }
    let floor = ea.total.max(eb.total);
    let init: Vec<StatePair> = (0..=segments)
        .map(|k| {
            let w = k as f64 / segments as f64;
            end_a.scaled(1.0 - w, 1.0 - w).axpy(w, end_b)
        })
        .collect();
    let mut path = PathState::new(reparametrize(&init)?, p)?;
    let mut peak = path.peak(p)?;
    let mut history = vec![peak.energy];
    let mut alpha = 0.5f64;
    let mut sweeps = 0;
    let cap = MAX_SWEEPS.min(opts.max_iter);
    let mut converged = false;
    let mut stall = 0;
    loop {
        let resolved = resolve_peak(path.clone(), peak, p)?;
        let rp = resolved.peak(p)?;
        if rp.energy <= peak.energy {
            path = resolved;
            peak = rp;
        }
        let top = &path.samples[path.max_index];
        let gtop = grad_l(top, p)?;
        if path.max_index != 0
            && path.max_index != segments
            && relative_gradient(&gtop, top) <= opts.tol
            && strong_ok(top, p, opts.tol)?
        {
            converged = true;
            break;
        }
        if sweeps == cap {
            break;
        }
        let lengths: Vec<f64> = path
            .samples
            .windows(2)
            .map(|w| w[1].axpy(-1.0, &w[0]).h_norm())
            .collect();
        // Gradients with the component along the path removed.
        let mut grads = Vec::with_capacity(segments - 1);
        for k in 1..segments {
            if path.energies[k] <= floor {
                grads.push(None);
                continue;
            }
            let g = grad_l(&path.samples[k], p)?;
            let tau = path.samples[k + 1].axpy(-1.0, &path.samples[k - 1]);
            let tn = tau.h_norm();
            grads.push(Some(if tn > 0.0 {
                g.axpy(-g.h_inner(&tau) / (tn * tn), &tau)
            } else {
                g
            }));
        }
        let mut accepted = None;
        while alpha > 1e-12 {
            let mut moved = Vec::with_capacity(segments + 1);
            moved.push(path.samples[0].clone());
            for (k, (s, g)) in path.samples[1..segments].iter().zip(&grads).enumerate() {
                match g {
                    Some(g) => {
                        let room = 0.5 * lengths[k].min(lengths[k + 1]);
                        let gn = g.h_norm();
                        let a = if gn > 0.0 { alpha.min(room / gn) } else { 0.0 };
                        moved.push(s.axpy(-a, g));
                    }
                    None => moved.push(s.clone()),
                }
            }
            moved.push(path.samples[segments].clone());
            let mut tries = Vec::new();
            if spacing_ratio(&moved) > 8.0 {
                tries.push(reparametrize(&moved));
            }
            tries.push(Ok(moved));
            for t in tries {
                let Ok(c) = t.and_then(|m| PathState::new(m, p)) else {
                    continue;
                };
                let Ok(cp) = c.peak(p) else { continue };
                if cp.energy <= peak.energy {
                    accepted = Some((c, cp));
                    break;
                }
            }
            if accepted.is_some() {
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_peak)) = accepted else {
            break;
        };
        let gain = peak.energy - next_peak.energy;
        path = next;
        peak = next_peak;
        history.push(peak.energy);
        sweeps += 1;
        alpha = (alpha * 1.5).min(2.0);
        if gain <= 1e-13 * peak.energy.abs().max(1.0) {
            stall += 1;
            if stall >= 50 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    let top_state = path.samples[path.max_index].clone();
    let top = finish_top(&top_state, p, opts.tol, sweeps, converged, &history)?;
    Ok(MountainPassResult {
        level: peak.energy,
        peak,
        path,
        max_history: history,
        sweeps,
        top,
    })
}

/// Default endpoints: the local minimizer (or the origin) and a far state
/// along the cheaper of the diagonal (√k e₁, √l e₁) and semi-trivial
/// directions.
pub fn default_mountain_endpoints(
    p: &ParameterSet,
    grid: &Arc<RadialGrid>,
    dc: &DomainConstants,
    opts: &SolverOptions,
) -> Result<(StatePair, StatePair)> {
    let end_a = match rho_delta(p, dc) {
        Ok(rd) if p.theta_negative_both() => {
            let init = default_local_init(p, grid, 0.5 * rd.rho)?;
            minimize_local_ball(p, &init, rd.rho, opts)?.state
        }
        _ => StatePair::zeros(grid),
    };
    let e1 = principal_eigenpair(grid)?.vector;
    let zero = RadialField::zeros(grid);
    let diag = solve_kl(p.mu1, p.mu2, p.beta)
        .ok()
        .filter(|(k, l)| *k > 0.0 && *l > 0.0 && k + l < 1.0 / p.max_mu());
    let dir = match diag {
        Some((k, l)) => StatePair {
            u: e1.scaled(k.sqrt()),
            v: e1.scaled(l.sqrt()),
        },
        None if p.mu1 >= p.mu2 => StatePair {
            u: e1.clone(),
            v: zero,
        },
        None => StatePair {
            u: zero,
            v: e1.clone(),
        },
    };
    let ea = energy_l(&end_a, p)?.total;
    let mut t = 1.0;
    loop {
        let b = dir.scaled(t, t);
        if energy_l(&b, p)?.total < ea {
            return Ok((end_a, b));
        }
        t *= 2.0;
        if t > 1e12 {
            return Err(Error::Numeric(
                "no far endpoint with energy below the start".into(),
            ));
        }
    }
}
