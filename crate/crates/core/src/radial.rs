//! Radial discretization of the ball B_R in R^4.
//!
//! Cell-centered mesh: node j sits at the middle of the shell
//! ((j-1)h, jh). Quadrature weights are the exact shell volumes
//! ∫ r^3 dr over each cell, so constants integrate exactly and smooth
//! integrands converge at second order. The stiffness matrix pairs with
//! the weights by summation by parts, which makes the discrete weak form
//! and the discrete Laplacian exact duals.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{domain, numeric, Error, Result};
use crate::fmt17;

/// Surface area of the unit 3-sphere.
pub const OMEGA4: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Floor below which log-integrands treat a value as zero.
pub const LOG_FLOOR: f64 = 1e-150;

#[derive(Debug, Clone)]
pub struct RadialGrid {
    radius: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.radius == other.radius
    }
}

impl RadialGrid {
    pub fn new(radius: f64, n: usize) -> Result<Arc<Self>> {
        if !(radius > 0.0 && radius.is_finite()) {
            return domain(format!("radius must be positive, got {radius}"));
        }
        if n < 16 {
            return domain(format!("grid needs at least 16 nodes, got {n}"));
        }
        let h = radius / n as f64;
        let face = |j: usize| j as f64 * h;
        let nodes: Vec<f64> = (1..=n).map(|j| (j as f64 - 0.5) * h).collect();
        let weights: Vec<f64> = (1..=n)
            .map(|j| (face(j).powi(4) - face(j - 1).powi(4)) / 4.0)
            .collect();
        // coupling through interior faces; the last node carries the
        // Dirichlet face at r = R with half spacing
        let coef: Vec<f64> = (1..=n)
            .map(|j| {
                if j < n {
                    face(j).powi(3) / h
                } else {
                    2.0 * radius.powi(3) / h
                }
            })
            .collect();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for j in 0..n {
            diag[j] = coef[j] + if j > 0 { coef[j - 1] } else { 0.0 };
            if j + 1 < n {
                off[j] = -coef[j];
            }
        }
        Ok(Arc::new(RadialGrid {
            radius,
            n,
            h,
            nodes,
            weights,
            diag,
            off,
        }))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for ∫_0^R f(r) r^3 dr (without the ω₄ factor).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// |B_R| as seen by the quadrature.
    pub fn volume(&self) -> f64 {
        OMEGA4 * self.weights.iter().sum::<f64>()
    }

    /// Stiffness product K f, so that fᵀK f = ∫_0^R (f')^2 r^3 dr.
    pub fn stiffness_apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for j in 0..n {
            let mut acc = self.diag[j] * f[j];
            if j > 0 {
                acc += self.off[j - 1] * f[j - 1];
            }
            if j + 1 < n {
                acc += self.off[j] * f[j + 1];
            }
            out[j] = acc;
        }
        out
    }

    /// Solves K x = b by the Thomas algorithm.
    pub fn stiffness_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom.abs() < f64::MIN_POSITIVE {
            return numeric("tridiagonal solve: zero pivot at row 0");
        }
        if n > 1 {
            c[0] = self.off[0] / denom;
        }
        d[0] = b[0] / denom;
        for j in 1..n {
            denom = self.diag[j] - self.off[j - 1] * c[j - 1];
            if !(denom.abs() > f64::MIN_POSITIVE) {
                return numeric(format!("tridiagonal solve: zero pivot at row {j}"));
            }
            if j + 1 < n {
                c[j] = self.off[j] / denom;
            }
            d[j] = (b[j] - self.off[j - 1] * d[j - 1]) / denom;
        }
        let mut x = d;
        for j in (0..n - 1).rev() {
            let next = x[j + 1];
            x[j] -= c[j] * next;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return numeric("tridiagonal solve produced non-finite values");
        }
        Ok(x)
    }
}

#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return domain(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.n
            ));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite field value at node {j}"));
        }
        Ok(RadialField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        RadialField {
            grid: grid.clone(),
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        RadialField {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_raw(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        RadialField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_grid(&self, other: &RadialField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            domain(format!(
                "grid mismatch: (R={}, n={}) vs (R={}, n={})",
                self.grid.radius, self.grid.n, other.grid.radius, other.grid.n
            ))
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RadialField::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &RadialField) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        RadialField::from_raw(&self.grid, values)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    pub fn min_interior(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn has_positive_part(&self) -> bool {
        self.values.iter().any(|&v| v > 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn l2_inner(&self, other: &RadialField) -> f64 {
        OMEGA4
            * self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.grid.weights)
                .map(|((a, b), w)| a * b * w)
                .sum::<f64>()
    }

    /// ∫ ∇f·∇g through the summation-by-parts stiffness.
    pub fn h1_inner(&self, other: &RadialField) -> f64 {
        let kg = self.grid.stiffness_apply(&other.values);
        OMEGA4 * self.values.iter().zip(&kg).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn h1_norm(&self) -> f64 {
        dirichlet_energy(self).max(0.0).sqrt()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r,value")?;
        for (r, v) in self.grid.nodes.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt17(*r), fmt17(*v))?;
        }
        Ok(())
    }
}

impl Serialize for RadialField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            radius: f64,
            n: usize,
            values: &'a [f64],
        }
        Repr {
            radius: self.grid.radius,
            n: self.grid.n,
            values: &self.values,
        }
        .serialize(s)
    }
}

/// ω₄ Σ w_j |f_j|^p.
pub fn integrate_power(f: &RadialField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("exponent must be >= 1, got {p}"));
    }
    let integer = p.fract() == 0.0;
    if !integer && f.values.iter().any(|&v| v < 0.0) {
        return domain("negative field values with a fractional exponent");
    }
    let w = &f.grid.weights;
    let sum: f64 = if integer && p <= 8.0 {
        let k = p as i32;
        f.values
            .iter()
            .zip(w)
            .map(|(v, w)| v.abs().powi(k) * w)
            .sum()
    } else {
        f.values
            .iter()
            .zip(w)
            .map(|(v, w)| v.abs().powf(p) * w)
            .sum()
    };
    Ok(OMEGA4 * sum)
}

/// |∇f|_2^2 via the stiffness pairing.
pub fn dirichlet_energy(f: &RadialField) -> f64 {
    f.h1_inner(f)
}

/// ∫ (f⁺)^2 log (f⁺)^2, continuously extended by zero.
pub fn log_moment(f: &RadialField) -> f64 {
    OMEGA4
        * f.values
            .iter()
            .zip(&f.grid.weights)
            .map(|(&v, w)| w * s2_log_s2(v))
            .sum::<f64>()
}

/// (s⁺)^2 log (s⁺)^2 with the zero extension.
#[inline]
pub fn s2_log_s2(s: f64) -> f64 {
    if s <= LOG_FLOOR {
        0.0
    } else {
        let s2 = s * s;
        s2 * s2.ln()
    }
}

/// Distance, in cells, from the peak of |f| outward to where |f| first falls
/// below half the peak. None for the zero field or a peak at the last node.
pub fn half_width_cells(f: &RadialField) -> Option<f64> {
    let (k, m) =
        f.values.iter().enumerate().fold(
            (0, 0.0),
            |a, (i, v)| if v.abs() > a.1 { (i, v.abs()) } else { a },
        );
    if m == 0.0 {
        return None;
    }
    let j = f.values[k..].iter().position(|v| v.abs() < 0.5 * m)?;
    Some(j as f64)
}

/// Discrete −Δ f = W⁻¹ K f.
pub fn neg_laplacian(f: &RadialField) -> RadialField {
    let kf = f.grid.stiffness_apply(&f.values);
    let values = kf.iter().zip(&f.grid.weights).map(|(k, w)| k / w).collect();
    RadialField::from_raw(&f.grid, values)
}

/// Solves −Δg = f with g(R) = 0, g'(0) = 0.
pub fn riesz_solve(f: &RadialField) -> Result<RadialField> {
    let b: Vec<f64> = f
        .values
        .iter()
        .zip(&f.grid.weights)
        .map(|(v, w)| v * w)
        .collect();
    let g = f.grid.stiffness_solve(&b)?;
    let kg = f.grid.stiffness_apply(&g);
    let res = kg
        .iter()
        .zip(&b)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = b.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if res > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric(format!(
            "riesz solve residual {res:e} (scale {scale:e})"
        )));
    }
    Ok(RadialField::from_raw(&f.grid, g))
}

#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair {
    pub lambda: f64,
    pub vector: RadialField,
    pub iterations: usize,
    pub residual: f64,
}

/// Principal Dirichlet eigenpair by inverse iteration, |e₁|_2 = 1, e₁ > 0.
pub fn principal_eigenpair(grid: &Arc<RadialGrid>) -> Result<Eigenpair> {
    let w = &grid.weights;
    let norm = |x: &[f64]| (OMEGA4 * x.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>()).sqrt();
    let mut x: Vec<f64> = grid
        .nodes
        .iter()
        .map(|r| 1.0 - (r / grid.radius).powi(2))
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = f64::INFINITY;
    for it in 1..=500 {
        let b: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
        let mut y = grid.stiffness_solve(&b)?;
        let ny = norm(&y);
        y.iter_mut().for_each(|v| *v /= ny);
        let ky = grid.stiffness_apply(&y);
        let num: f64 = y.iter().zip(&ky).map(|(a, b)| a * b).sum();
        let den: f64 = y.iter().zip(w).map(|(a, b)| a * a * b).sum();
        let new_lambda = num / den;
        x = y;
        let settled = (new_lambda - lambda).abs() <= 1e-15 * new_lambda;
        lambda = new_lambda;
        if settled || it == 500 {
            // residual measured as ‖W⁻¹K e − λ e‖_2 / λ
            let r: f64 = ky
                .iter()
                .zip(&x)
                .zip(w)
                .map(|((k, e), w)| {
                    let d = k / w - lambda * e;
                    d * d * w
                })
                .sum::<f64>();
            let residual = (OMEGA4 * r).sqrt() / lambda;
            if !settled && residual > 1e-10 {
                return numeric(format!("eigen iteration stalled, residual {residual:e}"));
            }
            if x[0] < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(Eigenpair {
                lambda,
                vector: RadialField::from_raw(grid, x),
                iterations: it,
                residual,
            });
        }
    }
    unreachable!()
}

/// First positive zero of the Bessel function J₁, from its power series.
pub fn bessel_j1_first_zero() -> f64 {
    let j1 = |x: f64| {
        let q = -(x * x) / 4.0;
        let mut term = x / 2.0;
        let mut sum = term;
        for m in 1..60 {
            term *= q / (m as f64 * (m + 1) as f64);
            sum += term;
        }
        sum
    };
    let j0 = |x: f64| {
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut sum = term;
        for m in 1..60 {
            term *= q / (m as f64 * m as f64);
            sum += term;
        }
        sum
    };
    let mut x = 3.8;
    for _ in 0..50 {
        let step = j1(x) / (j0(x) - j1(x) / x);
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}
