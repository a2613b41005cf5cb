use serde::Deserialize;

use critlog::bubble::{default_r_cut, GapVariant};
use critlog::solvers::{SingleMode, SolverOptions};
use critlog::sweep::SweepAxis;
use critlog::{Execution, ParameterSet};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: Params,
    pub grid: Grid,
    pub tolerances: Tolerances,
    pub run: Run,
    pub solve: Solve,
    pub sweep: Sweep,
    pub bubbles: Bubbles,
    pub probe: Probe,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            lambda1: 0.0,
            lambda2: 0.0,
            mu1: 1.0,
            mu2: 1.0,
            theta1: 1.0,
            theta2: 1.0,
            beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub radius: f64,
    pub n: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            radius: 1.0,
            n: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver_tol: f64,
    pub projection_tol: f64,
    /// relative tolerance of the preflight volume check
    pub quad_check_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = SolverOptions::default();
        Tolerances {
            solver_tol: d.tol,
            projection_tol: d.projection_tol,
            quad_check_tol: 1e-12,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Run {
    pub seeds: Vec<u64>,
    pub execution: Execution,
    pub beta_cap_factor: f64,
}

impl Default for Run {
    fn default() -> Self {
        Run {
            seeds: vec![1],
            execution: Execution::Parallel,
            beta_cap_factor: critlog::params::DEFAULT_BETA_CAP_FACTOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    LocalBall,
    Nehari,
    MountainPass,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Default,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solve {
    pub pipeline: Pipeline,
    pub init: Init,
    pub force: bool,
    pub segments: usize,
    /// component (1 or 2) for the single pipeline
    pub component: u8,
    pub single_mode: SingleMode,
}

impl Default for Solve {
    fn default() -> Self {
        Solve {
            pipeline: Pipeline::LocalBall,
            init: Init::Default,
            force: false,
            segments: 24,
            component: 1,
            single_mode: SingleMode::NehariMin,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub key: String,
    pub values: Option<Vec<f64>>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSolveKind {
    None,
    LocalBall,
    Nehari,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub axes: Vec<AxisSpec>,
    pub solve: SweepSolveKind,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            axes: vec![],
            solve: SweepSolveKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    None,
    Nehari,
    LimitTwoScale,
    LimitSingleScale,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bubbles {
    pub eps_list: Vec<f64>,
    /// plateau radius; R/4 when absent
    pub r_cut: Option<f64>,
    pub gap: GapKind,
    /// plateau radius of the gap report; R/2 when absent
    pub gap_r_cut: Option<f64>,
}

impl Default for Bubbles {
    fn default() -> Self {
        Bubbles {
            eps_list: vec![0.2, 0.1, 0.05],
            r_cut: None,
            gap: GapKind::None,
            gap_r_cut: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Probe {
    pub restarts: usize,
}

impl Default for Probe {
    fn default() -> Self {
        Probe { restarts: 50 }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    fn check(&self) -> Result<(), ConfigError> {
        let bad =
            |key: &str, why: String| Err(ConfigError(format!("invalid value for `{key}`: {why}")));
        if self.grid.n < 16 {
            return bad(
                "grid.n",
                format!("need at least 16 nodes, got {}", self.grid.n),
            );
        }
        if !(self.grid.radius > 0.0 && self.grid.radius.is_finite()) {
            return bad(
                "grid.radius",
                format!("must be positive, got {}", self.grid.radius),
            );
        }
        if !(self.tolerances.solver_tol > 0.0) {
            return bad(
                "tolerances.solver_tol",
                format!("must be positive, got {}", self.tolerances.solver_tol),
            );
        }
        if !(self.tolerances.projection_tol > 0.0) {
            return bad(
                "tolerances.projection_tol",
                format!("must be positive, got {}", self.tolerances.projection_tol),
            );
        }
        if !(self.tolerances.quad_check_tol > 0.0) {
            return bad(
                "tolerances.quad_check_tol",
                format!("must be positive, got {}", self.tolerances.quad_check_tol),
            );
        }
        if self.run.seeds.is_empty() {
            return bad("run.seeds", "needs at least one seed".into());
        }
        if !matches!(self.solve.component, 1 | 2) {
            return bad(
                "solve.component",
                format!("must be 1 or 2, got {}", self.solve.component),
            );
        }
        if self.solve.segments < 2 {
            return bad(
                "solve.segments",
                format!("need at least 2, got {}", self.solve.segments),
            );
        }
        if self.sweep.axes.len() > critlog::sweep::MAX_AXES {
            return bad(
                "sweep.axes",
                format!(
                    "at most {} axes, got {}",
                    critlog::sweep::MAX_AXES,
                    self.sweep.axes.len()
                ),
            );
        }
        for a in &self.sweep.axes {
            if ParameterSet::KEYS.iter().all(|k| *k != a.key) || a.key == "radius" {
                return bad("sweep.axes.key", format!("unknown parameter `{}`", a.key));
            }
            self.axis(a)?;
        }
        if let Err(e) = self.params().validate() {
            return Err(ConfigError(format!("invalid [params]: {e}")));
        }
        Ok(())
    }

    fn axis(&self, a: &AxisSpec) -> Result<SweepAxis, ConfigError> {
        match (&a.values, a.lo, a.hi, a.n) {
            (Some(v), None, None, None) => Ok(SweepAxis { key: a.key.clone(), values: v.clone() }),
            (None, Some(lo), Some(hi), Some(n)) if lo.is_finite() && hi.is_finite() => Ok(SweepAxis::linspace(&a.key, lo, hi, n)),
            _ => Err(ConfigError(format!(
                "invalid value for `sweep.axes` ({}): give either `values` or all of `lo`, `hi`, `n`",
                a.key
            ))),
        }
    }

    pub fn axes(&self) -> Vec<SweepAxis> {
        self.sweep
            .axes
            .iter()
            .map(|a| self.axis(a).expect("checked at parse"))
            .collect()
    }

    pub fn params(&self) -> ParameterSet {
        let p = &self.params;
        ParameterSet {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            mu1: p.mu1,
            mu2: p.mu2,
            theta1: p.theta1,
            theta2: p.theta2,
            beta: p.beta,
            radius: self.grid.radius,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tolerances.solver_tol,
            max_iter: self.tolerances.max_iter,
            projection_tol: self.tolerances.projection_tol,
        }
    }

    pub fn r_cut(&self) -> f64 {
        self.bubbles
            .r_cut
            .unwrap_or(default_r_cut(self.grid.radius))
    }

    pub fn gap_variant(&self) -> Option<GapVariant> {
        match self.bubbles.gap {
            GapKind::LimitTwoScale => Some(GapVariant::TwoScale),
            GapKind::LimitSingleScale => Some(GapVariant::SingleScale),
            _ => None,
        }
    }
}
