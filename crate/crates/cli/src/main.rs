//! critlog: classify parameter sets, run the solvers, sweep parameters and
//! tabulate bubble integrals from a TOML config.
//!
//! Exit codes: 0 success, 2 config error, 3 hypothesis gate failure,
//! 4 numeric failure.

mod config;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use critlog::bubble::{bubble_table, limit_gap_report, nehari_gap_report};
use critlog::nonexistence::falsification_battery;
use critlog::params::{ball_geometry, ball_volume, classify_with, ClassificationReport, TheoremId};
use critlog::solvers::{
    default_local_init, default_mountain_endpoints, default_nehari_init, minimize_local_ball,
    minimize_on_nehari, mountain_pass, residual_certificate, rho_delta, seeded_positive_pair,
    solve_single, CertificateReport, PathPeak, SolveKind, SolveResult,
};
use critlog::sweep::{run_sweep, SweepSolve};
use critlog::{DomainConstants, Error, ParameterSet, RadialGrid};

use config::{ConfigError, GapKind, Init, Pipeline, RunConfig, SweepSolveKind};

const HYPOTHESES_UNMET: &str = "hypotheses unmet";

#[derive(Parser)]
#[command(
    name = "critlog",
    version,
    about = "Variational solvers for a coupled critical system with logarithmic terms"
)]
struct Cli {
    /// Print the CSV column documentation and exit.
    #[arg(long)]
    schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Region margins, thresholds and theorem gates as JSON.
    Classify(Common),
    /// Run one solver pipeline.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Run even when the hypotheses of the pipeline fail.
        #[arg(long)]
        force: bool,
    },
    /// Margins (and optional levels) over 1-2 parameter axes as CSV.
    Sweep(Common),
    /// Bubble integral table, plus the configured gap report.
    Bubbles(Common),
    /// Randomized search for positive solutions.
    Probe(Common),
}

#[derive(clap::Args)]
struct Common {
    /// TOML config, `-` for stdin.
    config: PathBuf,
    /// Directory for output files; without it the main artifact goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Gate(String),
    Numeric(String),
    Io(io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Gate(_) => 3,
            Failure::Numeric(_) | Failure::Io(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) => Failure::Config(e.to_string()),
            Error::Precondition(_) | Error::Unsupported(_) => Failure::Gate(e.to_string()),
            Error::Numeric(m) => Failure::Numeric(m),
            Error::Singular(_) => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Gate(m) => write!(f, "hypothesis gate: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// Where artifacts go: named files under `dir`, or the primary one to stdout.
struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    fn new(dir: Option<PathBuf>) -> Outcome<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir })
    }

    fn primary(&self, name: &str, bytes: &[u8]) -> Outcome<()> {
        match &self.dir {
            Some(d) => fs::write(d.join(name), bytes)?,
            None => io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    /// Written only when an output directory is set.
    fn secondary(&self, name: &str, bytes: &[u8]) -> Outcome<()> {
        if let Some(d) = &self.dir {
            fs::write(d.join(name), bytes)?;
        }
        Ok(())
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Outcome<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn load(path: &Path) -> Outcome<RunConfig> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?
    };
    Ok(config::parse(&text)?)
}

/// Grid plus the preflight check that its shell weights reproduce |B_R|.
fn grid_for(cfg: &RunConfig) -> Outcome<Arc<RadialGrid>> {
    let grid = RadialGrid::new(cfg.grid.radius, cfg.grid.n)?;
    let exact = ball_volume(cfg.grid.radius);
    let err = (grid.volume() - exact).abs() / exact;
    if err > cfg.tolerances.quad_check_tol {
        return Err(Failure::Numeric(format!(
            "quadrature volume check failed: relative error {err:e}"
        )));
    }
    Ok(grid)
}

fn report_for(cfg: &RunConfig) -> Outcome<ClassificationReport> {
    let p = cfg.params();
    let dc = ball_geometry(p.radius)?;
    Ok(classify_with(&p, &dc, cfg.run.beta_cap_factor)?)
}

fn cmd_classify(cfg: &RunConfig, sink: &Sink) -> Outcome<()> {
    sink.primary("classify.json", &json(&report_for(cfg)?))
}

#[derive(Serialize)]
struct Gate {
    theorem: Option<TheoremId>,
    holds: bool,
}

#[derive(Serialize)]
struct MountainSummary {
    level: f64,
    peak: PathPeak,
    max_history: Vec<f64>,
    sweeps: usize,
    path_energies: Vec<f64>,
}

#[derive(Serialize)]
struct SolveOutput {
    pipeline: &'static str,
    gate: Gate,
    tags: Vec<String>,
    result: SolveResult,
    certificate: Option<CertificateReport>,
    mountain_pass: Option<MountainSummary>,
}

fn gate_for(pipeline: Pipeline, report: &ClassificationReport) -> Gate {
    let ids: &[TheoremId] = match pipeline {
        Pipeline::LocalBall => &[TheoremId::LocalMinimum],
        Pipeline::Nehari => &[
            TheoremId::LeastEnergyNegativeCoupling,
            TheoremId::LeastEnergyWeakCoupling,
            TheoremId::LeastEnergyStrongCoupling,
        ],
        Pipeline::MountainPass => &[TheoremId::MountainPass],
        // the single-equation solvers gate themselves
        Pipeline::Single => {
            return Gate {
                theorem: None,
                holds: true,
            }
        }
    };
    let listed = ids.iter().find(|id| report.lists(**id));
    Gate {
        theorem: Some(*listed.unwrap_or(&ids[0])),
        holds: listed.is_some(),
    }
}

fn ball_radius(p: &ParameterSet, dc: &DomainConstants, tags: &mut Vec<String>) -> f64 {
    match rho_delta(p, dc) {
        Ok(rd) => rd.rho,
        Err(_) => {
            tags.push("ball radius defaulted to S/sqrt(max mu)".into());
            dc.sobolev_s / p.max_mu().sqrt()
        }
    }
}

fn cmd_solve(cfg: &RunConfig, force: bool, sink: &Sink) -> Outcome<()> {
    let force = force || cfg.solve.force;
    let p = cfg.params();
    let report = report_for(cfg)?;
    let grid = grid_for(cfg)?;
    let dc = DomainConstants::for_grid(&grid)?;
    let opts = cfg.solver_options();
    let pipeline = cfg.solve.pipeline;
    let gate = gate_for(pipeline, &report);
    let mut tags = Vec::new();
    if !gate.holds {
        if !force {
            return Err(Failure::Gate(format!(
                "{:?} hypotheses fail for this parameter set; pass --force to run anyway",
                gate.theorem.expect("gated pipeline")
            )));
        }
        tags.push(HYPOTHESES_UNMET.to_string());
    }
    let random = |scale: f64| {
        let s = seeded_positive_pair(&grid, cfg.run.seeds[0]);
        let n = s.h_norm();
        s.scaled(scale / n, scale / n)
    };
    let mut mountain = None;
    let (name, result) = match pipeline {
        Pipeline::LocalBall => {
            let rho = ball_radius(&p, &dc, &mut tags);
            let init = match cfg.solve.init {
                Init::Default => default_local_init(&p, &grid, 0.5 * rho)?,
                Init::Random => random(0.5 * rho),
            };
            ("local_ball", minimize_local_ball(&p, &init, rho, &opts)?)
        }
        Pipeline::Nehari => {
            let init = match cfg.solve.init {
                Init::Default => default_nehari_init(&p, &grid, &opts)?,
                Init::Random => random(1.0),
            };
            ("nehari", minimize_on_nehari(&p, &init, &opts)?)
        }
        Pipeline::MountainPass => {
            let (a, mut b) = default_mountain_endpoints(&p, &grid, &dc, &opts)?;
            if cfg.solve.init == Init::Random {
                let ea = critlog::functionals::energy_l(&a, &p)?.total;
                let dir = random(1.0);
                let mut t = 1.0;
                b = dir.scaled(t, t);
                while critlog::functionals::energy_l(&b, &p)?.total >= ea {
                    t *= 2.0;
                    if t > 1e12 {
                        return Err(Failure::Numeric(
                            "no far endpoint below the start energy along the seed".into(),
                        ));
                    }
                    b = dir.scaled(t, t);
                }
            }
            let mp = mountain_pass(&p, &a, &b, cfg.solve.segments, &opts)?;
            mountain = Some(MountainSummary {
                level: mp.level,
                peak: mp.peak,
                max_history: mp.max_history.clone(),
                sweeps: mp.sweeps,
                path_energies: mp.path.energies.clone(),
            });
            ("mountain_pass", mp.top)
        }
        Pipeline::Single => {
            let c = p.component(usize::from(cfg.solve.component - 1));
            let init = match cfg.solve.init {
                Init::Default => critlog::radial::principal_eigenpair(&grid)?.vector,
                Init::Random => random(1.0).u,
            };
            (
                "single",
                solve_single(c.lambda, c.mu, c.theta, cfg.solve.single_mode, &init, &opts)?,
            )
        }
    };
    let certificate = if result.converged && result.classification != SolveKind::Single {
        Some(residual_certificate(&result, &p)?)
    } else {
        None
    };
    let mut result = result;
    if tags.iter().any(|t| t == HYPOTHESES_UNMET) {
        result.notes.push(HYPOTHESES_UNMET.to_string());
    }
    sink.secondary("trace.csv", &csv_bytes(|w| result.write_trace_csv(w))?)?;
    sink.secondary("fields.csv", &csv_bytes(|w| result.write_fields_csv(w))?)?;
    let out = SolveOutput {
        pipeline: name,
        gate,
        tags,
        result,
        certificate,
        mountain_pass: mountain,
    };
    sink.primary("solve.json", &json(&out))
}

fn cmd_sweep(cfg: &RunConfig, sink: &Sink) -> Outcome<()> {
    let solve = match cfg.sweep.solve {
        SweepSolveKind::None => None,
        SweepSolveKind::LocalBall => Some(SolveKind::LocalMinBall),
        SweepSolveKind::Nehari => Some(SolveKind::NehariMin),
    }
    .map(|kind| SweepSolve {
        kind,
        n: cfg.grid.n,
        opts: cfg.solver_options(),
    });
    if solve.is_some() {
        grid_for(cfg)?;
    }
    let table = run_sweep(
        &cfg.params(),
        &cfg.axes(),
        cfg.run.beta_cap_factor,
        solve.as_ref(),
        cfg.run.execution,
    )?;
    sink.primary("sweep.csv", &csv_bytes(|w| table.write_csv(w))?)
}

fn cmd_bubbles(cfg: &RunConfig, sink: &Sink) -> Outcome<()> {
    let grid = grid_for(cfg)?;
    let table = bubble_table(&cfg.bubbles.eps_list, &grid, cfg.r_cut(), cfg.run.execution);
    for (eps, why) in &table.skipped {
        eprintln!("note: eps = {eps} skipped: {why}");
    }
    sink.primary("bubbles.csv", &csv_bytes(|w| table.write_csv(w))?)?;
    let p = cfg.params();
    let opts = cfg.solver_options();
    let gap_r_cut = cfg.bubbles.gap_r_cut.unwrap_or(0.5 * cfg.grid.radius);
    let gap = match cfg.bubbles.gap {
        GapKind::None => None,
        GapKind::Nehari => Some(json(&nehari_gap_report(
            &p,
            &grid,
            &cfg.bubbles.eps_list,
            gap_r_cut,
            &opts,
        )?)),
        GapKind::LimitTwoScale | GapKind::LimitSingleScale => {
            let v = cfg.gap_variant().expect("limit gap kind");
            Some(json(&limit_gap_report(
                &p,
                &grid,
                &cfg.bubbles.eps_list,
                gap_r_cut,
                v,
                &opts,
            )?))
        }
    };
    if let Some(g) = gap {
        sink.secondary("gap.json", &g)?;
    }
    Ok(())
}

fn cmd_probe(cfg: &RunConfig, sink: &Sink) -> Outcome<()> {
    let grid = grid_for(cfg)?;
    let report = falsification_battery(
        &cfg.params(),
        &grid,
        cfg.probe.restarts,
        cfg.run.seeds[0],
        &cfg.solver_options(),
        cfg.run.execution,
    )?;
    sink.secondary("hits.csv", &csv_bytes(|w| report.write_hits_csv(w))?)?;
    sink.primary("probe.json", &json(&report))
}

const SCHEMA: &str = "\
sweep.csv
  <axis>...            swept parameter values, one column per axis, rows lexicographic
  sigma2_i, sigma3_i, sigma4_i
                       signed margins of component i (empty when the sign conditions fail)
  a1, a2, a3           signed A-region margins (empty when undefined)
  beta1, beta2         coupling thresholds (beta2 only for positive log coefficients)
  lambda_cap           largest admissible lambda for the beta2 construction
  a_level              limit level of the critical system
  rho, delta           local-minimum ball radius and sphere lower bound
  <theorem>            1 when every hypothesis of that result holds, else 0:
                       least_energy_negative_coupling, least_energy_weak_coupling,
                       least_energy_strong_coupling, local_minimum, lowest_critical_level,
                       mountain_pass, nonexistence_log_dominated, nonexistence_opposite_log
  level                energy of the optional solve
  level_converged      whether that solve met its tolerance
  error                per-point failure message, quoted

bubbles.csv
  eps                  bubble width
  grad2, l4, l2, l2log integrals of |grad u|^2, u^4, u^2, u^2 log u^2 for the cut-off bubble
  lower, upper         bracket for l2log
  grad_ratio, l4_ratio integrals over S^2
  l2_ratio             l2 over 8 omega4 eps^2 |log eps|
  bracketed            l2log within [lower, upper]

trace.csv
  iteration, energy, gradient_norm, step

fields.csv
  r, u, v              node radius and field values

hits.csv
  index, seed          restart number and its seed
  energy               energy of the positive state
  strong_residual_u, strong_residual_v, u_min_interior, v_min_interior, nehari_g1, nehari_g2
                       residual certificate of the state
  r, u, v              one row per node
";

fn run(cli: Cli) -> Outcome<()> {
    if cli.schema {
        io::stdout().lock().write_all(SCHEMA.as_bytes())?;
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Failure::Config("no command given; see --help".into()));
    };
    match command {
        Command::Classify(c) => cmd_classify(&load(&c.config)?, &Sink::new(c.out)?),
        Command::Solve { common, force } => {
            cmd_solve(&load(&common.config)?, force, &Sink::new(common.out)?)
        }
        Command::Sweep(c) => cmd_sweep(&load(&c.config)?, &Sink::new(c.out)?),
        Command::Bubbles(c) => cmd_bubbles(&load(&c.config)?, &Sink::new(c.out)?),
        Command::Probe(c) => cmd_probe(&load(&c.config)?, &Sink::new(c.out)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("critlog: {f}");
            ExitCode::from(f.code())
        }
    }
}
