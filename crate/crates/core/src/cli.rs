//! Command-line front end. Each subcommand writes one table (CSV with a
//! config comment line, or JSON) and exits with a documented status code.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::consistency::{checkerboard_fixed_points, regime_grid, BetaGrid, SolverOptions};
use crate::dynamics::{integrate_flow, vector_field, FlowOptions};
use crate::energy::{default_theta_samples, free_energy, lyapunov_scan, segment_limit, Orbit};
use crate::error::Error;
use crate::io::{Cell, OutputFormat, Table};
use crate::ldp::lagrangian;
use crate::model::{Model, ModelParams, DEFAULT_NODES_PER_ARC};
use crate::simplex::{fourier_mode, SimplexVector};
use crate::stability::{eq_eigenvalues, eq_matrix, match_spectra};
use crate::stochastic::{lln_error, simulate_path, OccupationState, SimOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_REGIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rotator", version, about = "Discrete mean-field rotator dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Inverse temperature.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Number of arcs.
    #[arg(long, global = true)]
    pub q: Option<usize>,
    /// Gauss–Legendre nodes per arc.
    #[arg(long, global = true)]
    pub nodes_per_arc: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub fixed_point_tol: Option<f64>,
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    /// Integrate the simplex flow.
    Flow(FlowArgs),
    /// Sample the discretized Gibbs orbit or measure the distance to it.
    Orbit(OrbitArgs),
    /// Analytic and numeric spectrum of the linearization at the equidistribution.
    Spectrum(SpectrumArgs),
    /// Regime labels on a (beta, q) grid.
    Regimes(RegimesArgs),
    /// Free energy and its rate along a segment.
    Lyapunov(LyapunovArgs),
    /// Simulate one N-particle path.
    Simulate(SimulateArgs),
    /// Sup-TV distance between simulated paths and the flow.
    Lln(LlnArgs),
    /// Evaluate the large-deviation Lagrangian.
    Lagrangian(LagrangianArgs),
    /// Roots of the checkerboard mean-field equation.
    Checkerboard(CheckerboardArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowArgs {
    /// Initial state: eq, orbit:<theta>, dirac:<k>, mix:<w1,..,wq> or file:<path>.
    #[arg(long, default_value = "eq")]
    pub nu0: String,
    #[arg(long)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.1)]
    pub output_dt: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OrbitArgs {
    /// Number of equally spaced angles to emit (defaults to q).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Report the distance from this state to the orbit instead.
    #[arg(long)]
    pub distance_to: Option<String>,
    /// Orbit samples for the distance search (defaults to 64 q).
    #[arg(long)]
    pub theta_samples: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    /// Largest accepted analytic/numeric eigenvalue mismatch.
    #[arg(long, default_value_t = 1e-8)]
    pub match_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegimesArgs {
    #[arg(long, default_value_t = 2.1)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 100)]
    pub beta_steps: usize,
    #[arg(long, default_value_t = 3)]
    pub q_min: usize,
    #[arg(long, default_value_t = 100)]
    pub q_max: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LyapunovArgs {
    #[arg(long, default_value = "eq")]
    pub from: String,
    #[arg(long, default_value = "orbit:0")]
    pub to: String,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Segment end: a number, or `boundary` to continue until the segment
    /// leaves the simplex.
    #[arg(long, default_value = "1")]
    pub s_end: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value = "eq")]
    pub nu0: String,
    /// Number of particles.
    #[arg(long = "N", visible_alias = "n")]
    pub n: u64,
    #[arg(long)]
    pub t_final: f64,
    /// Emit the state on a grid with this spacing instead of at every event.
    #[arg(long)]
    pub every: Option<f64>,
    /// Re-solve the magnetization only after moving this far in TV.
    #[arg(long)]
    pub lazy: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LlnArgs {
    #[arg(long, default_value = "eq")]
    pub nu0: String,
    /// Comma-separated particle numbers.
    #[arg(long = "N", visible_alias = "n", value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// Number of seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 5.0)]
    pub t_final: f64,
    #[arg(long)]
    pub lazy: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LagrangianArgs {
    #[arg(long, default_value = "eq")]
    pub nu: String,
    /// Velocity: flow-velocity, zero, mode:<l>:<amplitude> or vec:<u1,..,uq>.
    #[arg(long)]
    pub u: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckerboardArgs {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub fixed_point: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point: SolverOptions::default().tol,
            ode_rtol: 1e-9,
            ode_atol: 1e-9,
        }
    }
}

/// Resolved run configuration: config file values overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub beta: Option<f64>,
    pub q: Option<usize>,
    pub nodes_per_arc: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            beta: None,
            q: None,
            nodes_per_arc: DEFAULT_NODES_PER_ARC,
            tolerances: Tolerances::default(),
            seed: 0,
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = common.beta {
            cfg.beta = Some(v);
        }
        if let Some(v) = common.q {
            cfg.q = Some(v);
        }
        if let Some(v) = common.nodes_per_arc {
            cfg.nodes_per_arc = v;
        }
        if let Some(v) = common.seed {
            cfg.seed = v;
        }
        if let Some(v) = &common.out {
            cfg.output_path = Some(v.clone());
        }
        if let Some(v) = common.format {
            cfg.output_format = v;
        }
        if let Some(v) = common.fixed_point_tol {
            cfg.tolerances.fixed_point = v;
        }
        if let Some(v) = common.rtol {
            cfg.tolerances.ode_rtol = v;
        }
        if let Some(v) = common.atol {
            cfg.tolerances.ode_atol = v;
        }
        let t = cfg.tolerances;
        if !(t.fixed_point > 0.0 && t.ode_rtol > 0.0 && t.ode_atol > 0.0) {
            return Err(CliError::config("all tolerances must be positive"));
        }
        if cfg.q.is_some_and(|q| q < 3) {
            return Err(CliError::config("q must be at least 3"));
        }
        Ok(cfg)
    }

    /// Model for the configured `(beta, q)`; both must be set.
    pub fn model(&self) -> Result<Model, CliError> {
        let beta = self.beta.ok_or_else(|| CliError::config("--beta is required"))?;
        let q = self.q.ok_or_else(|| CliError::config("--q is required"))?;
        let params = ModelParams::with_nodes(beta, q, self.nodes_per_arc).map_err(|e| CliError::config(e.to_string()))?;
        let solver = SolverOptions {
            tol: self.tolerances.fixed_point,
            ..SolverOptions::default()
        };
        Ok(Model::new(params).map_err(|e| CliError::config(e.to_string()))?.with_solver(solver))
    }
}

/// Failure of a subcommand, rendered as a JSON record on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: String,
    pub module: String,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_CONFIG,
            kind: "config".into(),
            module: "cli".into(),
            message: message.into(),
        }
    }

    fn from_lib(err: Error, module: &str) -> Self {
        let (exit_code, kind) = match &err {
            Error::InvalidInput(_) => (EXIT_CONFIG, "invalid_input"),
            Error::NoConvergence { .. } => (EXIT_NUMERICAL, "no_convergence"),
            Error::AscentStalled { .. } => (EXIT_NUMERICAL, "ascent_stalled"),
            Error::StepSizeUnderflow { .. } => (EXIT_NUMERICAL, "step_size_underflow"),
            Error::Singular { .. } => (EXIT_NUMERICAL, "singular"),
            Error::Overflow(_) => (EXIT_NUMERICAL, "overflow"),
            Error::SimulationAborted { .. } => (EXIT_NUMERICAL, "simulation_aborted"),
            Error::Regime(_) => (EXIT_REGIME, "regime"),
            Error::Io(_) => (EXIT_OTHER, "io"),
        };
        CliError {
            exit_code,
            kind: kind.into(),
            module: module.into(),
            message: err.to_string(),
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Flow(_) => "flow",
            Command::Orbit(_) => "orbit",
            Command::Spectrum(_) => "spectrum",
            Command::Regimes(_) => "regimes",
            Command::Lyapunov(_) => "lyapunov",
            Command::Simulate(_) => "simulate",
            Command::Lln(_) => "lln",
            Command::Lagrangian(_) => "lagrangian",
            Command::Checkerboard(_) => "checkerboard",
        }
    }

    /// Library module the subcommand exercises, for error records.
    fn module(&self) -> &'static str {
        match self {
            Command::Flow(_) => "dynamics",
            Command::Orbit(_) | Command::Lyapunov(_) => "energy",
            Command::Spectrum(_) => "stability",
            Command::Regimes(_) | Command::Checkerboard(_) => "consistency",
            Command::Simulate(_) | Command::Lln(_) => "stochastic",
            Command::Lagrangian(_) => "ldp",
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::config(format!("bad number {t:?}: {e}"))))
        .collect()
}

/// Parses an initial-state spec (`eq`, `orbit:<theta>`, `dirac:<k>`,
/// `mix:<weights>`, `file:<path>`).
pub fn parse_nu_spec(spec: &str, model: &Model) -> Result<SimplexVector, CliError> {
    let q = model.q();
    let lib = |e: Error| CliError::from_lib(e, "cli");
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "eq" if rest.is_empty() => Ok(SimplexVector::uniform(q)),
        "orbit" => {
            let theta: f64 = rest
                .parse()
                .map_err(|_| CliError::config(format!("orbit angle {rest:?} is not a number")))?;
            Ok(Orbit::new(model).map_err(lib)?.point(theta).nu)
        }
        "dirac" => {
            let k: usize = rest
                .parse()
                .map_err(|_| CliError::config(format!("arc index {rest:?} is not an integer")))?;
            SimplexVector::dirac(q, k).map_err(lib)
        }
        "mix" | "file" => {
            let weights = if head == "mix" {
                parse_list(rest)?
            } else {
                let text = std::fs::read_to_string(rest)
                    .map_err(|e| CliError::config(format!("cannot read {rest}: {e}")))?;
                match serde_json::from_str::<Vec<f64>>(&text) {
                    Ok(v) => v,
                    Err(_) => parse_list(&text)?,
                }
            };
            if weights.len() != q {
                return Err(CliError::config(format!("state has {} weights, expected q = {q}", weights.len())));
            }
            SimplexVector::normalized(weights).map_err(lib)
        }
        _ => Err(CliError::config(format!("unknown state spec {spec:?}"))),
    }
}

/// Parses a velocity spec (`flow-velocity`, `zero`, `mode:<l>:<amp>`, `vec:<u>`).
pub fn parse_u_spec(spec: &str, model: &Model, nu: &SimplexVector) -> Result<Vec<f64>, CliError> {
    let q = model.q();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "flow-velocity" => vector_field(model, nu).map_err(|e| CliError::from_lib(e, "dynamics")),
        "zero" => Ok(vec![0.0; q]),
        "mode" => {
            let (l, amp) = rest
                .split_once(':')
                .ok_or_else(|| CliError::config("mode spec is mode:<l>:<amplitude>"))?;
            let l: usize = l.parse().map_err(|_| CliError::config(format!("bad mode index {l:?}")))?;
            let amp: f64 = amp.parse().map_err(|_| CliError::config(format!("bad amplitude {amp:?}")))?;
            if l.is_multiple_of(q) {
                return Err(CliError::config("mode index must not be a multiple of q"));
            }
            Ok(fourier_mode(q, l).into_iter().map(|v| amp * v).collect())
        }
        "vec" => {
            let u = parse_list(rest)?;
            if u.len() != q {
                return Err(CliError::config(format!("velocity has {} entries, expected q = {q}", u.len())));
            }
            Ok(u)
        }
        _ => Err(CliError::config(format!("unknown velocity spec {spec:?}"))),
    }
}

fn state_columns(first: &str, prefix: &str, q: usize, tail: &[&str]) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..=q).map(|k| format!("{prefix}{k}")))
        .chain(tail.iter().map(|s| s.to_string()))
        .collect()
}

/// Runs a parsed command and returns its table; an accompanying error is
/// reported after the table is written (used when the data are still useful).
fn execute(cmd: &Command, cfg: &RunConfig) -> Result<(Table, Option<CliError>), CliError> {
    let module = cmd.module();
    let lib = |e: Error| CliError::from_lib(e, module);
    match cmd {
        Command::Flow(a) => {
            let model = cfg.model()?;
            let nu0 = parse_nu_spec(&a.nu0, &model)?;
            let opts = FlowOptions {
                output_dt: a.output_dt,
                rtol: cfg.tolerances.ode_rtol,
                atol: cfg.tolerances.ode_atol,
            };
            let tr = integrate_flow(&model, &nu0, a.t_final, opts).map_err(lib)?;
            let mut t = Table::new(state_columns("t", "w", model.q(), &["Mx", "My"]));
            for ((time, s), m) in tr.times.iter().zip(&tr.states).zip(&tr.magnetizations) {
                let mut row: Vec<Cell> = vec![(*time).into()];
                row.extend(s.weights().iter().map(|&w| Cell::from(w)));
                row.push(m.x.into());
                row.push(m.y.into());
                t.push(row);
            }
            Ok((t, None))
        }
        Command::Orbit(a) => {
            let model = cfg.model()?;
            let orbit = Orbit::new(&model).map_err(lib)?;
            if let Some(spec) = &a.distance_to {
                let nu = parse_nu_spec(spec, &model)?;
                let n = a.theta_samples.unwrap_or_else(|| default_theta_samples(model.q()));
                let (d, th) = orbit.distance(&nu, n).map_err(lib)?;
                let mut t = Table::new(["distance", "theta", "m_star"]);
                t.push(vec![d.into(), th.into(), orbit.m_star().into()]);
                return Ok((t, None));
            }
            let n = a.samples.unwrap_or(model.q());
            if n == 0 {
                return Err(CliError::config("--samples must be positive"));
            }
            let mut t = Table::new(state_columns("theta", "w", model.q(), &["Mx", "My", "psi"]));
            for j in 0..n {
                let p = orbit.point(2.0 * std::f64::consts::PI * j as f64 / n as f64);
                let psi = free_energy(&model, &p.nu).map_err(lib)?.value;
                let mut row: Vec<Cell> = vec![p.theta.into()];
                row.extend(p.nu.weights().iter().map(|&w| Cell::from(w)));
                row.extend([Cell::from(p.m.x), p.m.y.into(), psi.into()]);
                t.push(row);
            }
            Ok((t, None))
        }
        Command::Spectrum(a) => {
            let model = cfg.model()?;
            let spec = eq_eigenvalues(&model).map_err(lib)?;
            let numeric = eq_matrix(&model).map_err(lib)?.numeric_eigenvalues();
            let matched = match_spectra(&spec.eigenvalues, &numeric).map_err(lib)?;
            let mut t = Table::new(["j", "re", "im", "source"]);
            for (j, l) in spec.eigenvalues.iter().enumerate() {
                t.push(vec![(j + 1).into(), l.re.into(), l.im.into(), "analytic".into()]);
            }
            for (j, l) in matched.matched.iter().enumerate() {
                t.push(vec![(j + 1).into(), l.re.into(), l.im.into(), "numeric".into()]);
            }
            let err = (!(matched.max_mismatch <= a.match_tol)).then(|| CliError {
                exit_code: EXIT_NUMERICAL,
                kind: "spectrum_mismatch".into(),
                module: module.into(),
                message: format!(
                    "analytic and numeric eigenvalues differ by {:e} > {:e}",
                    matched.max_mismatch, a.match_tol
                ),
            });
            Ok((t, err))
        }
        Command::Regimes(a) => {
            let grid = BetaGrid {
                min: a.beta_min,
                max: a.beta_max,
                steps: a.beta_steps,
            };
            let cells = regime_grid(grid, a.q_min, a.q_max).map_err(lib)?;
            let mut t = Table::new(["beta", "q", "uniqueness", "non_uniqueness", "eq_attractive"]);
            for c in cells {
                t.push(vec![
                    c.beta.into(),
                    c.q.into(),
                    c.uniqueness.into(),
                    c.non_uniqueness.into(),
                    c.equidistribution_attractive.into(),
                ]);
            }
            Ok((t, None))
        }
        Command::Lyapunov(a) => {
            let model = cfg.model()?;
            let from = parse_nu_spec(&a.from, &model)?;
            let to = parse_nu_spec(&a.to, &model)?;
            let s_end = if a.s_end == "boundary" {
                segment_limit(&from, &to)
            } else {
                a.s_end
                    .parse()
                    .map_err(|_| CliError::config(format!("--s-end {:?} is neither a number nor 'boundary'", a.s_end)))?
            };
            let scan = lyapunov_scan(&model, &from, &to, s_end, a.samples).map_err(lib)?;
            let mut t = Table::new(["s", "psi", "dpsi_dt"]);
            for s in scan {
                t.push(vec![s.s.into(), s.psi.into(), s.rate.as_f64().into()]);
            }
            Ok((t, None))
        }
        Command::Simulate(a) => {
            let model = cfg.model()?;
            let nu0 = parse_nu_spec(&a.nu0, &model)?;
            let start = OccupationState::from_simplex(&nu0, a.n).map_err(lib)?;
            let opts = SimOptions { lazy_threshold: a.lazy };
            let path = simulate_path(&model, &start, a.t_final, cfg.seed, opts).map_err(lib)?;
            let mut t = Table::new(state_columns("t", "c", model.q(), &[]));
            let mut push = |time: f64, s: &OccupationState| {
                let mut row: Vec<Cell> = vec![time.into()];
                row.extend(s.counts.iter().map(|&c| Cell::from(c)));
                t.push(row);
            };
            match a.every {
                None => {
                    for (i, s) in path.states().enumerate() {
                        push(if i == 0 { 0.0 } else { path.event_times[i - 1] }, &s);
                    }
                }
                Some(dt) if dt > 0.0 => {
                    let grid = crate::dynamics::output_grid(a.t_final, dt);
                    let mut states = path.states();
                    let mut cur = states.next().expect("initial state");
                    let mut next_event = 0;
                    for time in grid {
                        while next_event < path.len() && path.event_times[next_event] <= time {
                            cur = states.next().expect("one state per event");
                            next_event += 1;
                        }
                        push(time, &cur);
                    }
                }
                Some(_) => return Err(CliError::config("--every must be positive")),
            }
            Ok((t, None))
        }
        Command::Lln(a) => {
            let model = cfg.model()?;
            let nu0 = parse_nu_spec(&a.nu0, &model)?;
            let seeds: Vec<u64> = (0..a.seeds).map(|i| cfg.seed.wrapping_add(i)).collect();
            let opts = SimOptions { lazy_threshold: a.lazy };
            let table = lln_error(&model, &nu0, &a.n, a.t_final, &seeds, opts).map_err(lib)?;
            let mut t = Table::new(["N", "seed", "sup_tv"]);
            for r in &table.rows {
                t.push(vec![r.n.into(), r.seed.into(), r.sup_tv.into()]);
            }
            Ok((t, None))
        }
        Command::Lagrangian(a) => {
            let model = cfg.model()?;
            let nu = parse_nu_spec(&a.nu, &model)?;
            let u = parse_u_spec(&a.u, &model, &nu)?;
            let l = lagrangian(&model, &nu, &u).map_err(lib)?;
            let mut cols = vec!["value".to_string(), "converged".into(), "iterations".into(), "grad_norm".into()];
            cols.extend((1..=model.q()).map(|k| format!("p{k}")));
            let mut t = Table::new(cols);
            let mut row = vec![l.value.into(), l.converged.into(), l.iterations.into(), l.grad_norm.into()];
            row.extend(l.maximizer.values().iter().map(|&p| Cell::from(p)));
            t.push(row);
            Ok((t, None))
        }
        Command::Checkerboard(_) => {
            let model = cfg.model()?;
            let roots = checkerboard_fixed_points(&model).map_err(lib)?;
            let mut t = Table::new(["m"]);
            for r in roots {
                t.push(vec![r.into()]);
            }
            Ok((t, None))
        }
    }
}

fn report(err: &CliError, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "{}", json!({ "error": err }));
    err.exit_code
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
                return EXIT_OK;
            }
            return report(&CliError::config(rendered.trim_end()), stderr);
        }
    };
    let cfg = match RunConfig::resolve(&cli.common) {
        Ok(c) => c,
        Err(e) => return report(&e, stderr),
    };
    let (table, late) = match execute(&cli.command, &cfg) {
        Ok(r) => r,
        Err(e) => return report(&e, stderr),
    };
    let header: Value = json!({
        "command": cli.command.name(),
        "run": cfg,
        "args": cli.command,
    });
    let written = match &cfg.output_path {
        Some(path) => File::create(path).map_err(Error::from).and_then(|f| {
            let mut w = BufWriter::new(f);
            table.write(cfg.output_format, &header, &mut w)?;
            w.flush()?;
            Ok(())
        }),
        None => table.write(cfg.output_format, &header, stdout),
    };
    if let Err(e) = written {
        return report(&CliError::from_lib(e, "cli"), stderr);
    }
    match late {
        Some(e) => report(&e, stderr),
        None => EXIT_OK,
    }
}

/// Entry point used by the binary.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
