//! Command-line front end.
//!
//! Every flag can also come from a `--config` file of `key = value` lines
//! whose keys are the long flag names; flags win over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diagnostics::{verify_state, wslope_fit};
use crate::error::{Error, Result};
use crate::io;
use crate::kernels::measure_multipliers;
use crate::linop::{assemble_blocks, BlockSource};
use crate::pointvortex::{integrate_rk4, wstar, wstar_derivation, PointKernel, PointSystem};
use crate::solver::{continuation, eps_ladder, solve_record, ContinuationRecord, Init, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "sqg-sheets", version, about = "Translating SQG vortex-sheet pairs", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Solve,
    Continue,
    ProbeMultipliers,
    PointVortex,
    Verify,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve at one eps; writes one record and its curve file
    Solve(Flags),
    /// Warm-started sweep 0 -> eps-max; writes records, curves and wtable.csv
    Continue(Flags),
    /// Measure kernel multipliers; writes multipliers.csv and blocks.csv
    ProbeMultipliers(Flags),
    /// Integrate the point-vortex lattice; writes trajectory.csv and wstar.json
    PointVortex(Flags),
    /// Solve at eps and run the velocity-path checks; writes verify.json
    Verify(Flags),
}

impl Command {
    fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Solve(f) => (CommandKind::Solve, f),
            Command::Continue(f) => (CommandKind::Continue, f),
            Command::ProbeMultipliers(f) => (CommandKind::ProbeMultipliers, f),
            Command::PointVortex(f) => (CommandKind::PointVortex, f),
            Command::Verify(f) => (CommandKind::Verify, f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug, Default)]
pub struct Flags {
    /// key = value file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps_max: Option<f64>,
    #[arg(long)]
    pub eps_step: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    /// Fourier modes N (default 32)
    #[arg(long)]
    pub modes: Option<usize>,
    /// grid size M, a power of two (default 256)
    #[arg(long)]
    pub grid: Option<usize>,
    /// residual sup-norm tolerance (default 1e-9)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Newton iteration cap (default 25)
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// |eps| below which the expansion path is used (default 0.02)
    #[arg(long)]
    pub eps_switch: Option<f64>,
    /// relative Jacobian difference step (default 1e-7)
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// also report gaps to the functionals in display-literal form (verify)
    #[arg(long)]
    pub strict_display_formulas: bool,
    /// store wall time per record
    #[arg(long)]
    pub timing: bool,
    /// worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// number of point vortices (default 2)
    #[arg(long)]
    pub m: Option<usize>,
    /// integration end time (default 10)
    #[arg(long)]
    pub t_end: Option<f64>,
    /// RK4 step (default 1e-3)
    #[arg(long)]
    pub h: Option<f64>,
    /// keep every stride-th trajectory sample (default 1)
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub eps: Option<f64>,
    pub eps_max: Option<f64>,
    pub eps_step: f64,
    pub d: f64,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub format: Format,
    pub strict_display_formulas: bool,
    pub threads: Option<usize>,
    pub points: usize,
    pub t_end: f64,
    pub h: f64,
    pub stride: usize,
}

/// Usage-level failures, kept apart from library errors for the exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(e) => match e {
                Error::Config(_)
                | Error::Invalid(_)
                | Error::GridSize(_)
                | Error::Nyquist { .. }
                | Error::TooFewPoints(_) => EXIT_USAGE,
                Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
                Error::Io(_) | Error::Json(_) => EXIT_IO,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

fn read_config_file(path: &Path) -> std::result::Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

struct FileValues(BTreeMap<String, String>);

impl FileValues {
    fn take<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> std::result::Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let from_file = self.0.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key {key}: bad value {v:?}: {e}")))
            })
            .transpose()
    }

    fn switch(&mut self, key: &str, flag: bool) -> std::result::Result<bool, CliError> {
        Ok(flag || self.take::<bool>(key, None)?.unwrap_or(false))
    }
}

fn resolve(kind: CommandKind, flags: Flags) -> std::result::Result<RunConfig, CliError> {
    let mut file = FileValues(match &flags.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    });
    let defaults = SolverConfig::default();
    let eps = file.take("eps", flags.eps)?;
    let eps_max = file.take("eps-max", flags.eps_max)?;
    let eps_step = file.take("eps-step", flags.eps_step)?.unwrap_or(0.01);
    let d = file.take("d", flags.d)?.unwrap_or(1.0);
    let solver = SolverConfig {
        n: file.take("modes", flags.modes)?.unwrap_or(defaults.n),
        m: file.take("grid", flags.grid)?.unwrap_or(defaults.m),
        tol: file.take("tol", flags.tol)?.unwrap_or(defaults.tol),
        max_iter: file.take("max-iter", flags.max_iter)?.unwrap_or(defaults.max_iter),
        eps_switch: file.take("eps-switch", flags.eps_switch)?.unwrap_or(defaults.eps_switch),
        fd_step: file.take("fd-step", flags.fd_step)?.unwrap_or(defaults.fd_step),
        max_halvings: defaults.max_halvings,
        record_timing: file.switch("timing", flags.timing)?,
    };
    let cfg = RunConfig {
        subcommand: format!("{kind:?}"),
        eps,
        eps_max,
        eps_step,
        d,
        solver,
        out_dir: file.take("out-dir", flags.out_dir)?.unwrap_or_else(|| PathBuf::from(".")),
        format: file.take("format", flags.format)?.unwrap_or(Format::Json),
        strict_display_formulas: file.switch("strict-display-formulas", flags.strict_display_formulas)?,
        threads: file.take("threads", flags.threads)?,
        points: file.take("m", flags.m)?.unwrap_or(2),
        t_end: file.take("t-end", flags.t_end)?.unwrap_or(10.0),
        h: file.take("h", flags.h)?.unwrap_or(1e-3),
        stride: file.take("stride", flags.stride)?.unwrap_or(1),
    };
    if let Some(key) = file.0.keys().next() {
        return Err(CliError::Usage(format!("unknown config key: {key}")));
    }
    match kind {
        CommandKind::Solve | CommandKind::Verify if cfg.eps_max.is_some() => {
            return Err(CliError::Usage("eps-max conflicts with a single-eps solve; use --eps".into()))
        }
        CommandKind::Continue if cfg.eps.is_some() => {
            return Err(CliError::Usage("continue takes --eps-max and --eps-step, not --eps".into()))
        }
        _ => {}
    }
    if cfg.threads == Some(0) {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    Ok(cfg)
}

/// Parse arguments (program name first) and merge the optional config file.
pub fn parse_config<I, T>(args: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (kind, flags) = cli.command.split();
    resolve(kind, flags).map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
}

fn write_records(cfg: &RunConfig, records: &[ContinuationRecord]) -> Result<PathBuf> {
    let path = match cfg.format {
        Format::Json => cfg.out_dir.join("records.json"),
        Format::Csv => cfg.out_dir.join("records.csv"),
    };
    match cfg.format {
        Format::Json => io::write_records_json(&path, records)?,
        Format::Csv => io::write_records_csv(&path, records)?,
    }
    Ok(path)
}

fn speed_report(out: &mut (dyn Write + Send), w: f64, d: f64) -> Result<()> {
    let (w_4d2, w_2d2) = io::reference_speeds(d);
    let magnitude = if (w.abs() - w_4d2).abs() <= 1e-12 * w_4d2 {
        "1/(2d)^2"
    } else if (w.abs() - w_2d2).abs() <= 1e-12 * w_2d2 {
        "1/(2d^2)"
    } else {
        "neither displayed value"
    };
    let sign = if w >= 0.0 { "+" } else { "-" };
    writeln!(out, "W = {} (sign {sign}, magnitude {magnitude})", io::num(w))?;
    writeln!(out, "displayed values: 1/(2d)^2 = {}, 1/(2d^2) = {}", io::num(w_4d2), io::num(w_2d2))?;
    Ok(())
}

fn run_solve(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let eps = cfg.eps.unwrap_or(0.0);
    let (rec, state) = solve_record(eps, cfg.d, Init::Predictor, &cfg.solver)?;
    let grid = cfg.solver.grid()?;
    let path = write_records(cfg, std::slice::from_ref(&rec))?;
    let curve = io::write_curve_csv(&cfg.out_dir, &state, &grid)?;
    writeln!(
        out,
        "eps = {} converged in {} iterations, residual {}",
        io::num(eps),
        rec.iterations,
        io::num(rec.residual_sup)
    )?;
    speed_report(out, rec.w, cfg.d)?;
    writeln!(out, "wrote {} and {}", path.display(), curve.display())?;
    Ok(())
}

fn run_continue(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let eps_max = cfg.eps_max.unwrap_or(0.1);
    let ladder = eps_ladder(eps_max, cfg.eps_step)?;
    let run = continuation(&ladder, cfg.d, &cfg.solver)?;
    let grid = cfg.solver.grid()?;
    // the ε = 0 seed is only reported when it is the whole sweep
    let skip = usize::from(run.records.len() > 1 && run.records[0].eps == 0.0);
    let records = &run.records[skip..];
    let path = write_records(cfg, records)?;
    io::write_wtable_csv(&cfg.out_dir.join("wtable.csv"), records)?;
    for state in &run.states[skip..] {
        io::write_curve_csv(&cfg.out_dir, state, &grid)?;
    }
    writeln!(out, "{} records written to {}", records.len(), path.display())?;
    if let Some(eps0) = run.empirical_eps0() {
        writeln!(out, "empirical eps0 = {}", io::num(eps0))?;
    }
    if let Ok(fit) = wslope_fit(&run.records) {
        match fit.exponent {
            Some(e) => writeln!(out, "W - W0 ~ |eps|^{e:.4}")?,
            None => writeln!(out, "W constant along the branch; exponent undefined")?,
        }
    }
    if let Some((eps, msg)) = run.stopped {
        writeln!(out, "stopped at eps = {}: {msg}", io::num(eps))?;
        return Err(Error::NonConvergence {
            iterations: cfg.solver.max_iter,
            history: Vec::new(),
        });
    }
    Ok(())
}

fn run_probe(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let grid = cfg.solver.grid()?;
    let table = measure_multipliers(cfg.solver.n, &grid)?;
    let ops = [
        assemble_blocks(&table, BlockSource::ClosedForm)?,
        assemble_blocks(&table, BlockSource::Measured)?,
    ];
    io::write_multipliers_csv(&cfg.out_dir.join("multipliers.csv"), &table)?;
    io::write_blocks_csv(&cfg.out_dir.join("blocks.csv"), &ops)?;
    writeln!(out, "{} modes at M = {}; C_1 = {}", table.n(), table.m, io::num(table.rows[0].c))?;
    Ok(())
}

#[derive(Serialize)]
struct WstarReport {
    m: usize,
    d: f64,
    wstar: f64,
    wstar_derivation: f64,
    #[serde(rename = "W_ref_4d2")]
    w_ref_4d2: f64,
    initial_velocities: Vec<[f64; 2]>,
    t_end: f64,
    h: f64,
    endpoint_deviation: f64,
    distance_drift: f64,
}

fn run_point_vortex(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let sys = PointSystem::lattice(cfg.points, cfg.d)?;
    let kernel = PointKernel::default();
    let w = wstar(cfg.points, cfg.d, &kernel)?;
    let traj = integrate_rk4(&sys, cfg.t_end, cfg.h)?;
    let t = *traj.times.last().unwrap_or(&0.0);
    let end = traj.last();
    let endpoint_deviation = sys
        .positions
        .iter()
        .zip(end)
        .map(|(z0, z)| (z[0] - z0[0]).hypot(z[1] - z0[1] - w * t))
        .fold(0.0, f64::max);
    let dist = |p: &[[f64; 2]]| (p[0][0] - p[1][0]).hypot(p[0][1] - p[1][1]);
    let d0 = dist(&sys.positions);
    let distance_drift = traj.positions.iter().map(|p| (dist(p) - d0).abs()).fold(0.0, f64::max);
    let report = WstarReport {
        m: cfg.points,
        d: cfg.d,
        wstar: w,
        wstar_derivation: wstar_derivation(cfg.points, cfg.d, &kernel)?,
        w_ref_4d2: io::reference_speeds(cfg.d).0,
        initial_velocities: sys.rhs()?,
        t_end: t,
        h: cfg.h,
        endpoint_deviation,
        distance_drift,
    };
    io::write_trajectory_csv(&cfg.out_dir.join("trajectory.csv"), &traj, cfg.stride)?;
    io::write_json(&cfg.out_dir.join("wstar.json"), &report)?;
    writeln!(out, "wstar = {}", io::num(report.wstar))?;
    writeln!(out, "wstar (derivation form) = {}", io::num(report.wstar_derivation))?;
    writeln!(out, "endpoint deviation = {:.3e}, distance drift = {:.3e}", endpoint_deviation, distance_drift)?;
    Ok(())
}

fn run_verify(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let eps = cfg.eps.unwrap_or(0.05);
    let (_, state) = solve_record(eps, cfg.d, Init::Predictor, &cfg.solver)?;
    let grid = cfg.solver.grid()?;
    let report = verify_state(&state, &grid, cfg.solver.n, cfg.strict_display_formulas)?;
    io::write_json(&cfg.out_dir.join("verify.json"), &report)?;
    writeln!(out, "tangency sup = {:.3e}", report.tangency_sup)?;
    writeln!(out, "strength std/|mean| = {:.3e}", report.strength_relative_spread)?;
    writeln!(out, "dual-path gaps F {:.3e}, G {:.3e}", report.dual_path_f_gap, report.dual_path_g_gap)?;
    Ok(())
}

/// Execute a resolved configuration, writing the human report to `out`.
pub fn run(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let go = |out: &mut (dyn Write + Send)| -> Result<()> {
        match cfg.subcommand.as_str() {
            "Solve" => run_solve(cfg, out),
            "Continue" => run_continue(cfg, out),
            "ProbeMultipliers" => run_probe(cfg, out),
            "PointVortex" => run_point_vortex(cfg, out),
            "Verify" => run_verify(cfg, out),
            other => Err(Error::Config(format!("unknown subcommand {other}"))),
        }
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| go(out)),
        None => go(out),
    }
}

/// Full entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (kind, flags) = cli.command.split();
    let result = resolve(kind, flags).and_then(|cfg| {
        let mut report = Vec::new();
        let result = run(&cfg, &mut report);
        let _ = std::io::stdout().write_all(&report);
        result.map_err(CliError::from)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
