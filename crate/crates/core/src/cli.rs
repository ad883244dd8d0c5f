//! The `gpe` command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 non-convergence, 4 dissipation violations found by `audit`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{cached_reference, convergence_study, dissipation_audit_with, reference_config, Sweep};
use crate::io::{read_trace_csv, write_field_snapshot, write_trace_csv};
use crate::problems::{load_config, ProblemConfig, SolverSection};
use crate::rotating::run_rotating;
use crate::functionals::truncation_bound;
use crate::solver::{solve, IterationTrace};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_DISSIPATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "gpe", version, about = "Relaxed Gross-Pitaevskii ground-state solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one non-rotating problem; writes a trace CSV and a field snapshot.
    Solve(RunArgs),
    /// Sweep tau or h against a reference; writes a report CSV.
    Converge(ConvergeArgs),
    /// Run a rotating problem.
    Rotate(RotateArgs),
    /// Check a trace CSV for energy increases.
    Audit(AuditArgs),
    /// Build (or reuse) the order-2 reference solution.
    Reference(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "builtin")]
    pub config: Option<PathBuf>,
    /// ex1d_lattice, ex2d_harmonic or ex2d_rotating.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long)]
    pub order: Option<u32>,
    /// Fixed relaxation parameter.
    #[arg(long, conflicts_with_all = ["tau0", "tauf", "r"])]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub tauf: Option<f64>,
    /// Reduction ratio between adaptive stages.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct RotateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Use the truncated nonlinearity in the rotating update.
    #[arg(long)]
    pub truncate: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated decreasing tau values.
    #[arg(long, value_delimiter = ',', conflicts_with = "sweep_h", required_unless_present = "sweep_h")]
    pub sweep_tau: Option<Vec<f64>>,
    /// Comma-separated decreasing grid spacings.
    #[arg(long, value_delimiter = ',')]
    pub sweep_h: Option<Vec<f64>>,
    /// Reference snapshot; built with the default oracle settings if missing.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Trace CSV written by `solve` or `rotate`.
    pub trace: PathBuf,
    #[arg(long, default_value_t = crate::harness::DISSIPATION_THRESHOLD)]
    pub threshold: f64,
}

impl ProblemArgs {
    /// Name used in output file names.
    fn name(&self) -> String {
        match (&self.builtin, &self.config) {
            (Some(b), _) => b.clone(),
            (None, Some(p)) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into()),
            (None, None) => "run".into(),
        }
    }

    /// The configuration with command-line overrides applied.
    pub fn resolve(&self) -> Result<ProblemConfig> {
        let mut cfg = match (&self.builtin, &self.config) {
            (Some(name), _) => ProblemConfig::builtin(name).map_err(|e| Error::config("builtin", e.to_string()))?,
            (None, Some(path)) => load_config(path)?,
            (None, None) => return Err(Error::config("builtin", "give --builtin NAME or --config PATH")),
        };
        apply_overrides(&mut cfg.solver, self);
        Ok(cfg)
    }
}

fn apply_overrides(s: &mut SolverSection, a: &ProblemArgs) {
    if let Some(order) = a.order {
        s.order = order;
    }
    if let Some(tau) = a.tau {
        s.tau = Some(tau);
        s.tau0 = None;
        s.tauf = None;
        s.r = None;
    }
    if a.tau0.is_some() || a.tauf.is_some() || a.r.is_some() {
        let fallback = s.tau.take();
        s.tau0 = a.tau0.or(s.tau0).or(fallback);
        s.tauf = a.tauf.or(s.tauf).or(fallback);
        s.r = a.r.or(s.r);
    }
    if let Some(tol) = a.tol {
        s.tol = tol;
    }
    if let Some(n) = a.n_max {
        s.n_max = n;
    }
}

fn output_stem(name: &str, order: u32, tau: f64) -> String {
    format!("{name}_{order}_{tau}")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn summarize(trace: &IterationTrace) {
    if let Some(last) = trace.last() {
        println!(
            "iterations {}  tau {}  E {:.12}  E_relaxed {:.12}  residual {:.3e}  {}",
            last.iter,
            last.tau,
            last.original_energy,
            last.relaxed_energy,
            last.residual,
            if trace.converged() { "converged" } else { "NOT converged" }
        );
    }
}

fn write_run(args: &ProblemArgs, order: u32, tau: f64, field: &crate::grid::WaveField, trace: &IterationTrace) -> Result<()> {
    ensure_dir(&args.out)?;
    let stem = output_stem(&args.name(), order, tau);
    write_trace_csv(trace, args.out.join(format!("{stem}.csv")))?;
    write_field_snapshot(field, args.out.join(format!("{stem}.gpef")))?;
    println!("wrote {}", args.out.join(&stem).display());
    Ok(())
}

fn cmd_solve(args: &RunArgs) -> Result<u8> {
    let cfg = args.problem.resolve()?;
    let run = cfg.build()?;
    if run.problem.omega() != 0.0 {
        return Err(Error::config("omega", "rotating problem; use `gpe rotate`"));
    }
    let (field, trace) = solve(&run.initial, &run.problem, &run.config)?;
    summarize(&trace);
    write_run(&args.problem, cfg.solver.order, run.config.final_tau(), &field, &trace)?;
    Ok(if trace.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_rotate(args: &RotateArgs) -> Result<u8> {
    let mut cfg = args.problem.resolve()?;
    cfg.solver.truncate |= args.truncate;
    let run = cfg.build()?;
    let bound = run.truncate.then(|| truncation_bound(&run.problem));
    let (field, trace) = run_rotating(&run.initial, &run.problem, &run.config, bound)?;
    summarize(&trace);
    write_run(&args.problem, cfg.solver.order, run.config.final_tau(), &field, &trace)?;
    Ok(if trace.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn reference_path(args: &ProblemArgs) -> PathBuf {
    let r = reference_config();
    args.out
        .join(format!("{}_ref_{}_{}.gpef", args.name(), r.order.number(), r.final_tau()))
}

fn cmd_reference(args: &RunArgs) -> Result<u8> {
    let cfg = args.problem.resolve()?;
    let run = cfg.build()?;
    ensure_dir(&args.problem.out)?;
    let path = reference_path(&args.problem);
    let reference = cached_reference(&run.initial, &run.problem, &reference_config(), &path)?;
    println!("reference E {:.15}  mu {:.15}  -> {}", reference.energy, reference.mu, path.display());
    Ok(0)
}

fn cmd_converge(args: &ConvergeArgs) -> Result<u8> {
    let cfg = args.problem.resolve()?;
    let run = cfg.build()?;
    ensure_dir(&args.problem.out)?;
    let sweep = match (&args.sweep_tau, &args.sweep_h) {
        (Some(t), _) => Sweep::Tau(t.clone()),
        (None, Some(h)) => Sweep::Spacing(h.clone()),
        (None, None) => return Err(Error::config("sweep", "give --sweep-tau or --sweep-h")),
    };
    let path = args.reference.clone().unwrap_or_else(|| reference_path(&args.problem));
    let reference_cfg = match sweep {
        Sweep::Tau(_) => reference_config(),
        Sweep::Spacing(_) => run.config.clone(),
    };
    let reference = cached_reference(&run.initial, &run.problem, &reference_cfg, &path)?;
    let report = convergence_study(&cfg, &sweep, &reference)?;
    let kind = match sweep {
        Sweep::Tau(_) => "tau",
        Sweep::Spacing(_) => "h",
    };
    let out = args
        .problem
        .out
        .join(format!("{}_{}_converge_{kind}.csv", args.problem.name(), cfg.solver.order));
    report.write_csv(&out)?;
    print!("{}", report.to_csv());
    Ok(if report.rows.iter().all(|r| r.converged) { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_audit(args: &AuditArgs) -> Result<u8> {
    let trace = read_trace_csv(&args.trace)?;
    if trace.is_empty() {
        return Err(Error::argument("trace has no records"));
    }
    let report = dissipation_audit_with(&trace, args.threshold);
    println!(
        "checked {} iterates: {} relaxed-energy increases (max {:.3e}), {} original-energy increases (max {:.3e})",
        report.checked,
        report.relaxed.len(),
        report.max_relaxed_increase,
        report.original.len(),
        report.max_original_increase
    );
    for v in &report.relaxed {
        println!("relaxed  iter {}  +{:.3e}", v.iter, v.increase);
    }
    for v in &report.original {
        println!("original iter {}  +{:.3e}", v.iter, v.increase);
    }
    Ok(if report.is_clean() { 0 } else { EXIT_DISSIPATION })
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Argument(_) => EXIT_CONFIG,
        Error::Solver { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Rotate(a) => cmd_rotate(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Reference(a) => cmd_reference(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

pub fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
