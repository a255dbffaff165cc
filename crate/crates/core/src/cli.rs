//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::Bounds;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fe::simulate_with;
use crate::gradient::{forward_diff_gradient, FdOptions, StepMode};
use crate::io::write_whitespace_table;
use crate::lbfgsb::{lbfgsb_minimize, QuasiNewtonOptions};
use crate::pool::{default_workers, workers_from_env, EvalPool};
use crate::pso::{pso_run, PsoConfig};
use crate::trainer::{evaluate_history, hybrid_train};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "neuroskin", version, about = "Neuro-membrane simulation and hybrid parameter training")]
pub struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum concurrent objective evaluations. Overrides NEUROSKIN_WORKERS and the config.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward run of the configured model; writes time and displacement columns.
    Simulate {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Forward run at the configured true parameters; writes the target file.
    MakeTarget {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Swarm search followed by quasi-Newton refinement.
    Train,
    /// Appends the objective of every row of a history file as a new column.
    Evaluate {
        /// Defaults to the configured result file.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Runs both optimizers on a standard test function.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchFunction::Sphere)]
        function: BenchFunction,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 30)]
        particles: usize,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchFunction {
    Sphere,
    Rosenbrock,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {}", error_chain(&e));
            EXIT_FAILURE
        }
    }
}

fn error_chain(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut cur: Option<&dyn std::error::Error> = std::error::Error::source(e);
    while let Some(s) = cur {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        cur = s.source();
    }
    msg
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_config(cli: &Cli) -> std::result::Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config <path> is required for this command".into()))?;
    if !path.is_file() {
        return Err(Failure::Usage(format!("config file {} not found", path.display())));
    }
    Ok(ExperimentConfig::load(path)?)
}

/// Command line, then environment, then config, then the core count.
pub fn resolve_workers(flag: Option<usize>, configured: Option<usize>) -> Result<usize> {
    if flag == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    if let Some(n) = flag {
        return Ok(n);
    }
    if let Some(n) = workers_from_env()? {
        return Ok(n);
    }
    Ok(configured.unwrap_or_else(default_workers))
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Simulate { output } => {
            let cfg = load_config(cli)?;
            let model = cfg.build_model()?;
            let trace = simulate_with(&model, &cfg.input_signal(&model)?, &cfg.settings(&model)?)?;
            let rows: Vec<Vec<f64>> = trace
                .times
                .iter()
                .zip(&trace.rows)
                .map(|(t, r)| std::iter::once(*t).chain(r.iter().copied()).collect())
                .collect();
            let path = out_path(&cfg, output.as_deref(), &cfg.training.trace);
            write_whitespace_table(&path, &rows)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::MakeTarget { output } => {
            let cfg = load_config(cli)?;
            let x = cfg.true_values()?;
            let model = cfg.model_at(&x)?;
            let trace = simulate_with(&model, &cfg.input_signal(&model)?, &cfg.settings(&model)?)?;
            let path = out_path(&cfg, output.as_deref(), &cfg.objective.target);
            write_whitespace_table(&path, &trace.rows)?;
            println!("wrote {} rows to {}", trace.rows.len(), path.display());
        }
        Command::Train => {
            let cfg = load_config(cli)?;
            let workers = resolve_workers(cli.workers, cfg.training.workers)?;
            let seed = cli.seed.unwrap_or(cfg.training.seed);
            let objective = cfg.objective()?;
            let training = cfg.training(seed, workers)?;
            let report = hybrid_train(&objective, &training)?;
            println!(
                "swarm: {} iterations, {} evaluations, {:.2?}",
                report.pso_history.len(),
                report.pso_evaluations,
                report.pso_time
            );
            println!(
                "quasi-Newton: {} iterates, {} evaluations, {:.2?} ({})",
                report.qn_history.len() - 1,
                report.qn_evaluations,
                report.qn_time,
                report.qn_stop.as_str()
            );
            println!("parameters: {:?}", report.final_parameters);
            println!("objective: {:?}", report.final_objective);
        }
        Command::Evaluate { history } => {
            let cfg = load_config(cli)?;
            let workers = resolve_workers(cli.workers, cfg.training.workers)?;
            let path = out_path(&cfg, history.as_deref(), &cfg.training.result);
            let objective = cfg.objective()?;
            let rows = evaluate_history(&objective, &path, cfg.dim(), &EvalPool::new(workers)?)?;
            println!("scored {} rows in {}", rows.len(), path.display());
        }
        Command::Bench {
            function,
            dim,
            particles,
            iterations,
        } => {
            let workers = resolve_workers(cli.workers, None)?;
            bench(*function, *dim, *particles, *iterations, cli.seed.unwrap_or(0), workers)?;
        }
    }
    Ok(())
}

fn out_path(cfg: &ExperimentConfig, flag: Option<&Path>, configured: &Path) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => cfg.resolve(configured),
    }
}

fn sphere(x: &[f64]) -> Result<f64> {
    Ok(x.iter().map(|v| v * v).sum())
}

fn rosenbrock(x: &[f64]) -> Result<f64> {
    Ok(x.windows(2)
        .map(|w| (1.0 - w[0]).powi(2) + 100.0 * (w[1] - w[0] * w[0]).powi(2))
        .sum())
}

fn bench(function: BenchFunction, dim: usize, particles: usize, iterations: usize, seed: u64, workers: usize) -> Result<()> {
    let (f, lo, hi): (fn(&[f64]) -> Result<f64>, f64, f64) = match function {
        BenchFunction::Sphere => (sphere, -5.0, 5.0),
        BenchFunction::Rosenbrock => (rosenbrock, -2.0, 2.0),
    };
    if dim == 0 || (matches!(function, BenchFunction::Rosenbrock) && dim < 2) {
        return Err(Error::Config(format!("dimension {dim} is too small for this function")));
    }
    let bounds = Bounds::uniform(dim, lo, hi)?;
    let pool = EvalPool::new(workers)?;
    let cfg = PsoConfig {
        particles,
        max_iterations: iterations,
        seed,
        ..PsoConfig::new(bounds.clone())
    };
    let t = std::time::Instant::now();
    let swarm = pso_run(&cfg, &f, &pool, None, |_| Ok(()))?;
    println!("swarm: best {:?} after {} iterations ({:.2?})", swarm.best_fitness, iterations, t.elapsed());

    let fd = FdOptions {
        delta: 1e-7,
        mode: StepMode::Absolute,
    };
    let opts = QuasiNewtonOptions {
        max_iterations: 500,
        max_function_evals: 2000,
        factr: 10.0,
        pgtol: 1e-9,
        ..QuasiNewtonOptions::new(bounds.clone())
    };
    let grad_pool = EvalPool::new(workers.min(dim + 1))?;
    let t = std::time::Instant::now();
    let qn = lbfgsb_minimize(
        |x| {
            let r = forward_diff_gradient(&f, x, &fd, Some(&bounds), &grad_pool)?;
            Ok((r.f, r.g))
        },
        &swarm.best_position,
        &opts,
        |_, _| Ok(()),
    )?;
    println!(
        "quasi-Newton: best {:?} after {} iterations, {} ({:.2?})",
        qn.f,
        qn.diagnostics.iterations,
        qn.stop.as_str(),
        t.elapsed()
    );
    Ok(())
}
