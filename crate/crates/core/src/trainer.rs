//! Hybrid training: particle swarm, then bounded quasi-Newton from the swarm's
//! best point with finite-difference gradients.
//!
//! Quasi-Newton iterates go to `result.txt`, one comma-joined line each. The
//! convergence log is a CSV with `iteration,phase,objective,x0,..` rows, phase
//! `pso` for swarm iterations and `qn` for quasi-Newton iterates.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gradient::{forward_diff_gradient, FdOptions};
use crate::io::{append_line, format_row, read_comma_table, write_comma_table};
use crate::lbfgsb::{lbfgsb_minimize, QuasiNewtonOptions, StopReason};
use crate::objective::Objective;
use crate::pool::EvalPool;
use crate::pso::{pso_run, PsoConfig, PsoIteration};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutputs {
    pub result: PathBuf,
    pub convergence: PathBuf,
}

impl TrainingOutputs {
    pub fn in_dir(dir: &Path) -> Self {
        TrainingOutputs {
            result: dir.join("result.txt"),
            convergence: dir.join("convergence.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub pso: PsoConfig,
    pub quasi_newton: QuasiNewtonOptions,
    pub gradient: FdOptions,
    /// Seeds particle 0; also the quasi-Newton start when the swarm is skipped.
    pub initial_guess: Option<Vec<f64>>,
    pub worker_cap: usize,
    pub outputs: TrainingOutputs,
}

impl TrainingConfig {
    pub fn dim(&self) -> usize {
        self.pso.bounds.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.worker_cap == 0 {
            return Err(Error::Config("worker cap must be at least 1".into()));
        }
        if self.pso.bounds != self.quasi_newton.bounds {
            return Err(Error::Config("swarm and quasi-Newton bounds differ".into()));
        }
        if let Some(g) = &self.initial_guess {
            if !self.pso.bounds.contains(g) {
                return Err(Error::Config(format!("initial guess {g:?} is outside the bounds")));
            }
        }
        if self.pso.max_iterations == 0 && self.initial_guess.is_none() {
            return Err(Error::Config("an initial guess is required when the swarm phase is skipped".into()));
        }
        self.pso.validate()?;
        self.quasi_newton.validate()
    }
}

/// One accepted quasi-Newton point (index 0 is the start).
#[derive(Debug, Clone, PartialEq)]
pub struct QnIterate {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub pso_history: Vec<PsoIteration>,
    pub qn_history: Vec<QnIterate>,
    pub qn_stop: StopReason,
    pub final_parameters: Vec<f64>,
    pub final_objective: f64,
    pub pso_evaluations: usize,
    pub qn_evaluations: usize,
    pub pso_time: Duration,
    pub qn_time: Duration,
}

/// Appends `x` to `path` as one comma-joined line.
pub fn log_iterate(path: &Path, x: &[f64]) -> Result<()> {
    append_line(path, &format_row(x, ","))
}

fn convergence_row(iteration: usize, phase: &str, objective: f64, x: &[f64]) -> String {
    format!("{iteration},{phase},{},{}", format_row(&[objective], ","), format_row(x, ","))
}

fn convergence_header(n: usize) -> String {
    let cols: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    format!("iteration,phase,objective,{}", cols.join(","))
}

fn remove_if_present(path: &Path) -> Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(path, e)),
        _ => Ok(()),
    }
}

pub fn hybrid_train(objective: &impl Objective, config: &TrainingConfig) -> Result<TrainingReport> {
    config.validate()?;
    let n = config.dim();
    let out = &config.outputs;
    remove_if_present(&out.result)?;
    fs::write(&out.convergence, convergence_header(n) + "\n").map_err(|e| Error::io(&out.convergence, e))?;

    let swarm_pool = EvalPool::new(config.worker_cap.min(config.pso.particles))?;
    let start = Instant::now();
    let (pso_history, pso_evaluations, x_start) = if config.pso.max_iterations > 0 {
        let res = pso_run(
            &config.pso,
            objective,
            &swarm_pool,
            config.initial_guess.as_deref(),
            |it| append_line(&out.convergence, &convergence_row(it.iteration, "pso", it.best_fitness, &it.best_position)),
        )?;
        (res.history, res.evaluations, res.best_position)
    } else {
        (Vec::new(), 0, config.initial_guess.clone().unwrap_or_default())
    };
    let pso_time = start.elapsed();

    let grad_pool = EvalPool::new(config.worker_cap.min(n + 1))?;
    let bounds = &config.quasi_newton.bounds;
    let mut qn_evaluations = 0;
    let mut qn_history = Vec::new();
    let start = Instant::now();
    let f_and_grad = |x: &[f64]| {
        let r = forward_diff_gradient(objective, x, &config.gradient, Some(bounds), &grad_pool)?;
        qn_evaluations += r.evaluations_used;
        Ok((r.f, r.g))
    };
    let result = lbfgsb_minimize(f_and_grad, &x_start, &config.quasi_newton, |x, f| {
        log_iterate(&out.result, x)?;
        let iteration = qn_history.len() + 1;
        append_line(&out.convergence, &convergence_row(iteration, "qn", f, x))?;
        qn_history.push(QnIterate {
            iteration,
            x: x.to_vec(),
            objective: f,
        });
        Ok(())
    })?;
    qn_history.insert(
        0,
        QnIterate {
            iteration: 0,
            x: x_start,
            objective: result.diagnostics.accepted_f[0],
        },
    );
    let qn_time = start.elapsed();

    let final_objective = objective.evaluate(&result.x)?;
    Ok(TrainingReport {
        pso_history,
        qn_history,
        qn_stop: result.stop,
        final_parameters: result.x,
        final_objective,
        pso_evaluations,
        qn_evaluations,
        pso_time,
        qn_time,
    })
}

/// Re-scores every row of a history file and rewrites it with the objective
/// appended as a last column. Returns the rewritten rows.
pub fn evaluate_history(objective: &impl Objective, path: &Path, dim: usize, pool: &EvalPool) -> Result<Vec<Vec<f64>>> {
    let rows = read_comma_table(path)?;
    if let Some(r) = rows.first() {
        if r.len() != dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected {dim} columns, found {}", r.len()),
            });
        }
    }
    let scores = pool.map(&rows, |_, x| objective.evaluate(x));
    let mut out = Vec::with_capacity(rows.len());
    for (mut row, s) in rows.into_iter().zip(scores) {
        row.push(s?);
        out.push(row);
    }
    write_comma_table(path, &out)?;
    Ok(out)
}
