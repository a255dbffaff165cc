//! Bound-constrained limited-memory BFGS.
//!
//! Each iteration picks the variables that are pinned at a bound with the
//! gradient pushing outward, builds a two-loop quasi-Newton direction over the
//! remaining free variables, and runs a projected backtracking search with an
//! Armijo test. Curvature pairs with `sᵀy ≤ 1e-10 ‖s‖ ‖y‖` are skipped so the
//! implied inverse Hessian stays positive definite. There is no generalized
//! Cauchy point or subspace minimization.

use std::collections::VecDeque;

use crate::bounds::Bounds;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiNewtonOptions {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub max_iterations: usize,
    /// Cap on calls to the objective-and-gradient function.
    pub max_function_evals: usize,
    /// Relative-decrease stop factor, in units of machine epsilon.
    pub factr: f64,
    /// Stop once the projected gradient's largest component is at most this.
    pub pgtol: f64,
    pub bounds: Bounds,
}

impl QuasiNewtonOptions {
    pub fn new(bounds: Bounds) -> Self {
        QuasiNewtonOptions {
            memory: 10,
            max_iterations: 5,
            max_function_evals: 100,
            factr: 1.0e12,
            pgtol: 1.0e-5,
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::Config("quasi-Newton memory must be at least 1".into()));
        }
        if self.max_function_evals == 0 {
            return Err(Error::Config("max_function_evals must be at least 1".into()));
        }
        if !(self.factr >= 0.0 && self.pgtol >= 0.0) {
            return Err(Error::Config(format!(
                "factr and pgtol must be non-negative, got {} and {}",
                self.factr, self.pgtol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ProjectedGradient,
    RelativeReduction,
    MaxIterations,
    MaxFunctionEvals,
    /// No step along the search direction decreased the objective.
    LineSearchFailed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ProjectedGradient => "projected gradient below tolerance",
            StopReason::RelativeReduction => "relative reduction below factr*epsilon",
            StopReason::MaxIterations => "iteration limit reached",
            StopReason::MaxFunctionEvals => "function evaluation limit reached",
            StopReason::LineSearchFailed => "line search failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub function_evals: usize,
    /// `gᵀd` of every search direction that was tried.
    pub directional_derivatives: Vec<f64>,
    /// Objective at the start point followed by every accepted iterate.
    pub accepted_f: Vec<f64>,
    pub skipped_pairs: usize,
    pub memory_resets: usize,
    pub line_search_failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiNewtonResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub stop: StopReason,
    pub diagnostics: Diagnostics,
}

/// Largest component of `P(x - g) - x`.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &Bounds) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - g[i]).clamp(bounds.lower()[i], bounds.upper()[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn masked(v: &[f64], free: &[bool]) -> Vec<f64> {
    v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
}

/// `-H g` over the free variables.
fn two_loop(g: &[f64], pairs: &VecDeque<Pair>, free: &[bool]) -> Vec<f64> {
    let mut q = masked(g, free);
    let reduced: Vec<(Vec<f64>, Vec<f64>)> = pairs.iter().map(|p| (masked(&p.s, free), masked(&p.y, free))).collect();
    let mut alpha = vec![0.0; reduced.len()];
    let mut rho = vec![0.0; reduced.len()];
    for (k, (s, y)) in reduced.iter().enumerate().rev() {
        let sy = dot(s, y);
        if sy <= 1e-10 * norm(s) * norm(y) || sy == 0.0 {
            continue;
        }
        rho[k] = 1.0 / sy;
        alpha[k] = rho[k] * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha[k] * yi;
        }
    }
    let gamma = reduced
        .iter()
        .rev()
        .zip(rho.iter().rev())
        .find(|(_, r)| **r > 0.0)
        .map_or(1.0, |((s, y), _)| dot(s, y) / dot(y, y));
    for qi in &mut q {
        *qi *= gamma;
    }
    for (k, (s, y)) in reduced.iter().enumerate() {
        if rho[k] == 0.0 {
            continue;
        }
        let beta = rho[k] * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha[k] - beta) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Variables that cannot move: at a bound with the gradient pointing outward.
fn active_set(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<bool> {
    (0..x.len())
        .map(|i| !((x[i] <= bounds.lower()[i] && g[i] > 0.0) || (x[i] >= bounds.upper()[i] && g[i] < 0.0)))
        .collect()
}

fn search_direction(x: &[f64], g: &[f64], pairs: &VecDeque<Pair>, bounds: &Bounds) -> Vec<f64> {
    let mut free = active_set(x, g, bounds);
    loop {
        let d = two_loop(g, pairs, &free);
        let mut changed = false;
        for i in 0..x.len() {
            if free[i]
                && ((x[i] <= bounds.lower()[i] && d[i] < 0.0) || (x[i] >= bounds.upper()[i] && d[i] > 0.0))
            {
                free[i] = false;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const EXPANSION: f64 = 4.0;
const MAX_TRIALS: usize = 60;

enum Search {
    Accepted { x: Vec<f64>, f: f64, g: Vec<f64> },
    Failed,
    OutOfEvals,
}

/// Projected search along `d`. Steps that pass the sufficient-decrease test
/// but still have a strongly negative slope are lengthened; failing steps are
/// halved. Returns the last step that passed the decrease test once the slope
/// flattens, the decrease test fails after it, or the projection stops the step
/// from growing.
#[allow(clippy::too_many_arguments)]
fn line_search(
    x: &[f64],
    f: f64,
    g: &[f64],
    d: &[f64],
    mut alpha: f64,
    bounds: &Bounds,
    max_evals: usize,
    diag: &mut Diagnostics,
    eval: &mut impl FnMut(&[f64], &mut Diagnostics) -> Result<(f64, Vec<f64>)>,
) -> Result<Search> {
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut upper: Option<f64> = None;
    let mut lower = 0.0;
    let mut last_step: Option<Vec<f64>> = None;
    for _ in 0..MAX_TRIALS {
        let trial: Vec<f64> = (0..x.len())
            .map(|i| (x[i] + alpha * d[i]).clamp(bounds.lower()[i], bounds.upper()[i]))
            .collect();
        let step: Vec<f64> = trial.iter().zip(x).map(|(a, b)| a - b).collect();
        if step.iter().all(|s| *s == 0.0) || last_step.as_ref() == Some(&step) {
            break;
        }
        let dec = dot(g, &step);
        let mut passed = false;
        if dec < 0.0 {
            if diag.function_evals >= max_evals {
                return Ok(match best {
                    Some((x, f, g)) => Search::Accepted { x, f, g },
                    None => Search::OutOfEvals,
                });
            }
            let (ft, gt) = eval(&trial, diag)?;
            if ft.is_finite() && ft <= f + ARMIJO_C1 * dec {
                passed = true;
                let flat = dot(&gt, &step) >= WOLFE_C2 * dec;
                best = Some((trial, ft, gt));
                if flat {
                    break;
                }
            }
        }
        if passed {
            lower = alpha;
            last_step = Some(step);
            alpha = match upper {
                Some(u) => 0.5 * (lower + u),
                None => alpha * EXPANSION,
            };
        } else {
            if best.is_some() {
                break;
            }
            upper = Some(alpha);
            alpha = 0.5 * (lower + alpha);
        }
    }
    Ok(match best {
        Some((x, f, g)) => Search::Accepted { x, f, g },
        None => Search::Failed,
    })
}

/// Minimizes `f_and_grad` over the box in `options.bounds`, starting from `x0`.
/// `on_iterate` sees every accepted iterate and its objective value.
pub fn lbfgsb_minimize(
    mut f_and_grad: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x0: &[f64],
    options: &QuasiNewtonOptions,
    mut on_iterate: impl FnMut(&[f64], f64) -> Result<()>,
) -> Result<QuasiNewtonResult> {
    options.validate()?;
    let bounds = &options.bounds;
    if !bounds.contains(x0) {
        return Err(Error::Optimizer(format!(
            "start point {x0:?} lies outside the bounds or has the wrong dimension"
        )));
    }
    let n = x0.len();
    let mut diag = Diagnostics::default();
    let mut eval = |x: &[f64], diag: &mut Diagnostics| -> Result<(f64, Vec<f64>)> {
        diag.function_evals += 1;
        let (f, g) = f_and_grad(x)?;
        if g.len() != n {
            return Err(Error::Shape(format!("gradient has {} entries, expected {n}", g.len())));
        }
        Ok((f, g))
    };

    let mut x = x0.to_vec();
    let (mut f, mut g) = eval(&x, &mut diag)?;
    diag.accepted_f.push(f);
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(options.memory);
    let eps = f64::EPSILON;

    let stop = loop {
        if projected_gradient_norm(&x, &g, bounds) <= options.pgtol {
            break StopReason::ProjectedGradient;
        }
        if diag.iterations >= options.max_iterations {
            break StopReason::MaxIterations;
        }

        let mut outcome = None;
        for attempt in 0..2 {
            let mut d = search_direction(&x, &g, &pairs, bounds);
            let mut gd = dot(&g, &d);
            if !(gd < 0.0) && !pairs.is_empty() {
                pairs.clear();
                diag.memory_resets += 1;
                d = search_direction(&x, &g, &pairs, bounds);
                gd = dot(&g, &d);
            }
            diag.directional_derivatives.push(gd);
            if !(gd < 0.0) {
                outcome = Some(Search::Failed);
                break;
            }
            let first = pairs.is_empty();
            let alpha = if first { (1.0 / norm(&d)).min(1.0) } else { 1.0 };
            let result = line_search(&x, f, &g, &d, alpha, bounds, options.max_function_evals, &mut diag, &mut eval)?;
            match result {
                Search::Failed if attempt == 0 && !pairs.is_empty() => {
                    pairs.clear();
                    diag.memory_resets += 1;
                }
                other => {
                    outcome = Some(other);
                    break;
                }
            }
        }

        match outcome.unwrap_or(Search::Failed) {
            Search::Failed => {
                diag.line_search_failed = true;
                break StopReason::LineSearchFailed;
            }
            Search::OutOfEvals => break StopReason::MaxFunctionEvals,
            Search::Accepted { x: xn, f: fn_, g: gn } => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                if dot(&s, &y) > 1e-10 * norm(&s) * norm(&y) {
                    if pairs.len() == options.memory {
                        pairs.pop_front();
                    }
                    pairs.push_back(Pair { s, y });
                } else {
                    diag.skipped_pairs += 1;
                }
                let f_old = f;
                x = xn;
                f = fn_;
                g = gn;
                diag.iterations += 1;
                diag.accepted_f.push(f);
                on_iterate(&x, f)?;
                if f_old - f <= options.factr * eps * f_old.abs().max(f.abs()).max(1.0) {
                    break StopReason::RelativeReduction;
                }
                if diag.function_evals >= options.max_function_evals {
                    break StopReason::MaxFunctionEvals;
                }
            }
        }
    };

    Ok(QuasiNewtonResult {
        x,
        f,
        g,
        stop,
        diagnostics: diag,
    })
}
