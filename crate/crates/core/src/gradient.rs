//! Forward-difference gradients with concurrent evaluation.
//!
//! For `x` in `n` dimensions the base point and the `n` perturbed points are
//! independent, so all `n + 1` evaluations are handed to the pool at once.

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::pool::EvalPool;

/// How the perturbation size is derived from `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// `h = delta` in every dimension.
    #[default]
    Absolute,
    /// `h = delta * max(|x_i|, 1)`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub delta: f64,
    pub mode: StepMode,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            delta: 1.0e-2,
            mode: StepMode::Absolute,
        }
    }
}

impl FdOptions {
    pub fn step(&self, xi: f64) -> f64 {
        match self.mode {
            StepMode::Absolute => self.delta,
            StepMode::Relative => self.delta * xi.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    pub f: f64,
    pub g: Vec<f64>,
    pub evaluations_used: usize,
}

/// Signed steps per dimension. Where `x_i + h` would leave the box the step
/// is taken backward instead.
pub fn perturbation_steps(x: &[f64], options: &FdOptions, bounds: Option<&Bounds>) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let h = options.step(xi);
            match bounds {
                Some(b) if xi + h > b.upper()[i] => -h,
                _ => h,
            }
        })
        .collect()
}

/// `g_i = (f(x + h_i e_i) - f(x)) / h_i`.
///
/// A failing evaluation aborts with [`Error::Gradient`]; its `index` is 0 for
/// the base point and `i + 1` for the perturbation of dimension `i`.
pub fn forward_diff_gradient(
    objective: &impl Objective,
    x: &[f64],
    options: &FdOptions,
    bounds: Option<&Bounds>,
    pool: &EvalPool,
) -> Result<GradientResult> {
    if !(options.delta > 0.0 && options.delta.is_finite()) {
        return Err(Error::Parameter(format!("finite-difference step must be positive, got {}", options.delta)));
    }
    let steps = perturbation_steps(x, options, bounds);
    let points: Vec<Vec<f64>> = std::iter::once(x.to_vec())
        .chain(steps.iter().enumerate().map(|(i, h)| {
            let mut p = x.to_vec();
            p[i] += h;
            p
        }))
        .collect();

    let values = pool.map(&points, |_, p| objective.evaluate(p));
    let mut f = Vec::with_capacity(values.len());
    for (index, v) in values.into_iter().enumerate() {
        match v {
            Ok(v) => f.push(v),
            Err(e) => {
                return Err(Error::Gradient {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    let g = steps
        .iter()
        .enumerate()
        .map(|(i, h)| (f[i + 1] - f[0]) / h)
        .collect();
    Ok(GradientResult {
        f: f[0],
        g,
        evaluations_used: points.len(),
    })
}
