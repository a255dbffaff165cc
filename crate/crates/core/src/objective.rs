//! Error measures between simulated and target responses, parameter grouping,
//! and the membrane objective that ties a design vector to a forward run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::{simulate_with, InputSignal, SimulationSettings, SimulationTrace};
use crate::io::read_whitespace_table;
use crate::membrane::MembraneModel;

/// Anything that maps a design vector to a scalar cost. Must be pure in `x`:
/// optimizers evaluate it concurrently and rely on bit-identical repeats.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self(x)
    }
}

fn check_series(predicted: &[f64], target: &[f64]) -> Result<()> {
    if predicted.len() != target.len() {
        return Err(Error::Shape(format!(
            "predicted series has {} samples, target has {}",
            predicted.len(),
            target.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::Shape("series must hold at least one sample".into()));
    }
    Ok(())
}

/// `(1/N) Σ (ŷᵢ − yᵢ)²`
pub fn mse(predicted: &[f64], target: &[f64]) -> Result<f64> {
    check_series(predicted, target)?;
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / target.len() as f64)
}

pub fn rmse(predicted: &[f64], target: &[f64]) -> Result<f64> {
    mse(predicted, target).map(f64::sqrt)
}

/// `Σ_t Σ_i (y_sim − y_target)²` over a (time × node) table, unnormalized.
pub fn cost_multinode(sim: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64> {
    if sim.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} simulated time steps, {} target time steps",
            sim.len(),
            target.len()
        )));
    }
    let mut total = 0.0;
    for (t, (s, y)) in sim.iter().zip(target).enumerate() {
        if s.len() != y.len() {
            return Err(Error::Shape(format!(
                "time step {t}: {} simulated nodes, {} target nodes",
                s.len(),
                y.len()
            )));
        }
        total += s.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total)
}

/// Replicates each of the `n` design values over a contiguous block of
/// `n_elements / n` elements in element-numbering order.
pub fn expand_parameters(x: &[f64], n_elements: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 || n_elements % n != 0 {
        return Err(Error::Config(format!(
            "{n} parameter groups do not divide {n_elements} elements"
        )));
    }
    let block = n_elements / n;
    Ok((0..n_elements).map(|j| x[j / block]).collect())
}

/// Measured (or synthetic) response: rows are time samples, columns tracked nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    rows: Vec<Vec<f64>>,
}

impl TargetSeries {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Shape("target series is empty".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("target rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Shape("target series contains non-finite values".into()));
        }
        Ok(TargetSeries { rows })
    }

    pub fn from_trace(trace: &SimulationTrace) -> Result<Self> {
        TargetSeries::new(trace.rows.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        TargetSeries::new(read_whitespace_table(path)?)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn columns(&self) -> usize {
        self.rows[0].len()
    }

    /// First column: the output node.
    pub fn output(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }
}

/// What the design vector controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParameterMode {
    /// Elastic moduli of contiguous element blocks.
    #[default]
    ElementModulusGroups,
    /// Output weights `w_o` of the neurons in contiguous element blocks.
    NeuronOutputWeights,
}

/// How a simulated trace is scored against the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Root-mean-square error on the output-node channel.
    #[default]
    Rmse,
    /// Unnormalized squared error summed over all tracked nodes and time steps.
    MultiNode,
}

/// Forward model plus target: `x ↦ cost(simulate(model(x)), target)`.
#[derive(Debug, Clone)]
pub struct MembraneObjective {
    pub model: MembraneModel,
    pub inputs: InputSignal,
    pub settings: SimulationSettings,
    pub target: TargetSeries,
    pub parameter_mode: ParameterMode,
    pub cost_mode: CostMode,
}

impl MembraneObjective {
    /// Model with `x` expanded over the elements.
    pub fn model_for(&self, x: &[f64]) -> Result<MembraneModel> {
        apply_parameters(&self.model, x, self.parameter_mode)
    }

    pub fn simulate(&self, x: &[f64]) -> Result<SimulationTrace> {
        let model = self.model_for(x)?;
        simulate_with(&model, &self.inputs, &self.settings)
    }

    pub fn score(&self, trace: &SimulationTrace) -> Result<f64> {
        match self.cost_mode {
            CostMode::Rmse => rmse(&trace.output(), &self.target.output()),
            CostMode::MultiNode => cost_multinode(&trace.rows, self.target.rows()),
        }
    }

    fn evaluate_inner(&self, x: &[f64]) -> Result<f64> {
        let trace = self.simulate(x)?;
        self.score(&trace)
    }
}

impl Objective for MembraneObjective {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.evaluate_inner(x).map_err(|e| Error::Evaluation {
            x: x.to_vec(),
            source: Box::new(e),
        })
    }
}

/// Copy of `model` with the grouped design vector written into it.
pub fn apply_parameters(model: &MembraneModel, x: &[f64], mode: ParameterMode) -> Result<MembraneModel> {
    let values = expand_parameters(x, model.element_count())?;
    let mut m = model.clone();
    match mode {
        ParameterMode::ElementModulusGroups => {
            m.material.moduli = values;
            m.material.validate()?;
        }
        ParameterMode::NeuronOutputWeights => {
            for (n, w) in m.neurons.iter_mut().zip(values) {
                n.output_weight = w;
            }
        }
    }
    Ok(m)
}
