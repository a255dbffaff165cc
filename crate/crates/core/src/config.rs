//! TOML experiment description.
//!
//! Every section is optional and falls back to the documented defaults.
//! Relative paths are resolved against the directory holding the config file.
//! Parameter values (`lower`, `upper`, `initial_guess`, `true_values`) and a
//! few model values accept either a scalar, applied to every entry, or a full
//! vector.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::fe::{FixedPointOptions, InputSignal, Rayleigh, SimulationSettings};
use crate::gradient::{FdOptions, StepMode};
use crate::io::read_whitespace_table;
use crate::lbfgsb::QuasiNewtonOptions;
use crate::membrane::{
    build_membrane, defaults, ActivationKind, MembraneModel, Neuron, SupportEdge, DEFAULT_OUTPUT_NODE,
};
use crate::objective::{apply_parameters, CostMode, MembraneObjective, ParameterMode, TargetSeries};
use crate::pso::PsoConfig;
use crate::trainer::{TrainingConfig, TrainingOutputs};

/// A scalar broadcast to every entry, or an explicit vector.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Values {
    pub fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Values::Scalar(v) => Ok(vec![*v; n]),
            Values::Vector(v) if v.len() == n => Ok(v.clone()),
            Values::Vector(v) => Err(Error::Config(format!("{what}: expected {n} values, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub nx: usize,
    pub ny: usize,
    pub size: f64,
    pub support_edge: SupportEdge,
    /// 1-based node number of the output node.
    pub output_node: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            nx: 20,
            ny: 10,
            size: 50.0,
            support_edge: SupportEdge::Left,
            output_node: DEFAULT_OUTPUT_NODE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    /// Per-element modulus or one value for all.
    pub youngs_modulus: Values,
    pub poisson_ratio: f64,
    pub density: f64,
    pub thickness: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection {
            youngs_modulus: Values::Scalar(defaults::YOUNGS_MODULUS),
            poisson_ratio: defaults::POISSON_RATIO,
            density: defaults::DENSITY,
            thickness: defaults::THICKNESS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronSection {
    pub input_weights: Values,
    pub activation: ActivationKind,
    pub output_weight: f64,
}

impl Default for NeuronSection {
    fn default() -> Self {
        NeuronSection {
            input_weights: Values::Scalar(1.0),
            activation: ActivationKind::SymmetricSigmoid,
            output_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub steps: usize,
    pub mass_damping: f64,
    pub stiffness_damping: f64,
    pub fixed_point_tolerance: f64,
    pub fixed_point_max_iterations: usize,
    /// Extra 1-based nodes recorded after the output node.
    pub tracked_nodes: Vec<usize>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let fp = FixedPointOptions::default();
        SimulationSection {
            dt: 1e-3,
            steps: 300,
            mass_damping: 0.0,
            stiffness_damping: 0.0,
            fixed_point_tolerance: fp.tolerance,
            fixed_point_max_iterations: fp.max_iterations,
            tracked_nodes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Three-tone signal that differs from support to support.
    #[default]
    Multisine,
    /// Whitespace table, one row per step, one column per support.
    File,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub kind: InputKind,
    pub amplitude: f64,
    pub frequencies: [f64; 3],
    /// Linear ramp-in duration.
    pub ramp: f64,
    pub path: Option<PathBuf>,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection {
            kind: InputKind::Multisine,
            amplitude: 0.05,
            frequencies: [7.0, 17.0, 31.0],
            ramp: 0.02,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSection {
    pub target: PathBuf,
    pub cost: CostMode,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        ObjectiveSection {
            target: PathBuf::from("output.out"),
            cost: CostMode::Rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametersSection {
    pub mode: ParameterMode,
    pub groups: usize,
    pub lower: Values,
    pub upper: Values,
    pub initial_guess: Option<Values>,
    /// Parameters used by `make-target`.
    pub true_values: Option<Values>,
}

impl Default for ParametersSection {
    fn default() -> Self {
        ParametersSection {
            mode: ParameterMode::ElementModulusGroups,
            groups: 4,
            lower: Values::Scalar(400000.0),
            upper: Values::Scalar(550000.0),
            initial_guess: Some(Values::Scalar(450000.0)),
            true_values: Some(Values::Scalar(500000.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoSection {
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub particles: usize,
    pub max_iterations: usize,
}

impl Default for PsoSection {
    fn default() -> Self {
        PsoSection {
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            particles: 20,
            max_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiNewtonSection {
    pub memory: usize,
    pub max_iterations: usize,
    pub max_function_evals: usize,
    pub factr: f64,
    pub pgtol: f64,
    /// Finite-difference step.
    pub delta: f64,
    pub step_mode: StepMode,
}

impl Default for QuasiNewtonSection {
    fn default() -> Self {
        let fd = FdOptions::default();
        QuasiNewtonSection {
            memory: 10,
            max_iterations: 5,
            max_function_evals: 100,
            factr: 1.0e12,
            pgtol: 1.0e-5,
            delta: fd.delta,
            step_mode: fd.mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub seed: u64,
    /// Cap on concurrent objective evaluations; defaults to the core count.
    pub workers: Option<usize>,
    pub result: PathBuf,
    pub convergence: PathBuf,
    /// Where `simulate` writes its trace.
    pub trace: PathBuf,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            seed: 0,
            workers: None,
            result: PathBuf::from("result.txt"),
            convergence: PathBuf::from("convergence.csv"),
            trace: PathBuf::from("trace.out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshSection,
    pub material: MaterialSection,
    pub neuron: NeuronSection,
    pub simulation: SimulationSection,
    pub input: InputSection,
    pub objective: ObjectiveSection,
    pub parameters: ParametersSection,
    pub pso: PsoSection,
    pub quasi_newton: QuasiNewtonSection,
    pub training: TrainingSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        let elements = self.mesh.nx * self.mesh.ny;
        let g = self.parameters.groups;
        if g == 0 || elements == 0 || elements % g != 0 {
            return Err(Error::Config(format!("{g} parameter groups do not divide {elements} elements")));
        }
        if !(self.simulation.dt > 0.0) || self.simulation.steps == 0 {
            return Err(Error::Config("simulation needs dt > 0 and at least one step".into()));
        }
        if self.training.workers == Some(0) {
            return Err(Error::Config("training.workers must be at least 1".into()));
        }
        if self.input.kind == InputKind::File && self.input.path.is_none() {
            return Err(Error::Config("input kind \"file\" needs input.path".into()));
        }
        self.bounds()?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.parameters.groups
    }

    pub fn bounds(&self) -> Result<Bounds> {
        let n = self.dim();
        Bounds::new(
            self.parameters.lower.expand(n, "parameters.lower")?,
            self.parameters.upper.expand(n, "parameters.upper")?,
        )
    }

    pub fn initial_guess(&self) -> Result<Option<Vec<f64>>> {
        self.parameters
            .initial_guess
            .as_ref()
            .map(|v| v.expand(self.dim(), "parameters.initial_guess"))
            .transpose()
    }

    pub fn true_values(&self) -> Result<Vec<f64>> {
        match &self.parameters.true_values {
            Some(v) => v.expand(self.dim(), "parameters.true_values"),
            None => Err(Error::Config("parameters.true_values is not set".into())),
        }
    }

    /// Membrane with the configured material and neurons, before any design vector is applied.
    pub fn build_model(&self) -> Result<MembraneModel> {
        let m = &self.mesh;
        let mut model = build_membrane(m.nx, m.ny, m.size, m.support_edge, m.output_node)?;
        let n = model.element_count();
        let mat = &self.material;
        model.material.moduli = mat.youngs_modulus.expand(n, "material.youngs_modulus")?;
        model.material.poisson_ratio = mat.poisson_ratio;
        model.material.density = mat.density;
        model.material.thickness = mat.thickness;
        model.material.validate()?;
        let w = self.neuron.input_weights.expand(4, "neuron.input_weights")?;
        let neuron = Neuron {
            input_weights: [w[0], w[1], w[2], w[3]],
            activation: self.neuron.activation,
            output_weight: self.neuron.output_weight,
        };
        Ok(model.with_neurons(neuron))
    }

    /// Model with `x` written into it per the parameter mode.
    pub fn model_at(&self, x: &[f64]) -> Result<MembraneModel> {
        apply_parameters(&self.build_model()?, x, self.parameters.mode)
    }

    pub fn settings(&self, model: &MembraneModel) -> Result<SimulationSettings> {
        let s = &self.simulation;
        let mut out = SimulationSettings::new(s.dt, s.steps);
        out.damping = Rayleigh {
            mass_coeff: s.mass_damping,
            stiffness_coeff: s.stiffness_damping,
        };
        out.fixed_point = FixedPointOptions {
            tolerance: s.fixed_point_tolerance,
            max_iterations: s.fixed_point_max_iterations,
        };
        out.tracked_nodes = s
            .tracked_nodes
            .iter()
            .map(|&n| model.mesh.node_index(n))
            .collect::<Result<_>>()?;
        Ok(out)
    }

    pub fn input_signal(&self, model: &MembraneModel) -> Result<InputSignal> {
        let channels = model.mesh.supported_nodes.len();
        let steps = self.simulation.steps;
        match self.input.kind {
            InputKind::Zero => Ok(InputSignal::zeros(channels, steps)),
            InputKind::Multisine => Ok(multisine(&self.input, channels, steps, self.simulation.dt)),
            InputKind::File => {
                let path = self.resolve(self.input.path.as_deref().unwrap_or(Path::new("")));
                InputSignal::from_rows(&read_whitespace_table(&path)?)
            }
        }
    }

    pub fn objective(&self) -> Result<MembraneObjective> {
        let model = self.build_model()?;
        let target = TargetSeries::load(&self.resolve(&self.objective.target))?;
        Ok(MembraneObjective {
            settings: self.settings(&model)?,
            inputs: self.input_signal(&model)?,
            model,
            target,
            parameter_mode: self.parameters.mode,
            cost_mode: self.objective.cost,
        })
    }

    pub fn training(&self, seed: u64, workers: usize) -> Result<TrainingConfig> {
        let bounds = self.bounds()?;
        let p = &self.pso;
        let q = &self.quasi_newton;
        Ok(TrainingConfig {
            pso: PsoConfig {
                inertia: p.inertia,
                cognitive: p.cognitive,
                social: p.social,
                particles: p.particles,
                max_iterations: p.max_iterations,
                bounds: bounds.clone(),
                seed,
            },
            quasi_newton: QuasiNewtonOptions {
                memory: q.memory,
                max_iterations: q.max_iterations,
                max_function_evals: q.max_function_evals,
                factr: q.factr,
                pgtol: q.pgtol,
                bounds,
            },
            gradient: FdOptions {
                delta: q.delta,
                mode: q.step_mode,
            },
            initial_guess: self.initial_guess()?,
            worker_cap: workers,
            outputs: TrainingOutputs {
                result: self.resolve(&self.training.result),
                convergence: self.resolve(&self.training.convergence),
            },
        })
    }
}

/// Support `j` of `m` gets, with `s = j/(m-1)` and `r(t) = min(t/ramp, 1)`,
///
/// ```text
/// u(t) = A r(t) [(1+s) sin(2π f1 t) + (2s-1) sin(2π f2 t + s) + 0.5 sin(2π f3 t)]
/// ```
///
/// sampled at `t = (k+1) dt`.
pub fn multisine(input: &InputSection, channels: usize, steps: usize, dt: f64) -> InputSignal {
    let [f1, f2, f3] = input.frequencies;
    let data = (0..channels)
        .map(|j| {
            let s = if channels > 1 { j as f64 / (channels - 1) as f64 } else { 0.0 };
            (0..steps)
                .map(|k| {
                    let t = (k + 1) as f64 * dt;
                    let ramp = if input.ramp > 0.0 { (t / input.ramp).min(1.0) } else { 1.0 };
                    let v = (1.0 + s) * (2.0 * PI * f1 * t).sin()
                        + (2.0 * s - 1.0) * (2.0 * PI * f2 * t + s).sin()
                        + 0.5 * (2.0 * PI * f3 * t).sin();
                    input.amplitude * ramp * v
                })
                .collect()
        })
        .collect();
    InputSignal::new(data).expect("multisine channels are non-empty and equal length")
}
