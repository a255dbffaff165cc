use crate::error::{Error, Result};
use crate::fe::assembly::{assemble, GlobalSystem, NodalFeedback, Rayleigh};
use crate::fe::element::element_stresses;
use crate::fe::newmark::{DynamicState, FixedPointOptions, Newmark};
use crate::membrane::MembraneModel;

/// Prescribed horizontal displacement history, one channel per supported node.
///
/// Sample `k` of a channel is the displacement at `t = (k + 1)·dt`; the
/// simulation starts from rest at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    channels: Vec<Vec<f64>>,
}

impl InputSignal {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Shape("input channels differ in length".into()));
            }
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Shape("input signal contains non-finite samples".into()));
        }
        Ok(InputSignal { channels })
    }

    /// From a row-major table: rows are time steps, columns are channels.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Shape(format!("row {i} has {} columns, expected {n}", r.len())));
        }
        InputSignal::new((0..n).map(|c| rows.iter().map(|r| r[c]).collect()).collect())
    }

    pub fn zeros(channels: usize, steps: usize) -> Self {
        InputSignal {
            channels: vec![vec![0.0; steps]; channels],
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|k| self.channels.iter().map(|c| c[k]).collect())
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        InputSignal {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub dt: f64,
    pub steps: usize,
    pub damping: Rayleigh,
    pub fixed_point: FixedPointOptions,
    /// Extra nodes (0-based) whose horizontal displacement is recorded after the output node.
    pub tracked_nodes: Vec<usize>,
}

impl SimulationSettings {
    pub fn new(dt: f64, steps: usize) -> Self {
        SimulationSettings {
            dt,
            steps,
            damping: Rayleigh::default(),
            fixed_point: FixedPointOptions::default(),
            tracked_nodes: Vec::new(),
        }
    }
}

/// Recorded horizontal displacements. Column 0 is the output node, followed by
/// any extra tracked nodes; row 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub nodes: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl SimulationTrace {
    pub fn output(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Runs the transient response from rest with default settings.
pub fn simulate(model: &MembraneModel, inputs: &InputSignal, dt: f64, n_steps: usize) -> Result<SimulationTrace> {
    simulate_with(model, inputs, &SimulationSettings::new(dt, n_steps))
}

pub fn simulate_with(
    model: &MembraneModel,
    inputs: &InputSignal,
    settings: &SimulationSettings,
) -> Result<SimulationTrace> {
    let mesh = &model.mesh;
    let supports = mesh.supported_nodes.len();
    if inputs.channel_count() != supports {
        return Err(Error::Shape(format!(
            "{} input channels for {supports} supported nodes",
            inputs.channel_count()
        )));
    }
    if inputs.len() != settings.steps {
        return Err(Error::Shape(format!(
            "input signal has {} samples, simulation needs {}",
            inputs.len(),
            settings.steps
        )));
    }
    if let Some(&n) = settings.tracked_nodes.iter().find(|&&n| n >= mesh.node_count()) {
        return Err(Error::Shape(format!("tracked node index {n} out of range")));
    }

    let system = assemble(model)?.with_damping(settings.damping);
    let mut integrator = Newmark::new(&system, settings.dt, settings.fixed_point)?;

    // channel of each constrained DOF: horizontal DOFs of supported nodes take the
    // input, vertical ones stay at zero
    let channel_of: Vec<Option<usize>> = system
        .constrained
        .iter()
        .map(|&d| {
            if d % 2 == 0 {
                mesh.supported_nodes.iter().position(|&n| 2 * n == d)
            } else {
                None
            }
        })
        .collect();

    let mut nodes = vec![mesh.output_node];
    nodes.extend(&settings.tracked_nodes);
    let record = |state: &DynamicState| nodes.iter().map(|&n| state.displacement[2 * n]).collect::<Vec<_>>();

    let mut state = DynamicState::zeros(system.dof_count());
    let mut times = Vec::with_capacity(settings.steps + 1);
    let mut rows = Vec::with_capacity(settings.steps + 1);
    times.push(0.0);
    rows.push(record(&state));
    let mut prescribed = vec![0.0; system.constrained.len()];
    let channels = inputs.channels();
    for k in 0..settings.steps {
        for (p, ch) in prescribed.iter_mut().zip(&channel_of) {
            *p = ch.map_or(0.0, |c| channels[c][k]);
        }
        integrator.step(&mut state, None, &prescribed, model)?;
        times.push((k + 1) as f64 * settings.dt);
        rows.push(record(&state));
    }
    Ok(SimulationTrace { times, nodes, rows })
}

/// Static equilibrium `K u = F + g(u)` with prescribed constrained DOFs, solved by
/// fixed-point iteration on the feedback force.
pub fn solve_static(
    system: &GlobalSystem,
    prescribed: &[f64],
    external: Option<&[f64]>,
    feedback: &impl NodalFeedback,
    options: FixedPointOptions,
) -> Result<Vec<f64>> {
    let n = system.dof_count();
    if prescribed.len() != system.constrained.len() {
        return Err(Error::Shape(format!(
            "{} prescribed values for {} constrained DOFs",
            prescribed.len(),
            system.constrained.len()
        )));
    }
    let factor = system.factor_free_stiffness();
    let mut u = vec![0.0; n];
    for (&d, &v) in system.constrained.iter().zip(prescribed) {
        u[d] = v;
    }
    let mut lifted = vec![0.0; n];
    system.stiffness.mul_vec(&u, &mut lifted);
    let base: Vec<f64> = system
        .free
        .iter()
        .map(|&d| external.map_or(0.0, |f| f[d]) - lifted[d])
        .collect();

    let mut g = vec![0.0; n];
    feedback.add_forces(&u, &mut g);
    let mut sol = vec![0.0; system.free.len()];
    for it in 1..=options.max_iterations.max(1) {
        for (k, &d) in system.free.iter().enumerate() {
            sol[k] = base[k] + g[d];
        }
        factor.solve_in_place(&mut sol);
        for (k, &d) in system.free.iter().enumerate() {
            u[d] = sol[k];
        }
        if !feedback.is_active() {
            return Ok(u);
        }
        let mut next = vec![0.0; n];
        feedback.add_forces(&u, &mut next);
        let mut diff = 0.0;
        let mut total = 0.0;
        for (k, &d) in system.free.iter().enumerate() {
            diff += (next[d] - g[d]).powi(2);
            total += (base[k] + next[d]).powi(2);
        }
        g = next;
        let residual = if diff == 0.0 { 0.0 } else { (diff / total).sqrt() };
        if residual <= options.tolerance {
            return Ok(u);
        }
        if it == options.max_iterations {
            return Err(Error::Step {
                step: 0,
                residual,
                iterations: it,
            });
        }
    }
    Ok(u)
}

/// Gauss-point stresses of every element for a global displacement vector.
pub fn element_stress_field(model: &MembraneModel, displacement: &[f64]) -> Vec<[[f64; 3]; 4]> {
    let mat = &model.material;
    model
        .mesh
        .elements
        .iter()
        .enumerate()
        .map(|(e, nodes)| {
            let mut ue = [0.0; 8];
            for (k, &n) in nodes.iter().enumerate() {
                ue[2 * k] = displacement[2 * n];
                ue[2 * k + 1] = displacement[2 * n + 1];
            }
            element_stresses(mat.moduli[e], mat.poisson_ratio, model.mesh.size, &ue)
        })
        .collect()
}
