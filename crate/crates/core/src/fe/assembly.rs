use crate::error::{Error, Result};
use crate::fe::banded::{BandedCholesky, BandedSym};
use crate::fe::element::{check_material, lumped_nodal_mass, stiffness_unchecked};
use crate::membrane::{nodal_traction, potential, MembraneModel};

/// Rayleigh damping `C = mass_coeff·M + stiffness_coeff·K`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rayleigh {
    pub mass_coeff: f64,
    pub stiffness_coeff: f64,
}

impl Rayleigh {
    pub fn is_zero(&self) -> bool {
        self.mass_coeff == 0.0 && self.stiffness_coeff == 0.0
    }
}

/// Assembled stiffness and lumped mass over all DOFs, plus the constraint partition.
/// DOF `2n` is the horizontal and `2n + 1` the vertical translation of node `n`.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub stiffness: BandedSym,
    pub mass: Vec<f64>,
    pub damping: Rayleigh,
    /// Constrained DOFs in increasing order.
    pub constrained: Vec<usize>,
    pub free: Vec<usize>,
    /// Position of each DOF within `free`, if it is free.
    pub free_index: Vec<Option<usize>>,
    free_stiffness: BandedSym,
}

impl GlobalSystem {
    /// Builds a system from already assembled matrices.
    pub fn from_parts(stiffness: BandedSym, mass: Vec<f64>, constrained: &[usize]) -> Result<Self> {
        let n = stiffness.dim();
        if mass.len() != n {
            return Err(Error::Shape(format!("{} masses for {n} DOFs", mass.len())));
        }
        if let Some((i, m)) = mass.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
            return Err(Error::Assembly(format!("mass of DOF {i} must be positive, got {m}")));
        }
        let mut is_constrained = vec![false; n];
        for &d in constrained {
            if d >= n {
                return Err(Error::Assembly(format!("constrained DOF {d} outside 0..{n}")));
            }
            is_constrained[d] = true;
        }
        let constrained: Vec<usize> = (0..n).filter(|&d| is_constrained[d]).collect();
        let free: Vec<usize> = (0..n).filter(|&d| !is_constrained[d]).collect();
        let mut free_index = vec![None; n];
        for (k, &d) in free.iter().enumerate() {
            free_index[d] = Some(k);
        }
        let free_stiffness = stiffness.submatrix(&free);
        if !free.is_empty() && free_stiffness.cholesky().is_none() {
            return Err(Error::Assembly(
                "free-DOF stiffness is singular; supports do not remove all rigid-body modes".into(),
            ));
        }
        Ok(GlobalSystem {
            stiffness,
            mass,
            damping: Rayleigh::default(),
            constrained,
            free,
            free_index,
            free_stiffness,
        })
    }

    pub fn with_damping(mut self, damping: Rayleigh) -> Self {
        self.damping = damping;
        self
    }

    pub fn dof_count(&self) -> usize {
        self.mass.len()
    }

    /// Stiffness restricted to the free DOFs.
    pub fn free_stiffness(&self) -> &BandedSym {
        &self.free_stiffness
    }

    pub fn factor_free_stiffness(&self) -> BandedCholesky {
        self.free_stiffness
            .cholesky()
            .expect("checked positive definite at construction")
    }

    /// `stiffness_factor·K_ff + mass_factor·M_ff`.
    pub(crate) fn free_effective(&self, mass_factor: f64, stiffness_factor: f64) -> BandedSym {
        let mut k = self.free_stiffness.scaled(stiffness_factor);
        let m: Vec<f64> = self.free.iter().map(|&d| self.mass[d]).collect();
        k.add_diagonal(&m, mass_factor);
        k
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() / 2.0
    }
}

fn stiffness_bandwidth(model: &MembraneModel) -> usize {
    model
        .mesh
        .elements
        .iter()
        .map(|el| {
            let lo = el.iter().min().unwrap();
            let hi = el.iter().max().unwrap();
            2 * (hi - lo) + 1
        })
        .max()
        .unwrap_or(0)
}

/// Assembles `K` and lumped `M` over all DOFs without applying constraints.
pub fn assemble_matrices(model: &MembraneModel) -> Result<(BandedSym, Vec<f64>)> {
    let mesh = &model.mesh;
    let mat = &model.material;
    mat.validate()?;
    check_material(mat.moduli[0], mat.poisson_ratio, mat.thickness, mesh.size)?;

    let ndof = mesh.dof_count();
    let mut k = BandedSym::zeros(ndof, stiffness_bandwidth(model));
    let mut m = vec![0.0; ndof];
    let unit = stiffness_unchecked(1.0, mat.poisson_ratio, mat.thickness, mesh.size);
    let nodal_mass = lumped_nodal_mass(mat.density, mat.thickness, mesh.size);

    for (e, nodes) in mesh.elements.iter().enumerate() {
        let modulus = mat.moduli[e];
        let dofs = [
            2 * nodes[0],
            2 * nodes[0] + 1,
            2 * nodes[1],
            2 * nodes[1] + 1,
            2 * nodes[2],
            2 * nodes[2] + 1,
            2 * nodes[3],
            2 * nodes[3] + 1,
        ];
        for a in 0..8 {
            for b in 0..=a {
                // `add` writes the symmetric pair, so only the lower triangle is scattered
                k.add(dofs[a], dofs[b], modulus * unit[a][b]);
            }
        }
        for d in dofs {
            m[d] += nodal_mass;
        }
    }
    Ok((k, m))
}

/// Assembles the membrane with both translations fixed at every supported node.
pub fn assemble(model: &MembraneModel) -> Result<GlobalSystem> {
    let constrained: Vec<usize> = model
        .mesh
        .supported_nodes
        .iter()
        .flat_map(|&n| [2 * n, 2 * n + 1])
        .collect();
    assemble_with_constraints(model, &constrained)
}

pub fn assemble_with_constraints(model: &MembraneModel, constrained: &[usize]) -> Result<GlobalSystem> {
    let (k, m) = assemble_matrices(model)?;
    GlobalSystem::from_parts(k, m, constrained)
}

/// Displacement-dependent nodal forces added to the right-hand side each step.
pub trait NodalFeedback: Sync {
    /// Adds the feedback forces for the full displacement vector into `out`.
    fn add_forces(&self, displacement: &[f64], out: &mut [f64]);

    /// Whether the forces can be nonzero at all; lets the integrator skip iterating.
    fn is_active(&self) -> bool {
        true
    }
}

/// No feedback; the system is linear.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFeedback;

impl NodalFeedback for NoFeedback {
    fn add_forces(&self, _: &[f64], _: &mut [f64]) {}

    fn is_active(&self) -> bool {
        false
    }
}

impl NodalFeedback for MembraneModel {
    fn add_forces(&self, displacement: &[f64], out: &mut [f64]) {
        let area = self.mesh.element_area();
        for (e, (nodes, neuron)) in self.mesh.elements.iter().zip(&self.neurons).enumerate() {
            if neuron.output_weight == 0.0 {
                continue;
            }
            let u = self.element_horizontal(e, displacement);
            let f = neuron.activation.apply(potential(neuron, &u));
            let force = nodal_traction(f, neuron.output_weight, area);
            for &n in nodes {
                out[2 * n] += force;
            }
        }
    }

    fn is_active(&self) -> bool {
        self.neurons
            .iter()
            .any(|n| n.output_weight != 0.0 && n.activation != crate::membrane::ActivationKind::Zero)
    }
}

/// Global vector of neuron traction forces on horizontal DOFs.
pub fn neuro_force_vector(model: &MembraneModel, displacement: &[f64]) -> Result<Vec<f64>> {
    let n = model.mesh.dof_count();
    if displacement.len() != n {
        return Err(Error::Shape(format!(
            "displacement has {} entries, model has {n} DOFs",
            displacement.len()
        )));
    }
    let mut out = vec![0.0; n];
    model.add_forces(displacement, &mut out);
    Ok(out)
}
