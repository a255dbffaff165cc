//! Discretized neuro-membrane: a rectangular mesh of square 4-node elements,
//! each carrying a neuron that turns the horizontal displacements of its
//! nodes into a horizontal traction applied back onto those nodes.
//!
//! Numbering is row-major. Node `r * (nx + 1) + c` sits at `(c * size, r * size)`
//! and element `r * nx + c` spans columns `c..=c+1` and rows `r..=r+1`, so rows run
//! along the long dimension of the default plate (`nx = 20`, `ny = 10`).
//! Externally visible node *numbers* are 1-based (node 126 is the default output);
//! everything stored here is a 0-based index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default output node number (1-based) of the 20×10 membrane.
pub const DEFAULT_OUTPUT_NODE: usize = 126;

/// Which edge of the rectangle carries the simple supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SupportEdge {
    /// `x = 0`, the short edge for `nx > ny`.
    #[default]
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub size: f64,
    pub coords: Vec<[f64; 2]>,
    /// Counterclockwise connectivity starting at the lower-left corner.
    pub elements: Vec<[usize; 4]>,
    pub supported_nodes: Vec<usize>,
    pub output_node: usize,
}

impl Mesh {
    pub fn new(
        nx: usize,
        ny: usize,
        size: f64,
        support_edge: SupportEdge,
        output_node: usize,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Construction(format!(
                "mesh needs at least one element per direction, got {nx}x{ny}"
            )));
        }
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::Construction(format!(
                "element size must be positive, got {size}"
            )));
        }
        let row = nx + 1;
        let node_count = row * (ny + 1);
        if output_node == 0 || output_node > node_count {
            return Err(Error::Construction(format!(
                "output node {output_node} outside 1..={node_count}"
            )));
        }

        let mut coords = Vec::with_capacity(node_count);
        for r in 0..=ny {
            for c in 0..=nx {
                coords.push([c as f64 * size, r as f64 * size]);
            }
        }

        let mut elements = Vec::with_capacity(nx * ny);
        for r in 0..ny {
            for c in 0..nx {
                let n0 = r * row + c;
                elements.push([n0, n0 + 1, n0 + row + 1, n0 + row]);
            }
        }

        let supported_nodes = match support_edge {
            SupportEdge::Left => (0..=ny).map(|r| r * row).collect(),
            SupportEdge::Right => (0..=ny).map(|r| r * row + nx).collect(),
            SupportEdge::Bottom => (0..=nx).collect(),
            SupportEdge::Top => (0..=nx).map(|c| ny * row + c).collect(),
        };

        Ok(Mesh {
            nx,
            ny,
            size,
            coords,
            elements,
            supported_nodes,
            output_node: output_node - 1,
        })
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn dof_count(&self) -> usize {
        2 * self.node_count()
    }

    pub fn element_area(&self) -> f64 {
        self.size * self.size
    }

    /// Plate extent `(length along x, width along y)`.
    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.size, self.ny as f64 * self.size)
    }

    /// Converts a 1-based node number into a storage index.
    pub fn node_index(&self, number: usize) -> Result<usize> {
        if number == 0 || number > self.node_count() {
            return Err(Error::Construction(format!(
                "node {number} outside 1..={}",
                self.node_count()
            )));
        }
        Ok(number - 1)
    }

    pub fn output_node_number(&self) -> usize {
        self.output_node + 1
    }
}

/// Activation functions mapping the neuron potential into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    /// `tanh(z)`
    #[default]
    SymmetricSigmoid,
    /// `clamp(z, -1, 1)`
    LinearSaturating,
    /// Disabled neuron, always 0.
    Zero,
}

impl ActivationKind {
    #[inline]
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            ActivationKind::SymmetricSigmoid => z.tanh(),
            ActivationKind::LinearSaturating => z.clamp(-1.0, 1.0),
            ActivationKind::Zero => 0.0,
        }
    }
}

pub fn activation_eval(kind: ActivationKind, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(z));
    }
    Ok(kind.apply(z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neuron {
    /// One weight per element node, applied to that node's horizontal displacement.
    pub input_weights: [f64; 4],
    pub activation: ActivationKind,
    /// Output weight `w_o` in stress units.
    pub output_weight: f64,
}

impl Neuron {
    pub fn uniform(input_weight: f64, activation: ActivationKind, output_weight: f64) -> Self {
        Neuron {
            input_weights: [input_weight; 4],
            activation,
            output_weight,
        }
    }

    pub fn disabled() -> Self {
        Neuron::uniform(0.0, ActivationKind::Zero, 0.0)
    }
}

impl Default for Neuron {
    fn default() -> Self {
        Neuron::uniform(1.0, ActivationKind::SymmetricSigmoid, 1.0)
    }
}

/// `z = Σ wᵢ uᵢ` over the four element nodes.
pub fn neuron_potential(neuron: &Neuron, u_horizontal: &[f64; 4]) -> Result<f64> {
    if let Some(&bad) = u_horizontal.iter().find(|u| !u.is_finite()) {
        return Err(Error::Domain(bad));
    }
    Ok(potential(neuron, u_horizontal))
}

#[inline]
pub(crate) fn potential(neuron: &Neuron, u: &[f64; 4]) -> f64 {
    neuron
        .input_weights
        .iter()
        .zip(u)
        .map(|(w, u)| w * u)
        .sum()
}

/// Material properties, with a separate elastic modulus per element.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub moduli: Vec<f64>,
    pub poisson_ratio: f64,
    /// Mass density in tonne/mm³.
    pub density: f64,
    /// Plate thickness in mm.
    pub thickness: f64,
}

impl MaterialField {
    pub fn uniform(
        n_elements: usize,
        modulus: f64,
        poisson_ratio: f64,
        density: f64,
        thickness: f64,
    ) -> Self {
        MaterialField {
            moduli: vec![modulus; n_elements],
            poisson_ratio,
            density,
            thickness,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, e)) = self
            .moduli
            .iter()
            .enumerate()
            .find(|(_, e)| !(e.is_finite() && **e > 0.0))
        {
            return Err(Error::Parameter(format!(
                "elastic modulus of element {i} must be positive, got {e}"
            )));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::Parameter(format!(
                "Poisson ratio must lie in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::Parameter(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(Error::Parameter(format!(
                "thickness must be positive, got {}",
                self.thickness
            )));
        }
        Ok(())
    }
}

/// Default material used when no configuration overrides it: `E = 500000`,
/// `ν = 0.2`, `t = 10 mm` and a density that puts the fundamental axial period of
/// the 1000 mm plate near 0.1 s.
pub mod defaults {
    pub const YOUNGS_MODULUS: f64 = 500_000.0;
    pub const POISSON_RATIO: f64 = 0.2;
    pub const DENSITY: f64 = 3.0e-4;
    pub const THICKNESS: f64 = 10.0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembraneModel {
    pub mesh: Mesh,
    pub neurons: Vec<Neuron>,
    pub material: MaterialField,
}

impl MembraneModel {
    pub fn new(mesh: Mesh, neurons: Vec<Neuron>, material: MaterialField) -> Result<Self> {
        let n = mesh.element_count();
        if neurons.len() != n {
            return Err(Error::Construction(format!(
                "{} neurons for {n} elements",
                neurons.len()
            )));
        }
        if material.moduli.len() != n {
            return Err(Error::Construction(format!(
                "{} element moduli for {n} elements",
                material.moduli.len()
            )));
        }
        material.validate()?;
        Ok(MembraneModel {
            mesh,
            neurons,
            material,
        })
    }

    pub fn with_neurons(mut self, neuron: Neuron) -> Self {
        self.neurons.iter_mut().for_each(|n| *n = neuron);
        self
    }

    pub fn element_count(&self) -> usize {
        self.mesh.element_count()
    }

    /// Horizontal displacements of an element's nodes pulled from a global vector.
    pub fn element_horizontal(&self, element: usize, displacement: &[f64]) -> [f64; 4] {
        let nodes = &self.mesh.elements[element];
        [
            displacement[2 * nodes[0]],
            displacement[2 * nodes[1]],
            displacement[2 * nodes[2]],
            displacement[2 * nodes[3]],
        ]
    }
}

/// Builds the membrane with default neurons and the default uniform material.
pub fn build_membrane(
    nx: usize,
    ny: usize,
    size: f64,
    support_edge: SupportEdge,
    output_node: usize,
) -> Result<MembraneModel> {
    let mesh = Mesh::new(nx, ny, size, support_edge, output_node)?;
    let n = mesh.element_count();
    let material = MaterialField::uniform(
        n,
        defaults::YOUNGS_MODULUS,
        defaults::POISSON_RATIO,
        defaults::DENSITY,
        defaults::THICKNESS,
    );
    MembraneModel::new(mesh, vec![Neuron::default(); n], material)
}

/// Nodal horizontal forces `f(z)·w_o·area/4`, identical at the element's 4 nodes.
pub fn element_traction_forces(
    model: &MembraneModel,
    element: usize,
    u_horizontal: &[f64; 4],
) -> Result<[f64; 4]> {
    let neuron = model.neurons.get(element).ok_or(Error::Lookup {
        index: element,
        count: model.element_count(),
    })?;
    let z = neuron_potential(neuron, u_horizontal)?;
    let f = activation_eval(neuron.activation, z)?;
    Ok([nodal_traction(f, neuron.output_weight, model.mesh.element_area()); 4])
}

#[inline]
pub(crate) fn nodal_traction(activation: f64, output_weight: f64, area: f64) -> f64 {
    activation * output_weight * area / 4.0
}
