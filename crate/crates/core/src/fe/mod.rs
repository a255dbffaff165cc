//! Dynamic plane-stress finite-element engine.

pub mod assembly;
pub mod banded;
pub mod element;
pub mod newmark;
pub mod simulate;

pub use assembly::{
    assemble, assemble_matrices, assemble_with_constraints, neuro_force_vector, GlobalSystem,
    NoFeedback, NodalFeedback, Rayleigh,
};
pub use element::{element_stiffness, element_stresses, plane_stress_matrix};
pub use newmark::{newmark_step, DynamicState, FixedPointOptions, Newmark};
pub use simulate::{
    element_stress_field, simulate, simulate_with, solve_static, InputSignal, SimulationSettings,
    SimulationTrace,
};
