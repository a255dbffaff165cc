//! Neuro-membrane simulation and hybrid parameter identification.
//!
//! A rectangular plane-stress membrane is discretized into square 4-node
//! elements, each carrying a neuron whose bounded output is fed back as a
//! horizontal nodal traction. The forward model ([`fe`]) integrates the
//! dynamics with average-acceleration Newmark; [`trainer`] identifies element
//! parameters from a recorded response with a particle swarm followed by a
//! bounded limited-memory quasi-Newton refinement driven by parallel
//! finite-difference gradients.

pub mod error;
pub mod fe;
pub mod membrane;
pub mod io;
pub mod objective;
pub mod pool;
pub mod bounds;
pub mod pso;
pub mod gradient;
pub mod lbfgsb;
pub mod trainer;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
