use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the membrane model, the solver and the trainer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Construction(String),

    #[error("activation input must be finite, got {0}")]
    Domain(f64),

    #[error("element {index} out of range (element count {count})")]
    Lookup { index: usize, count: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("neuron fixed-point iteration did not converge at step {step}: relative residual {residual:e} after {iterations} iterations")]
    Step {
        step: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation failed at x = {x:?}: {source}")]
    Evaluation {
        x: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("gradient evaluation {index} failed: {source}")]
    Gradient {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
