use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable that overrides the configured worker cap.
pub const WORKERS_ENV: &str = "NEUROSKIN_WORKERS";

/// Bounded pool for independent objective evaluations. Results always come back
/// in input order, regardless of which worker finished first.
pub struct EvalPool {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl EvalPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("neuroskin-eval-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("cannot start evaluation pool: {e}")))?;
        Ok(EvalPool { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        if self.workers == 1 {
            return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
        }
        self.pool
            .install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
