//! Trial executors backed by a rayon thread pool.

use nowkit_core::evaluation::SplitSpec;
use nowkit_core::pipeline::Experiment;
use nowkit_core::selection::{run_trial, Sequential, TrialExecutor, TrialPlan, TrialResult};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "NOWKIT_THREADS";

/// Runs trials on a dedicated pool of `threads` workers. Output order follows
/// the plans regardless of completion order.
#[derive(Debug)]
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Parallel { pool })
    }
}

impl TrialExecutor for Parallel {
    fn execute(&self, plans: &[TrialPlan], splits: &SplitSpec, exp: &Experiment) -> Vec<TrialResult> {
        let mut results: Vec<TrialResult> =
            self.pool.install(|| plans.par_iter().map(|p| run_trial(p, splits, exp)).collect());
        results.sort_by_key(|r| r.trial_id);
        results
    }
}

/// Executor chosen from `NOWKIT_THREADS`: `0` runs sequentially, a positive
/// value caps the worker count, unset or unparsable uses every core.
pub fn from_env() -> Box<dyn TrialExecutor + Send + Sync> {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match threads {
        Some(0) => Box::new(Sequential),
        Some(n) => Parallel::new(n).map_or_else(|_| Box::new(Sequential) as Box<_>, |p| Box::new(p) as Box<_>),
        None => Parallel::new(0).map_or_else(|_| Box::new(Sequential) as Box<_>, |p| Box::new(p) as Box<_>),
    }
}
