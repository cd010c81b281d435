//! Node evaluation on a rayon pool.

use minkowski_core::identity::{Executor, PointQuantities};
use minkowski_core::Result;
use rayon::prelude::*;

pub const WORKERS_ENV: &str = "MINKOWSKI_WORKERS";

pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        Self { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map(&self, count: usize, f: &(dyn Fn(usize) -> Result<PointQuantities> + Sync)) -> Vec<Result<PointQuantities>> {
        // collect() on an indexed parallel iterator keeps index order
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

/// Worker count from the environment, defaulting to the available cores.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
