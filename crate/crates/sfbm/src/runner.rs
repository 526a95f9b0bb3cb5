//! Replication-parallel execution on a fixed-size worker pool.

use rayon::prelude::*;
use sfbm_core::sampler::{block_count, GaussianSampler, ReplicationRunner};

/// Runs fixed replication blocks on a dedicated pool. Each block draws from its own
/// counter-based streams, so the output is independent of the worker count.
pub struct ParallelRunner {
    pool: rayon::ThreadPool,
}

impl ParallelRunner {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .thread_name(|i| format!("sfbm-worker-{i}"))
            .build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ReplicationRunner for ParallelRunner {
    fn map_rows<T, F>(&self, sampler: &GaussianSampler, replications: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let blocks: Vec<Vec<T>> = self.pool.install(|| {
            (0..block_count(replications))
                .into_par_iter()
                .map(|b| sampler.map_block(b, replications, &f))
                .collect()
        });
        blocks.into_iter().flatten().collect()
    }
}
