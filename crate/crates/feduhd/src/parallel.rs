use feduhd_core::{ClientExecutor, ClientState};
use rayon::prelude::*;

/// Runs client rounds on a dedicated rayon pool. Results keep client order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
        Ok(RayonExecutor { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `op` inside the pool, so nested rayon iterators use its threads.
    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        self.pool.install(op)
    }
}

impl ClientExecutor for RayonExecutor {
    fn map_clients<T, F>(&self, clients: &mut [ClientState], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ClientState) -> T + Sync + Send,
    {
        self.pool.install(|| clients.par_iter_mut().map(f).collect())
    }
}

/// `num_clients` capped at the machine's available parallelism.
pub fn default_workers(num_clients: usize) -> usize {
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    num_clients.clamp(1, hw)
}
