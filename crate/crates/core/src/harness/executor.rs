use crate::diagnostics::TrialExecutor;
use rayon::prelude::*;

/// Environment variable read for the default worker count.
pub const WORKERS_ENV: &str = "SADDLESCAPE_WORKERS";

/// Worker count from `explicit`, then the environment, then the machine.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs trials on a dedicated rayon pool; results come back in trial order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(workers: Option<usize>) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(resolve_workers(workers))
            .build()
            .expect("thread pool");
        Self { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TrialExecutor for RayonExecutor {
    fn map_trials<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..trials).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_trial_order() {
        let exec = RayonExecutor::new(Some(3));
        assert_eq!(exec.workers(), 3);
        let out = exec.map_trials(100, |t| t * t);
        assert_eq!(out, (0..100).map(|t| t * t).collect::<Vec<_>>());
    }
}
