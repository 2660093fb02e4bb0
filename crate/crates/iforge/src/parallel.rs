//! Thread-pool execution of independent jobs.

use iforge_core::Executor;
use rayon::prelude::*;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "IFORGE_THREADS";

/// Runs jobs on a dedicated rayon pool. Outputs come back in job order, so
/// results match [`iforge_core::Sequential`] bit for bit.
#[derive(Debug)]
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads == 0` lets rayon pick one thread per core.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Self { pool: rayon::ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    /// Honors `IFORGE_THREADS`; unset, empty or unparsable means all cores.
    pub fn from_env() -> Result<Self, rayon::ThreadPoolBuildError> {
        let threads = std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0);
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..jobs).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use iforge_core::Sequential;

    #[test]
    fn matches_sequential_order() {
        let pool = Parallel::new(3).unwrap();
        assert_eq!(pool.threads(), 3);
        let f = |i: usize| (i * i) as f64 / 7.0;
        assert_eq!(pool.map(100, f), Sequential.map(100, f));
        let nested = pool.map(4, |i| pool.map(5, move |j| i * 10 + j));
        assert_eq!(nested[3], vec![30, 31, 32, 33, 34]);
    }
}
