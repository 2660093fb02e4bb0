//! Pluggable execution for independent jobs.
//!
//! Ensemble members, replications and benchmark splits are independent and
//! each owns its seed, so the order in which they run never changes a
//! result. Implementations must return outputs in job-index order.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..jobs).map(f).collect()
    }
}
