//! Bounded parallel map with results in input order.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

pub struct Exec {
    pool: Option<ThreadPool>,
}

impl Exec {
    /// `jobs <= 1` runs everything on the calling thread.
    pub fn new(jobs: usize) -> Self {
        let pool = (jobs > 1).then(|| {
            ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("failed to start worker threads")
        });
        Self { pool }
    }

    pub fn jobs(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }
}

impl Default for Exec {
    fn default() -> Self {
        Self::new(1)
    }
}
