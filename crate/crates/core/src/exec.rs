//! Sequential or rayon-backed execution of independent work items. Results
//! always come back in input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the global rayon pool, or runs sequentially when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Runs `f` inside a dedicated pool of `jobs` threads. `jobs == 1` means
    /// sequential execution.
    pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce(Execution) -> R + Send) -> R {
        if jobs == 1 {
            return f(Execution::Sequential);
        }
        #[cfg(feature = "parallel")]
        {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if jobs > 0 {
                builder = builder.num_threads(jobs);
            }
            if let Ok(pool) = builder.build() {
                return pool.install(|| f(Execution::Parallel));
            }
        }
        f(Execution::default())
    }
}
