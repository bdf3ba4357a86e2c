//! Execution strategy for the data-parallel loops (per-entry division rating,
//! sweep grid points). Results never depend on the strategy chosen.

/// How an independent batch of work items is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon thread pool when the `parallel` feature is enabled and
    /// falls back to sequential evaluation otherwise.
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
    /// Whether this strategy actually runs on multiple threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub(crate) fn map_indices<T, F>(n: usize, exec: Execution, min_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel && n > min_len {
            use rayon::prelude::*;
            return (0..n)
                .into_par_iter()
                .with_min_len(min_len)
                .map(f)
                .collect();
        }
    }
    let _ = (exec, min_len);
    (0..n).map(f).collect()
}
