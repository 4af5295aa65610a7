//! Execution strategy for the data-parallel kernels.
//!
//! Every parallel site in the crate (sample batches, estimator replicas,
//! matrix row assembly) funnels through [`map_indexed`], which maps a pure
//! function over `0..n` and returns results in index order. Because the
//! per-index work is deterministic and the reduction happens afterwards in
//! index order, `Sequential` and `Parallel` produce bit-identical output.
//!
//! The `parallel` cargo feature (on by default) pulls in rayon. Without it
//! the crate compiles with no rayon dependency and [`ExecMode::Parallel`]
//! degrades to the sequential loop.

/// How to schedule an index-parallel map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Plain loop on the calling thread.
    Sequential,
    /// Rayon work-stealing pool (the sequential loop when the `parallel`
    /// feature is disabled).
    #[default]
    Parallel,
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => map_parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
