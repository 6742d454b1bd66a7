//! Data-parallel execution helper.
//!
//! Everything batch-shaped in this crate (per-frame spectral analysis,
//! Monte Carlo trials in downstream harnesses) funnels through
//! [`map_indexed`]. With the default `parallel` feature it fans out over
//! rayon's thread pool; without it the same closure runs on a plain
//! sequential iterator, which keeps the crate usable on single-threaded
//! targets and makes the two paths directly comparable in benchmarks.

/// Apply `f` to every index in `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to every index in `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
