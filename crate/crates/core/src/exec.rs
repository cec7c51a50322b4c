//! Indexed map over independent tasks (Monte-Carlo trials, sweep points).
//!
//! With the `parallel` feature (the default) the map fans out on the rayon
//! pool; without it the sequential fallback runs. Results are collected in
//! index order either way, so the output is identical for both backends.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential fallback; always available.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Rayon-backed map, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Feature-dispatched map used by the Monte-Carlo loops and the sweep runner.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}
