//! Data-parallel batch helpers with sequential twins.
//!
//! With the `parallel` feature (default) the indexed helpers fan out over
//! rayon; without it they fall back to the sequential twins. Results are
//! assembled by index either way, so both paths produce identical output and
//! the bench suite can compare them on the same workloads. Reductions that
//! must be bitwise stable (sums, medians) are done sequentially by callers on
//! the collected vectors; only the order-insensitive `min` is reduced in
//! parallel.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..count`, collecting results in index order.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(count, f)
    }
}

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Fallible [`map_indexed`]: stops at the first error (any error if several
/// tasks fail concurrently), otherwise results stay in index order.
pub fn try_map_indexed<T, E, F>(count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        try_map_indexed_seq(count, f)
    }
}

/// Sequential twin of [`try_map_indexed`].
pub fn try_map_indexed_seq<T, E, F>(count: usize, f: F) -> Result<Vec<T>, E>
where
    F: Fn(usize) -> Result<T, E>,
{
    (0..count).map(f).collect()
}

/// Minimum of `f` over `0..count`; `f` must return finite values.
/// `f64::min` is associative and commutative on finite inputs, so the
/// parallel reduction is deterministic.
pub fn min_indexed<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::INFINITY, f64::min)
    }
    #[cfg(not(feature = "parallel"))]
    {
        min_indexed_seq(count, f)
    }
}

/// Sequential twin of [`min_indexed`].
pub fn min_indexed_seq<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..count).map(f).fold(f64::INFINITY, f64::min)
}
