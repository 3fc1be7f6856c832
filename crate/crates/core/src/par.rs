//! Data-parallel execution helpers.
//!
//! Every parallel loop in this crate maps an index range to an ordered
//! `Vec` and reduces sequentially afterwards, so results are bitwise
//! identical whatever the thread count and whether the `parallel`
//! feature is enabled at all. The sequential build is the fallback when
//! rayon is compiled out.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `0..n` to a vector, in parallel when the `parallel` feature is on.
///
/// Output order is always the index order.
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fallible variant of [`map_collect`]; the first error (by index) wins.
pub(crate) fn try_map_collect<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let results: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
