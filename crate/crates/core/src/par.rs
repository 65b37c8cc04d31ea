//! Data-parallel helpers. With the `parallel` feature (default) work is spread
//! over the rayon pool; without it the same closures run sequentially. Output
//! order never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
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

/// Maps `f` over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sums `f(i)` over `0..n` in index order, so the result is bit-identical
/// with and without the `parallel` feature.
pub fn sum_indices<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indices(n, f).into_iter().sum()
}

/// Largest `f(i)` over `0..n`, `-inf` when empty. NaN values propagate.
pub fn max_indices<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let fold = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) };
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).reduce(|| f64::NEG_INFINITY, fold)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::NEG_INFINITY, fold)
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
