//! Data-parallel inner loops with a sequential fallback.
//!
//! All reductions used in the crate are exact-order-independent (max) or
//! are performed sequentially on collected buffers, so enabling the
//! `parallel` feature never changes results bit for bit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential map, always available; used directly by the benchmarks.
pub fn map_collect_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Parallel map preserving index order.
#[cfg(feature = "parallel")]
pub fn map_collect_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, in parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    // small batches stay sequential; pool dispatch would dominate
    if n < 4096 {
        map_collect_seq(n, f)
    } else {
        map_collect_par(n, f)
    }
}

/// Map `f` over `0..n`, in parallel when the feature is enabled.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_collect_seq(n, f)
}

/// Maximum of `f` over `0..n`; `f64::NEG_INFINITY` when `n == 0`.
/// Exact regardless of evaluation order.
#[cfg(feature = "parallel")]
pub fn max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if n < 4096 {
        return (0..n).map(f).fold(f64::NEG_INFINITY, f64::max);
    }
    (0..n)
        .into_par_iter()
        .map(&f)
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Maximum of `f` over `0..n`; `f64::NEG_INFINITY` when `n == 0`.
#[cfg(not(feature = "parallel"))]
pub fn max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
}
