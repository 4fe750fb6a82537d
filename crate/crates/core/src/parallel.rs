//! Deterministic data-parallel helpers.
//!
//! Work is always expressed as independent units mapped over an index range
//! and collected in index order, so the result is identical whether the
//! units run on one thread or many. With the `parallel` feature (default)
//! the units run on rayon; without it the same closures run sequentially.
//! Reductions that would be sensitive to float association (sums over
//! background rows, fold means) stay inside a single unit on purpose.

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map `f` over a slice, collecting results in slice order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential twin of [`map_indexed`], always compiled. The benches compare
/// this path against the rayon one on identical inputs.
pub fn map_indexed_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Run `f` inside a worker pool capped at `threads` (0 = library default).
///
/// Without the `parallel` feature the cap is meaningless and `f` just runs.
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            f()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("failed to build worker pool");
            pool.install(f)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Derive a child seed for an independent work unit.
///
/// SplitMix64 finalizer over (seed, stream): children of distinct streams are
/// decorrelated, and the derivation is stable across platforms, so per-unit
/// RNGs do not depend on scheduling.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_order_is_input_order() {
        let out = map_indexed(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(out, map_indexed_seq(100, |i| i * i));
    }

    #[test]
    fn derived_seeds_differ_by_stream() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, 0));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn pool_size_does_not_change_results() {
        let one = with_threads(1, || map_indexed(1000, |i| (i as f64).sqrt()));
        let many = with_threads(8, || map_indexed(1000, |i| (i as f64).sqrt()));
        assert_eq!(one, many);
    }
}
