//! Order-preserving map helpers.
//!
//! With the `parallel` feature the maps run on the rayon pool; otherwise, or
//! when `sequential` is enabled, they run on the calling thread. Results are
//! always collected in input order, so downstream reductions see the same
//! summation order either way.

#[cfg(all(feature = "parallel", not(feature = "sequential")))]
use rayon::prelude::*;

/// Whether maps in this build are dispatched to a thread pool.
pub const fn is_parallel() -> bool {
    cfg!(all(feature = "parallel", not(feature = "sequential")))
}

/// Applies `f` to every element and returns results in input order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(all(feature = "parallel", not(feature = "sequential")))]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(all(feature = "parallel", not(feature = "sequential"))))]
    {
        items.iter().map(f).collect()
    }
}

/// Applies `f` to `0..n` and returns results in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(all(feature = "parallel", not(feature = "sequential")))]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(all(feature = "parallel", not(feature = "sequential"))))]
    {
        (0..n).map(f).collect()
    }
}

/// Caps the global worker count. Returns `false` when the pool was already
/// initialised or the build has no pool.
pub fn init_threads(n: usize) -> bool {
    #[cfg(all(feature = "parallel", not(feature = "sequential")))]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(all(feature = "parallel", not(feature = "sequential"))))]
    {
        let _ = n;
        false
    }
}

/// Runs `f` with at most `n` workers when a pool is available.
pub fn with_threads<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(all(feature = "parallel", not(feature = "sequential")))]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(all(feature = "parallel", not(feature = "sequential"))))]
    {
        let _ = n;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        let v: Vec<u64> = (0..1000).collect();
        let out = map(&v, |x| x * x);
        assert!(out.iter().enumerate().all(|(i, &y)| y == (i as u64) * (i as u64)));
        assert_eq!(map_range(5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn single_worker_matches_pool() {
        let xs: Vec<f64> = (0..4096).map(|i| (i as f64).sin()).collect();
        let a: f64 = map(&xs, |x| x.exp()).iter().sum();
        let b: f64 = with_threads(1, || map(&xs, |x| x.exp()).iter().sum());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
