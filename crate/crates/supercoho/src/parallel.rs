//! Data-parallel execution helpers.
//!
//! Hot loops in this crate are embarrassingly parallel: independent degrees
//! of a complex, independent probe points, independent modules in a battery.
//! With the `parallel` feature (default) these fan out over rayon; without
//! it, or after `configure(1)`, they run sequentially. Both paths produce
//! bit-identical results because every reduction is an order-preserving
//! collect.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL_ENABLED: AtomicBool = AtomicBool::new(true);

/// Runtime switch: `configure(1)` forces sequential execution, any larger
/// value re-enables the rayon paths (thread count itself is left to rayon).
pub fn configure(parallelism: usize) {
    PARALLEL_ENABLED.store(parallelism > 1, Ordering::Relaxed);
}

pub fn is_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL_ENABLED.load(Ordering::Relaxed)
}

/// Ordered parallel map; falls back to a plain iterator when disabled.
pub fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_enabled() {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    items.into_iter().map(f).collect()
}

/// Ordered parallel map over an index range.
pub fn par_map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    par_map((0..n).collect(), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let square = |x: usize| x * x;
        configure(1);
        let seq = par_map_range(100, square);
        configure(8);
        let par = par_map_range(100, square);
        configure(8);
        assert_eq!(seq, par);
    }
}
