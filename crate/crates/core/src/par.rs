//! Node-parallel helpers.
//!
//! With the `parallel` feature the kernels fan out over rayon; without it,
//! or when [`set_execution`] selects [`Execution::Sequential`], they run as
//! plain loops. Results are identical either way: maps are order-preserving
//! and the only reductions are `max`/`min`, which do not depend on grouping.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(1);

/// Below this many nodes the sequential loop is used regardless of mode.
pub const PAR_THRESHOLD: usize = 256;

pub fn set_execution(mode: Execution) {
    MODE.store(matches!(mode, Execution::Parallel) as u8, Ordering::Relaxed);
}

pub fn execution() -> Execution {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn go_parallel(n: usize) -> bool {
    n >= PAR_THRESHOLD && execution() == Execution::Parallel
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_nodes<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel(n) {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = go_parallel;
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_nodes`]; returns the error of the lowest failing node.
pub fn try_map_nodes<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    let out = map_nodes(n, f);
    let mut v = Vec::with_capacity(n);
    for r in out {
        v.push(r?);
    }
    Ok(v)
}

/// Maximum of `f` over nodes (NaN-propagating); `-inf` for `n == 0`.
pub fn max_nodes<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel(n) {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::NEG_INFINITY, nan_max);
    }
    (0..n).map(f).fold(f64::NEG_INFINITY, nan_max)
}

/// Minimum of `f` over nodes (NaN-propagating); `+inf` for `n == 0`.
pub fn min_nodes<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    -max_nodes(n, |i| -f(i))
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
