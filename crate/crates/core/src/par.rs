//! Execution strategy for the data-parallel sweeps.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] runs on the
//! rayon global pool; without it every strategy runs sequentially. Both paths
//! produce identical results because every reduction used here is
//! associative and order-independent.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this strategy actually runs on multiple threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

pub(crate) fn map_reduce<I, A, M, Z, R>(exec: Exec, items: Vec<I>, map: M, zero: Z, merge: R) -> A
where
    I: Send,
    A: Send,
    M: Fn(I) -> A + Sync + Send,
    Z: Fn() -> A + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.into_par_iter().map(map).reduce(zero, merge);
    }
    let _ = exec;
    items.into_iter().map(map).fold(zero(), merge)
}

/// Splits `0..total` into contiguous ranges of at most `chunk` indices.
pub(crate) fn chunks(total: u64, chunk: u64) -> Vec<std::ops::Range<u64>> {
    (0..total.div_ceil(chunk)).map(|i| i * chunk..((i + 1) * chunk).min(total)).collect()
}

/// Sets the size of the global worker pool. Has no effect without the
/// `parallel` feature, or once the pool is already initialised.
pub fn init_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
}
