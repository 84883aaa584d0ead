//! Data-parallel helpers with a sequential fallback.
//!
//! Work is always split into fixed-size chunks and results are collected in
//! chunk order, so floating-point reductions built on these helpers give the
//! same bits regardless of thread count or of whether the `parallel` feature
//! is enabled.

use std::ops::Range;

use serde::Serialize;

/// Chunk length used by the simulator's per-seller reductions.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
    /// Uses rayon when built with the `parallel` feature, otherwise runs sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this mode actually runs on a thread pool in the current build.
    pub fn is_threaded(self) -> bool {
        self == Execution::Parallel && cfg!(feature = "parallel")
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_threaded() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Splits `0..len` into consecutive ranges of `chunk` indices and maps `f`
/// over them, returning one result per range in index order.
pub fn map_ranges<R, F>(len: usize, chunk: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..len)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(len))
        .collect();
    map(&ranges, exec, |r| f(r.clone()))
}
