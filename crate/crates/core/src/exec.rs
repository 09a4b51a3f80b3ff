//! Data-parallel execution with a sequential fallback.
//!
//! Every helper here returns results in input order, so callers get identical
//! output for any worker count. Without the `parallel` feature,
//! [`Execution::Parallel`] runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
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

/// Ordered `map` over `0..n`.
pub(crate) fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Ordered `flat_map` over `0..n`, with `f` pushing into a scratch buffer.
pub(crate) fn flat_map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Vec<T>) + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            const CHUNK: usize = 1024;
            let chunks: Vec<Vec<T>> = (0..n.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut buf = Vec::new();
                    for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                        f(i, &mut buf);
                    }
                    buf
                })
                .collect();
            let mut out = Vec::with_capacity(chunks.iter().map(Vec::len).sum());
            for c in chunks {
                out.extend(c);
            }
            out
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..n {
                f(i, &mut out);
            }
            out
        }
    }
}

/// Sort that may use worker threads; the result is identical either way.
pub(crate) fn sort_unstable<T: Ord + Send>(exec: Execution, v: &mut [T]) {
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            v.par_sort_unstable()
        }
        _ => v.sort_unstable(),
    }
}
