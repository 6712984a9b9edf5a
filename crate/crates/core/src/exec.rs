// SPDX-License-Identifier: Apache-2.0

//! Execution strategy for the data-parallel kernels.
//!
//! With the `parallel` feature enabled, [`Execution::Parallel`] dispatches to
//! rayon; without it, both variants run on the calling thread. Every kernel
//! fixes its per-item arithmetic order, so both strategies produce identical
//! bits.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

impl Execution {
    /// Whether this strategy actually fans out across threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f` for `0..n` and collects the results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Folds chunks of `items` into accumulators and merges them.
    ///
    /// The merge must be commutative and associative for the result to be
    /// schedule independent.
    pub fn fold_reduce<S, A, Id, Fo, Re>(self, items: &[S], identity: Id, fold: Fo, reduce: Re) -> A
    where
        S: Sync,
        A: Send,
        Id: Fn() -> A + Sync + Send,
        Fo: Fn(A, &S) -> A + Sync + Send,
        Re: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items
                .par_iter()
                .fold(&identity, &fold)
                .reduce(&identity, &reduce);
        }
        let _ = &reduce;
        items.iter().fold(identity(), fold)
    }
}
