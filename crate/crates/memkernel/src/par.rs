// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Order-preserving data-parallel map over grid indices.
//!
//! The time marchers are inherently sequential (each step needs the full
//! history), but everything evaluated *per grid point* — diagnostics,
//! semigroup samples, certification sweeps — is embarrassingly parallel.
//! `map_indexed` runs those loops on the rayon pool when the `parallel`
//! feature is enabled and sequentially otherwise. Outputs are collected in
//! index order in both modes, so results are bitwise identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to `0..n` and collect the results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to `0..n` and collect the results in index order.
#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
