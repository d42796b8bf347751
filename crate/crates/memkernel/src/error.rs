// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction, validation, and numerics.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Two sampled functions that must share a grid do not.
    #[error("grid mismatch in {context}: expected {expected} samples, got {found}")]
    GridMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A quantity that must be finite is NaN/Inf, or a march diverged.
    #[error("numerical failure at step {step}: {what}")]
    Numerical { step: usize, what: String },

    /// A Laplace-domain denominator is singular or nearly so at the sampled p.
    #[error("pole proximity at p = {p}: {what}")]
    PoleProximity { p: f64, what: String },

    /// The step size makes an implicit diagonal correction near-singular,
    /// or fails a divergence heuristic.
    #[error("step-size error: {0}")]
    StepSize(String),

    /// A dense linear-algebra primitive (eigensolve, LU) failed.
    #[error("linear algebra failure in {context}: {source}")]
    Linalg {
        context: &'static str,
        #[source]
        source: ndarray_linalg::error::LinalgError,
    },
}

impl Error {
    /// Attach a context label to an `ndarray-linalg` failure.
    pub(crate) fn linalg(context: &'static str) -> impl FnOnce(ndarray_linalg::error::LinalgError) -> Error {
        move |source| Error::Linalg { context, source }
    }
}
