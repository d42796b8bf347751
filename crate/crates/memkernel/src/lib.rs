// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Numerical toolkit for memory-kernel (non-Markovian) quantum master equations
//! in the Heisenberg picture.
//!
//! The central object is a family of completely positive (CP), unital maps
//! A_t on the matrix algebra M_d solving
//!
//!   dA_t/dt = ∫₀ᵗ L_{t−s} A_s ds,   A_0 = I,
//!
//! where the kernel L_t may contain a Dirac component 2δ(t)L (the Markovian
//! part) plus a regular memory part. The crate provides
//!
//! - [`algebra`]: dense operator/superoperator algebra — vectorization,
//!   Hilbert–Schmidt duality, Choi matrices, CP/unitality diagnostics, GKSL
//!   generators, and matrix exponentials;
//! - [`memory`]: scalar memory functions f with ∫₀^∞ f ≤ 1, their survival
//!   functions g = 1 − ∫f, and the scalar kernel κ with κ̂ = p·f̂/(1 − f̂);
//! - [`kernels`]: CP-guaranteed kernel constructions L_t = κ(t)(B − I) and
//!   L_t = Z_t(B − I), the normalization-equation sufficiency check, and the
//!   Breuer–Vacchini condition;
//! - [`volterra`]: the second-order Volterra integro-differential marcher,
//!   normalization solver, derivative (G) extraction, and real-axis Laplace
//!   sampling with tail bounds;
//! - [`families`]: semigroup mixtures with closed-form kernels for two and
//!   three commuting generators, time-dependent mixtures, and reduced
//!   dynamics of a system–environment dilation;
//! - [`json`]: the JSON wire schemas shared with the `memkernel` CLI.
//!
//! All storage is dense and targets desk scale (d ≤ 8, dilations up to a
//! 16-dimensional composite). Norms are Frobenius unless stated otherwise.
//! Complete positivity is certified spectrally: a map is accepted as CP at
//! tolerance τ iff the minimum eigenvalue of its Hermitized Choi matrix is
//! ≥ −τ and the anti-Hermitian residual of the Choi matrix is ≤ τ.
//!
//! With the default `parallel` feature, independent grid-point work (per-step
//! diagnostics, semigroup sampling, certification sweeps) is distributed with
//! rayon; disabling the feature falls back to equivalent sequential loops.
//! Results are bitwise identical either way: parallel maps preserve index
//! order and no reductions are reordered.

pub mod algebra;
pub mod error;
pub mod families;
pub mod json;
pub mod kernels;
pub mod memory;
pub(crate) mod par;
pub mod tol;
pub mod volterra;

/// Shorthand for the complex scalar type used throughout.
pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
