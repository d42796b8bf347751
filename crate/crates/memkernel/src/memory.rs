// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scalar memory functions and the scalar Volterra machinery.
//!
//! A *memory function* f is a nonnegative scalar function with
//! ∫₀^∞ f(s) ds ≤ 1. It induces a survival function g(t) = 1 − ∫₀^t f(s) ds
//! (so g(0) = 1, g non-increasing, g ≥ 0) and a *waiting-time kernel* κ
//! defined through the first-kind Volterra equation
//!
//! ```text
//!     ∫₀^t g(t−s) κ(s) ds = f(t).                                   (★)
//! ```
//!
//! In Laplace variables κ̂(p) = p f̂(p) / (1 − f̂(p)). When f(0) ≠ 0, κ
//! carries a Dirac component w·δ(t) with weight w = f(0); that weight is
//! stored symbolically in [`ScalarKernel::local_weight`], never sampled.
//!
//! First-kind Volterra discretizations are ill-conditioned, so κ is computed
//! from the differentiated second-kind form. Substituting κ = w·δ + κ_reg
//! into (★) gives w·g(t) + (g ∗ κ_reg)(t) = f(t); differentiating with
//! g′ = −f and g(0) = 1 yields
//!
//! ```text
//!     κ_reg(t) = f′(t) + w·f(t) + ∫₀^t f(t−s) κ_reg(s) ds.
//! ```
//!
//! The w·f term is the derivative of the Dirac contribution w·g; dropping it
//! would break the Markovian degeneracy f(t) = γe^{−γt} ⟹ κ_reg ≡ 0,
//! w = γ (pure exponential memory is memoryless). The residual of the
//! original first-kind equation (★) is reported alongside the solution.

use crate::error::{Error, Result};
use crate::tol;
use crate::volterra::TimeGrid;

/// A scalar memory function (units 1/time).
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryFunction {
    /// Erlang-family density scaled by `scale`:
    /// f(t) = scale · γ^m t^{m−1} e^{−γt} / (m−1)!.
    ///
    /// Order m = 1 is the pure exponential γe^{−γt}; m = 2 gives γ²te^{−γt}.
    /// The density integrates to `scale`, so `scale ≤ 1` is the
    /// admissibility bound and `scale = 1` saturates it.
    Erlang {
        /// Rate γ > 0 (units 1/time).
        gamma: f64,
        /// Shape order m ≥ 1 (dimensionless).
        order: u32,
        /// Total mass ∫₀^∞ f = scale ≥ 0.
        scale: f64,
    },
    /// Tabulated values on a uniform grid with step `h`, value k at t = k·h.
    Samples {
        /// Grid step (units time).
        h: f64,
        /// f(k·h) for k = 0..len−1.
        values: Vec<f64>,
    },
    /// f ≡ 0 (the memoryless-trivial case: nothing ever arrives).
    Zero,
}

impl MemoryFunction {
    /// Unit-mass Erlang density of rate γ and order m.
    pub fn erlang(gamma: f64, order: u32) -> Result<Self> {
        Self::erlang_scaled(gamma, order, 1.0)
    }

    /// Erlang density with explicit mass `scale` (admissible iff ≤ 1).
    pub fn erlang_scaled(gamma: f64, order: u32, scale: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "Erlang rate must be positive and finite, got {gamma}"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidInput("Erlang order must be ≥ 1".into()));
        }
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::InvalidInput(format!(
                "Erlang scale must be finite and ≥ 0, got {scale}"
            )));
        }
        Ok(Self::Erlang { gamma, order, scale })
    }

    /// Tabulated memory function. Needs at least 3 points so that
    /// second-order difference quotients exist.
    pub fn samples(h: f64, values: Vec<f64>) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sample step must be positive and finite, got {h}"
            )));
        }
        if values.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "sampled memory function needs ≥ 3 points for differentiation, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "sampled memory function contains non-finite values".into(),
            ));
        }
        Ok(Self::Samples { h, values })
    }

    /// f(t) at one point. Sampled functions are restricted to their grid;
    /// see [`MemoryFunction::sample_on`] for the grid-compatibility rules.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Erlang { gamma, order, scale } => erlang_pdf(*gamma, *order, *scale, t),
            Self::Samples { h, values } => {
                // Linear interpolation inside the grid, 0 beyond it.
                if t < 0.0 {
                    return 0.0;
                }
                let x = t / h;
                let k = x.floor() as usize;
                if k + 1 >= values.len() {
                    return *values.last().expect("≥ 3 points by construction");
                }
                let w = x - k as f64;
                values[k] * (1.0 - w) + values[k + 1] * w
            }
        }
    }

    /// f(0), the Dirac weight that kernel synthesis will move into
    /// [`ScalarKernel::local_weight`].
    pub fn value_at_zero(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Erlang { gamma, order, scale } => {
                if *order == 1 {
                    scale * gamma
                } else {
                    0.0
                }
            }
            Self::Samples { values, .. } => values[0],
        }
    }

    /// Values on a grid. For `Samples`, the grid must match the tabulation
    /// step (relative difference ≤ 1e−12) and not extend past the data;
    /// interpolating inside numerical pipelines would silently degrade the
    /// convergence order.
    pub fn sample_on(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            Self::Zero => Ok(vec![0.0; grid.len()]),
            Self::Erlang { gamma, order, scale } => Ok((0..grid.len())
                .map(|k| erlang_pdf(*gamma, *order, *scale, grid.time(k)))
                .collect()),
            Self::Samples { h, values } => {
                if (h - grid.step()).abs() > 1e-12 * h.max(grid.step()) {
                    return Err(Error::GridMismatch {
                        context: "MemoryFunction::sample_on step",
                        expected: (grid.step() * 1e12) as usize,
                        found: (h * 1e12) as usize,
                    });
                }
                if grid.len() > values.len() {
                    return Err(Error::GridMismatch {
                        context: "MemoryFunction::sample_on length",
                        expected: grid.len(),
                        found: values.len(),
                    });
                }
                Ok(values[..grid.len()].to_vec())
            }
        }
    }

    /// f′ on a grid: analytic for closed forms, second-order difference
    /// quotients (centered inside, one-sided at the ends) for samples.
    pub fn derivative_on(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            Self::Zero => Ok(vec![0.0; grid.len()]),
            Self::Erlang { gamma, order, scale } => Ok((0..grid.len())
                .map(|k| erlang_pdf_deriv(*gamma, *order, *scale, grid.time(k)))
                .collect()),
            Self::Samples { .. } => {
                let f = self.sample_on(grid)?;
                Ok(diff2(&f, grid.step()))
            }
        }
    }

    /// Exact total mass ∫₀^∞ f when the family is closed-form.
    pub fn total_mass(&self) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Erlang { scale, .. } => Some(*scale),
            Self::Samples { .. } => None,
        }
    }

    /// Exact tail mass ∫_T^∞ f when the family is closed-form:
    /// scale · e^{−γT} Σ_{k<m} (γT)^k / k! for the Erlang family.
    pub fn tail_mass(&self, t_final: f64) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Erlang { gamma, order, scale } => {
                let x = gamma * t_final;
                let mut sum = 0.0;
                let mut term = 1.0; // x^k / k!
                for k in 0..*order {
                    if k > 0 {
                        term *= x / k as f64;
                    }
                    sum += term;
                }
                Some(scale * (-x).exp() * sum)
            }
            Self::Samples { .. } => None,
        }
    }
}

/// Erlang-family density value.
fn erlang_pdf(gamma: f64, order: u32, scale: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let m = order as i32;
    // γ^m t^{m−1} / (m−1)! computed as Π_{k=1..m−1} (γt/k) · γ to stay
    // overflow-safe for large orders.
    let mut prefactor = gamma;
    for k in 1..m {
        prefactor *= gamma * t / k as f64;
    }
    scale * prefactor * (-gamma * t).exp()
}

/// Analytic derivative of the Erlang-family density:
/// f′ = f·((m−1)/t − γ), with the t → 0 limits handled per order.
fn erlang_pdf_deriv(gamma: f64, order: u32, scale: f64, t: f64) -> f64 {
    match order {
        1 => -gamma * erlang_pdf(gamma, 1, scale, t),
        2 => scale * gamma * gamma * (1.0 - gamma * t) * (-gamma * t).exp(),
        m => {
            if t <= 0.0 {
                0.0
            } else {
                erlang_pdf(gamma, m, scale, t) * ((m as f64 - 1.0) / t - gamma)
            }
        }
    }
}

/// Second-order difference quotient: centered in the interior, one-sided
/// three-point stencils at the two endpoints.
pub(crate) fn diff2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    debug_assert!(n >= 3, "validated at construction");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for k in 1..n - 1 {
        d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d
}

/// Cumulative integral ∫₀^{t_k} by composite trapezoid; entry 0 is exactly 0.
pub(crate) fn cumtrapz(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * h * (f[k - 1] + f[k]);
        out.push(acc);
    }
    out
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

/// Outcome of [`check_admissible`]: raw measurements plus the verdict, so
/// callers can re-threshold.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityReport {
    /// Smallest sampled value of f on the grid.
    pub min_value: f64,
    /// Trapezoid integral of f over the grid horizon.
    pub grid_mass: f64,
    /// Exact ∫₀^∞ f when the family is closed-form.
    pub total_mass: Option<f64>,
    /// Exact ∫_T^∞ f when the family is closed-form.
    pub tail_mass: Option<f64>,
    /// Tolerance used for both the sign and the mass bound.
    pub tol: f64,
    /// min_value ≥ −tol and (total or grid) mass ≤ 1 + tol.
    pub admissible: bool,
}

/// Check f ≥ 0 and ∫₀^∞ f ≤ 1 on a working grid. Closed-form families are
/// judged by their exact mass (the improper integral cannot be verified from
/// samples alone); tabulated ones by the trapezoid mass over the grid.
pub fn check_admissible(f: &MemoryFunction, grid: &TimeGrid) -> Result<AdmissibilityReport> {
    let samples = f.sample_on(grid)?;
    let min_value = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let grid_mass = *cumtrapz(&samples, grid.step())
        .last()
        .expect("grid has ≥ 2 points");
    let total_mass = f.total_mass();
    let tail_mass = f.tail_mass(grid.horizon());
    let tol = tol::ADMISSIBILITY_TOL;
    let mass = total_mass.unwrap_or(grid_mass);
    let admissible = min_value >= -tol && mass <= 1.0 + tol;
    Ok(AdmissibilityReport {
        min_value,
        grid_mass,
        total_mass,
        tail_mass,
        tol,
        admissible,
    })
}

/// Survival function g(t) = 1 − ∫₀^t f(s) ds on the grid, by composite
/// trapezoid. g(0) = 1 exactly.
pub fn g_from_f(f: &MemoryFunction, grid: &TimeGrid) -> Result<Vec<f64>> {
    let samples = f.sample_on(grid)?;
    Ok(cumtrapz(&samples, grid.step())
        .into_iter()
        .map(|c| 1.0 - c)
        .collect())
}

// ---------------------------------------------------------------------------
// Scalar kernels
// ---------------------------------------------------------------------------

/// A scalar convolution kernel with an optional Dirac component at t = 0:
/// κ(t) = local_weight·δ(t) + regular(t).
///
/// The Dirac weight is carried symbolically (units 1/time); the regular part
/// is sampled on a uniform grid (units 1/time²).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarKernel {
    /// Weight of the δ(t) component; contributes `local_weight · x(t)` to
    /// any convolution (κ ∗ x)(t).
    pub local_weight: f64,
    /// Grid step of `regular`.
    pub h: f64,
    /// Samples of the regular part at t = k·h.
    pub regular: Vec<f64>,
}

impl ScalarKernel {
    /// The zero kernel on a grid.
    pub fn zero(grid: &TimeGrid) -> Self {
        Self {
            local_weight: 0.0,
            h: grid.step(),
            regular: vec![0.0; grid.len()],
        }
    }

    /// Laplace transform κ̂(p) = local_weight + ∫₀^T e^{−pt} κ_reg(t) dt by
    /// trapezoid (the Dirac transforms to the constant weight).
    pub fn laplace(&self, p: f64) -> f64 {
        let weighted: Vec<f64> = self
            .regular
            .iter()
            .enumerate()
            .map(|(k, v)| (-p * self.h * k as f64).exp() * v)
            .collect();
        self.local_weight
            + *cumtrapz(&weighted, self.h)
                .last()
                .expect("kernel grids have ≥ 2 points")
    }
}

/// Result of [`kappa_from_f`]: the kernel plus the sup-norm residual of the
/// defining first-kind equation ∫₀^t g(t−s)κ(s)ds = f(t) on the grid.
#[derive(Debug, Clone)]
pub struct KappaSynthesis {
    /// The synthesized kernel κ = local_weight·δ + regular.
    pub kernel: ScalarKernel,
    /// sup_t |w·g(t) + (g ∗ κ_reg)(t) − f(t)| — pure quadrature error,
    /// O(h²) for smooth admissible f.
    pub first_kind_residual: f64,
}

/// Synthesize the waiting-time kernel κ of a memory function f, solving
/// κ_reg = f′ + f(0)·f + f ∗ κ_reg and setting local_weight = f(0)
/// (see the module docs for the derivation from the first-kind equation).
pub fn kappa_from_f(f: &MemoryFunction, grid: &TimeGrid) -> Result<KappaSynthesis> {
    let w = f.value_at_zero();
    if w != 0.0 {
        if let MemoryFunction::Samples { .. } = f {
            log::warn!(
                "sampled memory function has f(0) = {w:.3e}; κ carries a Dirac \
                 component of that weight in local_weight"
            );
        }
    }

    let fs = f.sample_on(grid)?;
    let fd = f.derivative_on(grid)?;
    let forcing: Vec<f64> = fd.iter().zip(&fs).map(|(d, v)| d + w * v).collect();
    let regular = volterra2_scalar(&fs, &forcing, grid.step())?;

    // Residual of the first-kind equation: w·g + g ∗ κ_reg − f.
    let g = g_from_f(f, grid)?;
    let conv = conv_trapz(&g, &regular, grid.step());
    let first_kind_residual = (0..grid.len())
        .map(|k| (w * g[k] + conv[k] - fs[k]).abs())
        .fold(0.0, f64::max);

    Ok(KappaSynthesis {
        kernel: ScalarKernel {
            local_weight: w,
            h: grid.step(),
            regular,
        },
        first_kind_residual,
    })
}

/// Convolution (a ∗ b)(t_k) = ∫₀^{t_k} a(t_k − s) b(s) ds by composite
/// trapezoid on a shared uniform grid.
pub(crate) fn conv_trapz(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut out = vec![0.0; n];
    for k in 1..n {
        let mut acc = 0.5 * (a[k] * b[0] + a[0] * b[k]);
        for j in 1..k {
            acc += a[k - j] * b[j];
        }
        out[k] = acc * h;
    }
    out
}

/// Solve the scalar second-kind Volterra equation
/// x(t) = forcing(t) + ∫₀^t kernel(t−s) x(s) ds
/// by trapezoidal marching (second-order accurate).
pub fn volterra2_scalar(kernel: &[f64], forcing: &[f64], h: f64) -> Result<Vec<f64>> {
    if kernel.len() != forcing.len() {
        return Err(Error::GridMismatch {
            context: "volterra2_scalar",
            expected: forcing.len(),
            found: kernel.len(),
        });
    }
    let n = kernel.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    // Implicit diagonal weight: x_k (1 − (h/2)·kernel(0)) = forcing_k + history.
    let diag = 1.0 - 0.5 * h * kernel[0];
    if diag.abs() < tol::DIAGONAL_CORRECTION_MIN {
        return Err(Error::StepSize(format!(
            "trapezoid diagonal 1 − (h/2)k(0) = {diag:.3e} is numerically singular; \
             reduce the step size"
        )));
    }
    let mut x = vec![0.0; n];
    x[0] = forcing[0];
    for k in 1..n {
        let mut acc = 0.5 * kernel[k] * x[0];
        for j in 1..k {
            acc += kernel[k - j] * x[j];
        }
        let val = (forcing[k] + h * acc) / diag;
        if !val.is_finite() {
            return Err(Error::Numerical {
                step: k,
                what: "scalar Volterra march produced a non-finite value".into(),
            });
        }
        x[k] = val;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
