// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Solvable families: semigroup mixtures, their closed-form memory kernels,
//! time-dependent mixtures, and reduced dynamics from a system–environment
//! semigroup.
//!
//! Convex mixtures A_t = Σ_j x_j e^{tL_j} of GKSL semigroups are CP and
//! unital for free but are **not** semigroups themselves — they are the
//! standard source of analytically controlled non-Markovian evolutions.
//! For commuting generators the memory kernel is available in closed form:
//!
//! - n = 2: L̂_p = x₁L₁ + x₂L₂ + x₁x₂(L₁−L₂)²(p − (x₁L₂+x₂L₁))⁻¹, whose
//!   time-domain kernel is the matrix exponential tabulated by
//!   [`mixture_kernel_n2`];
//! - n = 3: the rational form evaluated pointwise in p by
//!   [`mixture_kernel_n3_hat`] (no simple time-domain form exists).
//!
//! Time-dependent mixtures A_t = (1 − Σ_j∫₀^t x_j)·I + Σ_j ∫₀^t x_j(s)e^{sL_j}ds
//! stay CP while Σ_j ∫₀^T x_j ≤ 1; their generator exists only through the
//! derivative representation G_t = Σ_j x_j(t)(e^{tL_j} − I), never as an
//! explicit time-domain kernel.
//!
//! Reduced dynamics: A_t(a) = tr_E[(1 ⊗ ω)·e^{tL_tot}(a ⊗ 1)] for a
//! composite GKSL semigroup and a fixed environment state ω — CP and unital
//! by construction, and the generic producer of memory kernels via
//! [`crate::volterra::extract_g`] / [`crate::volterra::kernel_from_g`].
//!
//! Ref: Breuer & Vacchini, Phys. Rev. E 79, 041147 (2009) for kernel
//! mixtures; GKSL semigroups per Gorini–Kossakowski–Sudarshan and Lindblad
//! (1976).

use ndarray::Array2;
use ndarray_linalg::Inverse;

use crate::algebra::{
    frob, hermitian_eigenvalues, kron, smallest_singular_value, vec_index, GkslSpec, Operator,
    Picture, SuperOp,
};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, MemoryPart};
use crate::memory::MemoryFunction;
use crate::tol;
use crate::volterra::{cumtrapz_ops, EvolutionTrace, GRepresentation, SampledSuperOp, TimeGrid};
use crate::C64;

// ---------------------------------------------------------------------------
// Static mixtures
// ---------------------------------------------------------------------------

/// A convex mixture of semigroup generators: weights x_j ≥ 0 with Σx_j = 1
/// and generators L_j that annihilate the identity.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    generators: Vec<SuperOp>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    /// Validate and assemble a mixture: equal dimensions, nonnegative
    /// weights summing to 1 within 1e−12, and ‖L_j(1)‖ ≤ τ for each
    /// component (Heisenberg generators must annihilate the identity).
    pub fn new(generators: Vec<SuperOp>, weights: Vec<f64>) -> Result<Self> {
        if generators.is_empty() || generators.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "mixture needs equally many generators and weights (≥ 1), got {} and {}",
                generators.len(),
                weights.len()
            )));
        }
        let d = generators[0].dim();
        if let Some(bad) = generators.iter().find(|l| l.dim() != d) {
            return Err(Error::DimensionMismatch {
                context: "MixtureSpec generators",
                expected: d,
                found: bad.dim(),
            });
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "mixture weights must be nonnegative, got {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "mixture weights must sum to 1 within {:.0e}, got {sum:.17}",
                tol::WEIGHT_SUM_TOL
            )));
        }
        let t = tol::default_tol(d);
        for (j, l) in generators.iter().enumerate() {
            let img = l.identity_image_norm();
            if img > t {
                return Err(Error::InvalidInput(format!(
                    "mixture component {j} does not annihilate the identity: ‖L(1)‖ = {img:.3e}"
                )));
            }
        }
        Ok(Self {
            generators,
            weights,
        })
    }

    /// System dimension d.
    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// Number of components n.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    /// True iff the mixture has no components (never constructible).
    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// The component generators.
    pub fn generators(&self) -> &[SuperOp] {
        &self.generators
    }

    /// The convex weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Tabulate a semigroup e^{t_k L} on a grid by repeated composition with
/// the single-step exponential e^{hL} (exact semigroup property; only f64
/// product roundoff accumulates, ~n·ε).
fn semigroup_samples(l: &SuperOp, grid: &TimeGrid) -> Result<Vec<SuperOp>> {
    let e_step = l.expm(grid.step())?;
    let mut out = Vec::with_capacity(grid.len());
    out.push(SuperOp::identity(l.dim()));
    for k in 1..grid.len() {
        let next = e_step.compose(&out[k - 1])?;
        out.push(next);
    }
    Ok(out)
}

/// Evolve the mixture: A_{t_k} = Σ_j x_j e^{t_k L_j}, CP and unital by
/// convexity, with spectral diagnostics filled on every grid point.
pub fn mixture_evolution(spec: &MixtureSpec, grid: &TimeGrid) -> Result<EvolutionTrace> {
    let d = spec.dim();
    let side = d * d;
    let mut acc = vec![Array2::<C64>::zeros((side, side)); grid.len()];
    for (l_j, &x_j) in spec.generators.iter().zip(&spec.weights) {
        if x_j == 0.0 {
            continue;
        }
        let path = semigroup_samples(l_j, grid)?;
        for (a_k, s_k) in acc.iter_mut().zip(&path) {
            *a_k = &*a_k + &s_k.matrix().mapv(|z| z * x_j);
        }
    }
    let a = acc
        .into_iter()
        .map(|m| SuperOp::new(d, m))
        .collect::<Result<Vec<_>>>()?;
    EvolutionTrace::new(*grid, a)
}

/// Relative commutator gate: the closed-form kernels require [L_i, L_j] = 0
/// and near-misses are rejected, not silently approximated.
fn require_commuting(a: &SuperOp, b: &SuperOp, context: &str) -> Result<()> {
    let comm = frob(&(&a.matrix().dot(b.matrix()) - &b.matrix().dot(a.matrix())));
    let gate = tol::COMMUTATOR_GATE * a.norm() * b.norm();
    if comm > gate {
        return Err(Error::InvalidInput(format!(
            "{context}: generators do not commute (‖[L_i, L_j]‖ = {comm:.3e}, gate {gate:.3e}); \
             the closed-form kernel is only valid for commuting generators"
        )));
    }
    Ok(())
}

/// Closed-form memory kernel of a two-component commuting mixture.
///
/// The Laplace-domain kernel L̂_p = x₁L₁+x₂L₂ + x₁x₂(L₁−L₂)²(p−W)⁻¹ with
/// W = x₁L₂+x₂L₁ inverts exactly to an instantaneous part x₁L₁+x₂L₂ plus a
/// memory part K_t = x₁x₂(L₁−L₂)²·e^{tW}, which this function tabulates on
/// `grid`. Feeding the result to [`crate::volterra::evolve`] reproduces
/// [`mixture_evolution`] within the solver's O(h²) tolerance.
pub fn mixture_kernel_n2(spec: &MixtureSpec, grid: &TimeGrid) -> Result<KernelSpec> {
    if spec.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "closed-form pair kernel needs exactly 2 components, got {}",
            spec.len()
        )));
    }
    let (l1, l2) = (&spec.generators[0], &spec.generators[1]);
    let (x1, x2) = (spec.weights[0], spec.weights[1]);
    require_commuting(l1, l2, "mixture_kernel_n2")?;

    let d = spec.dim();
    let local = &l1.scale(x1) + &l2.scale(x2);
    let diff = l1 - l2;
    let weight_mat = diff.matrix().dot(diff.matrix()).mapv(|z| z * (x1 * x2));
    let w = &l2.scale(x1) + &l1.scale(x2);
    let path = semigroup_samples(&w, grid)?;
    let samples = path
        .iter()
        .map(|s| SuperOp::new(d, weight_mat.dot(s.matrix())))
        .collect::<Result<Vec<_>>>()?;
    KernelSpec::new(
        d,
        Some(local),
        MemoryPart::Sampled(SampledSuperOp::new(*grid, samples)?),
    )
}

/// Laplace-domain memory kernel of a three-component commuting mixture at
/// one real p > 0 (no simple time-domain form exists for n = 3):
///
/// ```text
///     L̂_p = L + B̂_p·Ĉ_p⁻¹,                 L   = Σ_j x_j L_j,
///     B̂_p = p(Σ_j x_j L_j² − L²) + L₁L₂L₃ − L·S,
///     Ĉ_p = p²I − p(L₁+L₂+L₃ − L) + S,      S   = x₁L₂L₃ + x₂L₁L₃ + x₃L₁L₂.
/// ```
pub fn mixture_kernel_n3_hat(spec: &MixtureSpec, p: f64) -> Result<SuperOp> {
    if spec.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "closed-form triple kernel needs exactly 3 components, got {}",
            spec.len()
        )));
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Laplace abscissa must be positive and finite, got {p}"
        )));
    }
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        require_commuting(
            &spec.generators[i],
            &spec.generators[j],
            "mixture_kernel_n3_hat",
        )?;
    }
    let d = spec.dim();
    let side = d * d;
    let (x1, x2, x3) = (spec.weights[0], spec.weights[1], spec.weights[2]);
    let m1 = spec.generators[0].matrix();
    let m2 = spec.generators[1].matrix();
    let m3 = spec.generators[2].matrix();

    let l_bar = &(&m1.mapv(|z| z * x1) + &m2.mapv(|z| z * x2)) + &m3.mapv(|z| z * x3);
    let sym = &(&m2.dot(m3).mapv(|z| z * x1) + &m1.dot(m3).mapv(|z| z * x2))
        + &m1.dot(m2).mapv(|z| z * x3);
    let second_moment = &(&m1.dot(m1).mapv(|z| z * x1) + &m2.dot(m2).mapv(|z| z * x2))
        + &m3.dot(m3).mapv(|z| z * x3);

    let b_hat = &(&(&second_moment - &l_bar.dot(&l_bar)).mapv(|z| z * p)
        + &m1.dot(m2).dot(m3))
        - &l_bar.dot(&sym);
    let c_hat = &(&Array2::<C64>::eye(side).mapv(|z| z * (p * p))
        - &(&(&(m1 + m2) + m3) - &l_bar).mapv(|z| z * p))
        + &sym;

    let sigma_min = smallest_singular_value(&c_hat)?;
    if sigma_min < tol::POLE_SIGMA_MIN * frob(&c_hat).max(1.0) {
        return Err(Error::PoleProximity {
            p,
            what: format!("triple-mixture denominator Ĉ_p is singular (σ_min = {sigma_min:.3e})"),
        });
    }
    let c_inv = c_hat
        .inv()
        .map_err(Error::linalg("triple-mixture denominator inverse"))?;
    SuperOp::new(d, &l_bar + &b_hat.dot(&c_inv))
}

// ---------------------------------------------------------------------------
// Time-dependent mixtures
// ---------------------------------------------------------------------------

/// A time-dependent mixture: nonnegative weight functions x_j(t) with
/// Σ_j ∫₀^T x_j ≤ 1, and semigroup generators L_j.
#[derive(Debug, Clone)]
pub struct TimeMixtureSpec {
    generators: Vec<SuperOp>,
    weights: Vec<MemoryFunction>,
}

impl TimeMixtureSpec {
    /// Validate dimensions and component counts; pointwise nonnegativity
    /// and the integral constraint are grid facts checked by
    /// [`time_mixture_evolution`].
    pub fn new(generators: Vec<SuperOp>, weights: Vec<MemoryFunction>) -> Result<Self> {
        if generators.is_empty() || generators.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "time mixture needs equally many generators and weight functions (≥ 1), \
                 got {} and {}",
                generators.len(),
                weights.len()
            )));
        }
        let d = generators[0].dim();
        if let Some(bad) = generators.iter().find(|l| l.dim() != d) {
            return Err(Error::DimensionMismatch {
                context: "TimeMixtureSpec generators",
                expected: d,
                found: bad.dim(),
            });
        }
        let t = tol::default_tol(d);
        for (j, l) in generators.iter().enumerate() {
            let img = l.identity_image_norm();
            if img > t {
                return Err(Error::InvalidInput(format!(
                    "time-mixture component {j} does not annihilate the identity: \
                     ‖L(1)‖ = {img:.3e}"
                )));
            }
        }
        Ok(Self {
            generators,
            weights,
        })
    }

    /// System dimension d.
    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// Number of components n.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    /// True iff the mixture has no components (never constructible).
    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Output of [`time_mixture_evolution`]: the evolved trace plus the exact
/// derivative representation.
#[derive(Debug, Clone)]
pub struct TimeMixtureEvolution {
    /// The evolution A_t with diagnostics.
    pub trace: EvolutionTrace,
    /// G_t = Σ_j x_j(t)(e^{tL_j} − I), the generator data this family
    /// exposes — its kernel has no explicit time-domain form and is reached
    /// only through Laplace samples.
    pub g: GRepresentation,
}

/// Evolve a time-dependent mixture by trapezoid quadrature:
///
/// ```text
///     A_t = (1 − Σ_j ∫₀^t x_j)·I + Σ_j ∫₀^t x_j(s) e^{sL_j} ds,
/// ```
///
/// CP and unital whenever the weights are nonnegative with
/// Σ_j ∫₀^T x_j ≤ 1 (the leftover weight multiplies the identity map).
/// Violations of either condition are rejected.
pub fn time_mixture_evolution(
    spec: &TimeMixtureSpec,
    grid: &TimeGrid,
) -> Result<TimeMixtureEvolution> {
    let d = spec.dim();
    let side = d * d;
    let n = grid.len();
    let eye = Array2::<C64>::eye(side);

    let mut integral = vec![Array2::<C64>::zeros((side, side)); n];
    let mut g_mats = vec![Array2::<C64>::zeros((side, side)); n];
    let mut total_mass = vec![0.0f64; n];

    for (j, (l_j, w_j)) in spec.generators.iter().zip(&spec.weights).enumerate() {
        let xs = w_j.sample_on(grid)?;
        if let Some(&bad) = xs.iter().find(|&&v| v < -tol::WEIGHT_SUM_TOL) {
            return Err(Error::InvalidInput(format!(
                "time-mixture weight function {j} takes negative value {bad:.3e}"
            )));
        }
        let mass = crate::memory::cumtrapz(&xs, grid.step());
        for (acc, m) in total_mass.iter_mut().zip(&mass) {
            *acc += m;
        }
        let path = semigroup_samples(l_j, grid)?;
        let integrand: Vec<SuperOp> = path
            .iter()
            .zip(&xs)
            .map(|(s, &x)| s.scale(x))
            .collect();
        for (acc, c) in integral.iter_mut().zip(cumtrapz_ops(&integrand, grid.step())) {
            *acc = &*acc + &c;
        }
        for ((g_k, s_k), &x_k) in g_mats.iter_mut().zip(&path).zip(&xs) {
            *g_k = &*g_k + &(s_k.matrix() - &eye).mapv(|z| z * x_k);
        }
    }

    // x_j ≥ 0 makes the accumulated mass nondecreasing, so the horizon
    // value is its maximum and one check covers all t.
    let final_mass = total_mass[n - 1];
    if final_mass > 1.0 + tol::ADMISSIBILITY_TOL {
        return Err(Error::InvalidInput(format!(
            "time-mixture weights integrate to {final_mass:.12} > 1 on [0, {}]; \
             the evolution would leave the CP convex hull",
            grid.horizon()
        )));
    }

    let a = integral
        .into_iter()
        .zip(&total_mass)
        .map(|(c, &m)| SuperOp::new(d, &eye.mapv(|z| z * (1.0 - m)) + &c))
        .collect::<Result<Vec<_>>>()?;
    let g = g_mats
        .into_iter()
        .map(|m| SuperOp::new(d, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeMixtureEvolution {
        trace: EvolutionTrace::new(*grid, a)?,
        g: GRepresentation { grid: *grid, g },
    })
}

// ---------------------------------------------------------------------------
// Reduced dynamics from a dilation
// ---------------------------------------------------------------------------

/// A system–environment dilation: a GKSL semigroup on the composite
/// d·k-dimensional space and a fixed environment state ω.
#[derive(Debug, Clone)]
pub struct DilationSpec {
    sys_dim: usize,
    env_dim: usize,
    total: GkslSpec,
    omega: Operator,
}

impl DilationSpec {
    /// Validate a dilation: d·k ≤ 16 (dense-exponential desk scale), the
    /// composite generator lives on dimension d·k, and ω is a k×k state
    /// (Hermitian, positive semidefinite within τ, unit trace within
    /// 1e−12). `omega = None` selects the ground-state projector |0⟩⟨0|.
    pub fn new(
        sys_dim: usize,
        env_dim: usize,
        total: GkslSpec,
        omega: Option<Operator>,
    ) -> Result<Self> {
        if sys_dim == 0 || env_dim == 0 {
            return Err(Error::InvalidInput(
                "system and environment dimensions must be ≥ 1".into(),
            ));
        }
        let dk = sys_dim * env_dim;
        if dk > tol::DILATION_DIM_LIMIT {
            return Err(Error::InvalidInput(format!(
                "composite dimension {dk} exceeds the supported limit {}",
                tol::DILATION_DIM_LIMIT
            )));
        }
        if total.dim() != dk {
            return Err(Error::DimensionMismatch {
                context: "DilationSpec composite generator",
                expected: dk,
                found: total.dim(),
            });
        }
        let omega = omega.unwrap_or_else(|| Operator::matrix_unit(env_dim, 0, 0));
        if omega.dim() != env_dim {
            return Err(Error::DimensionMismatch {
                context: "DilationSpec environment state",
                expected: env_dim,
                found: omega.dim(),
            });
        }
        let t = tol::default_tol(env_dim);
        if omega.hermiticity_residual() > t {
            return Err(Error::InvalidInput(format!(
                "environment state must be Hermitian: ‖ω − ω†‖ = {:.3e}",
                omega.hermiticity_residual()
            )));
        }
        let evals = hermitian_eigenvalues(omega.matrix())?;
        if evals[0] < -t {
            return Err(Error::InvalidInput(format!(
                "environment state must be positive semidefinite: λ_min = {:.3e}",
                evals[0]
            )));
        }
        let tr = omega.trace();
        if (tr.re - 1.0).abs() > tol::STATE_TRACE_TOL || tr.im.abs() > tol::STATE_TRACE_TOL {
            return Err(Error::InvalidInput(format!(
                "environment state must have unit trace, got {tr}"
            )));
        }
        Ok(Self {
            sys_dim,
            env_dim,
            total,
            omega,
        })
    }

    /// System dimension d.
    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    /// Environment dimension k.
    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    /// The composite generator specification.
    pub fn total(&self) -> &GkslSpec {
        &self.total
    }

    /// The environment state ω.
    pub fn omega(&self) -> &Operator {
        &self.omega
    }
}

/// Contract a composite Heisenberg map into a reduced system map:
/// X = A(a) with X_{rc} = Σ_{μρ} ω_{μρ} Y[(r,ρ), (c,μ)], Y = S(a ⊗ 1),
/// composite index (r, ρ) ↦ r·k + ρ (system-major, matching a ⊗ 1 =
/// kron(a, 1)).
fn reduce_composite(semigroup: &SuperOp, spec: &DilationSpec) -> Result<SuperOp> {
    let d = spec.sys_dim;
    let kk = spec.env_dim;
    let omega = spec.omega.matrix();
    let eye_env = Array2::<C64>::eye(kk);
    let mut mat = Array2::<C64>::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            let e_ij = Operator::matrix_unit(d, i, j);
            let lifted = Operator::new(kron(e_ij.matrix(), &eye_env))?;
            let y = semigroup.apply(&lifted)?;
            let y_mat = y.matrix();
            for r in 0..d {
                for c in 0..d {
                    let mut s = C64::new(0.0, 0.0);
                    for mu in 0..kk {
                        for rho in 0..kk {
                            s += omega[[mu, rho]] * y_mat[[r * kk + rho, c * kk + mu]];
                        }
                    }
                    mat[[vec_index(d, r, c), vec_index(d, i, j)]] = s;
                }
            }
        }
    }
    SuperOp::new(d, mat)
}

/// Reduced dynamics of a dilation: A_t(a) = tr_E[(1 ⊗ ω)·e^{tL_tot}(a ⊗ 1)]
/// tabulated on `grid`, with diagnostics. CP and unital by construction
/// (composition of the CP unital semigroup with the CP unital conditional
/// expectation), which makes this the reference producer of kernels with no
/// closed form: feed the trace to [`crate::volterra::extract_g`] and
/// [`crate::volterra::kernel_from_g`].
pub fn dilation_reduced(spec: &DilationSpec, grid: &TimeGrid) -> Result<EvolutionTrace> {
    let l_tot = spec.total.generator(Picture::Heisenberg);
    let e_step = l_tot.expm(grid.step())?;
    let mut current = SuperOp::identity(spec.sys_dim * spec.env_dim);
    let mut a = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        a.push(reduce_composite(&current, spec)?);
        if k + 1 < grid.len() {
            current = e_step.compose(&current)?;
        }
    }
    EvolutionTrace::new(*grid, a)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_x, pauli_z, sigma_minus, sigma_plus};
    use crate::volterra::{evolve, extract_g, laplace_sample};

    fn dephasing(rate: f64) -> SuperOp {
        GkslSpec::new(Operator::zeros(2), vec![(pauli_z(), rate)])
            .unwrap()
            .generator(Picture::Heisenberg)
    }

    fn damped_qubit() -> SuperOp {
        GkslSpec::new(pauli_x(), vec![(sigma_minus(), 0.5)])
            .unwrap()
            .generator(Picture::Heisenberg)
    }

    #[test]
    fn degenerate_weight_reduces_to_single_semigroup() {
        let spec = MixtureSpec::new(vec![dephasing(1.0), damped_qubit()], vec![1.0, 0.0]).unwrap();
        let grid = TimeGrid::from_horizon(0.01, 2.0).unwrap();
        let trace = mixture_evolution(&spec, &grid).unwrap();
        let l1 = dephasing(1.0);
        for (k, a_k) in trace.a.iter().enumerate() {
            let exact = l1.expm(grid.time(k)).unwrap();
            assert!(frob(&(a_k.matrix() - exact.matrix())) < 1e-10);
        }
    }

    #[test]
    fn equal_dephasing_mixture_averages_coherence() {
        // x = (½, ½), L₁ = dephasing(γ), L₂ = 0: the coherence component
        // relaxes as (1 + e^{−2γt})/2 — the scalar average.
        let gamma = 0.8;
        let spec =
            MixtureSpec::new(vec![dephasing(gamma), SuperOp::zero(2)], vec![0.5, 0.5]).unwrap();
        let grid = TimeGrid::from_horizon(0.01, 3.0).unwrap();
        let trace = mixture_evolution(&spec, &grid).unwrap();
        for (k, a_k) in trace.a.iter().enumerate() {
            let want = 0.5 * (1.0 + (-2.0 * gamma * grid.time(k)).exp());
            let got = a_k.matrix()[[1, 1]];
            assert!((got.re - want).abs() < 1e-10 && got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn mixture_diagnostics_certify_convexity() {
        let spec = MixtureSpec::new(
            vec![
                dephasing(1.0),
                damped_qubit(),
                GkslSpec::new(Operator::zeros(2), vec![(pauli_x(), 0.3)])
                    .unwrap()
                    .generator(Picture::Heisenberg),
            ],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let grid = TimeGrid::from_horizon(0.02, 3.0).unwrap();
        let trace = mixture_evolution(&spec, &grid).unwrap();
        let n_tau = 3.0 * tol::default_tol(2);
        assert!(trace.min_cp_defect() >= -1e-10, "{}", trace.min_cp_defect());
        assert!(trace.max_unitality_defect() <= n_tau);
    }

    #[test]
    fn mixture_spec_validation_rejects_bad_input() {
        assert!(MixtureSpec::new(vec![dephasing(1.0)], vec![0.9]).is_err());
        assert!(MixtureSpec::new(vec![dephasing(1.0)], vec![-1.0, 2.0]).is_err());
        assert!(MixtureSpec::new(vec![dephasing(1.0), SuperOp::zero(3)], vec![0.5, 0.5]).is_err());
        // left multiplication sends 1 ↦ σ_z ≠ 0: not a Heisenberg generator
        let bad = SuperOp::new(2, kron(&Array2::eye(2), pauli_z().matrix())).unwrap();
        assert!(MixtureSpec::new(vec![bad], vec![1.0]).is_err());
        assert!(MixtureSpec::new(vec![], vec![]).is_err());
    }

    #[test]
    fn n2_kernel_identical_generators_reduces_to_local() {
        // L₁ = L₂ ⟹ (L₁−L₂)² = 0: pure local part, the evolution is e^{tL}.
        let l = dephasing(0.7);
        let spec = MixtureSpec::new(vec![l.clone(), l.clone()], vec![0.4, 0.6]).unwrap();
        let grid = TimeGrid::from_horizon(1e-3, 2.0).unwrap();
        let kernel = mixture_kernel_n2(&spec, &grid).unwrap();
        let trace = evolve(&kernel, &grid).unwrap();
        let mut worst = 0.0f64;
        for (k, a_k) in trace.a.iter().enumerate() {
            let exact = l.expm(grid.time(k)).unwrap();
            worst = worst.max(frob(&(a_k.matrix() - exact.matrix())));
        }
        assert!(worst < 1e-5, "sup deviation {worst:.3e}");
    }

    #[test]
    fn n2_kernel_reproduces_mixture_evolution() {
        // The key equivalence: solving the closed-form kernel matches the
        // direct convex combination within the marcher's O(h²).
        let spec = MixtureSpec::new(vec![dephasing(1.0), dephasing(3.0)], vec![0.5, 0.5]).unwrap();
        let grid = TimeGrid::from_horizon(2e-3, 2.5).unwrap();
        let kernel = mixture_kernel_n2(&spec, &grid).unwrap();
        let solved = evolve(&kernel, &grid).unwrap();
        let direct = mixture_evolution(&spec, &grid).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in solved.a.iter().zip(&direct.a) {
            worst = worst.max(frob(&(a.matrix() - b.matrix())));
        }
        let budget = 10.0 * tol::ROUND_TRIP_CONST * grid.step() * grid.step();
        assert!(worst < budget, "sup deviation {worst:.3e} vs {budget:.3e}");
    }

    #[test]
    fn n2_kernel_coherence_sector_matches_eigenvalue_arithmetic() {
        // Dephasing eigenvalues λ₁ = −2, λ₂ = −6 on the coherence sector:
        // K_t there is x₁x₂(λ₁−λ₂)²e^{t(x₁λ₂+x₂λ₁)} = 4e^{−4t}, with
        // Laplace transform 4/(p+4), checked by quadrature on a long grid.
        let spec = MixtureSpec::new(vec![dephasing(1.0), dephasing(3.0)], vec![0.5, 0.5]).unwrap();
        let grid = TimeGrid::from_horizon(2e-3, 16.0).unwrap();
        let kernel = mixture_kernel_n2(&spec, &grid).unwrap();
        let MemoryPart::Sampled(samples) = kernel.memory() else {
            panic!("pair kernel must tabulate its memory part");
        };
        let values = samples.values();
        for (k, v) in values.iter().enumerate().step_by(100) {
            let want = 4.0 * (-4.0 * grid.time(k)).exp();
            let got = v.matrix()[[1, 1]];
            assert!(
                (got.re - want).abs() < 1e-9,
                "t = {}: {} vs {want}",
                grid.time(k),
                got.re
            );
        }
        for p in [1.0, 2.0, 5.0] {
            let hat = laplace_sample(values, &grid, p).unwrap();
            let got = hat.transform.matrix()[[1, 1]].re;
            let want = 4.0 / (p + 4.0);
            assert!(
                (got - want).abs() < tol::LAPLACE_MATCH_TOL,
                "p = {p}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn n2_kernel_rejects_noncommuting_generators() {
        let hamiltonian_only = GkslSpec::new(pauli_x(), vec![])
            .unwrap()
            .generator(Picture::Heisenberg);
        let spec =
            MixtureSpec::new(vec![hamiltonian_only, dephasing(1.0)], vec![0.5, 0.5]).unwrap();
        let grid = TimeGrid::new(0.01, 16).unwrap();
        assert!(matches!(
            mixture_kernel_n2(&spec, &grid),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn n2_kernel_requires_two_components() {
        let spec = MixtureSpec::new(
            vec![dephasing(1.0), dephasing(2.0), dephasing(3.0)],
            vec![0.4, 0.3, 0.3],
        )
        .unwrap();
        let grid = TimeGrid::new(0.01, 16).unwrap();
        assert!(mixture_kernel_n2(&spec, &grid).is_err());
        assert!(mixture_kernel_n3_hat(&spec, 1.0).is_ok());
    }

    #[test]
    fn n3_hat_degenerate_weight_is_single_component() {
        // x = (1, 0, 0): all variance terms vanish and L̂_p = L₁ exactly.
        let spec = MixtureSpec::new(
            vec![dephasing(1.0), dephasing(2.0), dephasing(3.0)],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let l1 = dephasing(1.0);
        for p in [1.0, 2.0, 5.0] {
            let hat = mixture_kernel_n3_hat(&spec, p).unwrap();
            assert!(frob(&(hat.matrix() - l1.matrix())) < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn n3_hat_equal_generators_is_flat() {
        let l = dephasing(0.9);
        let spec =
            MixtureSpec::new(vec![l.clone(), l.clone(), l.clone()], vec![0.3, 0.3, 0.4]).unwrap();
        for p in [1.0, 2.0, 5.0] {
            let hat = mixture_kernel_n3_hat(&spec, p).unwrap();
            assert!(frob(&(hat.matrix() - l.matrix())) < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn n3_hat_matches_scalar_resolvent_arithmetic() {
        // Commuting dephasings diagonalize jointly: per coherence eigenvalue
        // the kernel must satisfy λ̂(p) = p − 1/Σ_j x_j(p−λ_j)^{−1}, the
        // scalar form of Â_p = (pI − L̂_p)⁻¹ for mixtures.
        let gammas = [0.5, 1.0, 1.5];
        let xs = [0.5, 0.3, 0.2];
        let spec = MixtureSpec::new(
            vec![
                dephasing(gammas[0]),
                dephasing(gammas[1]),
                dephasing(gammas[2]),
            ],
            xs.to_vec(),
        )
        .unwrap();
        for p in [1.0, 2.0, 5.0] {
            let hat = mixture_kernel_n3_hat(&spec, p).unwrap();
            let a_hat: f64 = gammas
                .iter()
                .zip(&xs)
                .map(|(&g, &x)| x / (p + 2.0 * g))
                .sum();
            let want = p - 1.0 / a_hat;
            let got = hat.matrix()[[1, 1]].re;
            assert!((got - want).abs() < 1e-10, "p = {p}: {got} vs {want}");
            // identity sector stays exactly Markov-free: λ̂ = 0
            assert!(hat.matrix()[[0, 0]].norm() < 1e-10);
        }
    }

    #[test]
    fn n3_hat_reports_pole() {
        // Three equal generators with eigenvalue +2 on the coherence sector
        // put a double pole of Ĉ_p = (p − L)² at p = 2.
        let mut m = Array2::<C64>::zeros((4, 4));
        m[[1, 1]] = C64::new(2.0, 0.0);
        m[[2, 2]] = C64::new(2.0, 0.0);
        let l = SuperOp::new(2, m).unwrap();
        let spec = MixtureSpec::new(
            vec![l.clone(), l.clone(), l.clone()],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        assert!(matches!(
            mixture_kernel_n3_hat(&spec, 2.0),
            Err(Error::PoleProximity { .. })
        ));
        assert!(mixture_kernel_n3_hat(&spec, 5.0).is_ok());
    }

    #[test]
    fn time_mixture_zero_weights_freeze_evolution() {
        let spec = TimeMixtureSpec::new(
            vec![dephasing(1.0), damped_qubit()],
            vec![MemoryFunction::Zero, MemoryFunction::Zero],
        )
        .unwrap();
        let grid = TimeGrid::from_horizon(0.01, 2.0).unwrap();
        let out = time_mixture_evolution(&spec, &grid).unwrap();
        for a_k in &out.trace.a {
            assert_eq!(a_k, &SuperOp::identity(2));
        }
        assert!(out.g.g.iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn time_mixture_of_identity_semigroup_is_identity() {
        // L = 0 ⟹ e^{sL} = I: the leftover weight and the integral both
        // multiply I, so A_t = I regardless of x.
        let spec = TimeMixtureSpec::new(
            vec![SuperOp::zero(2)],
            vec![MemoryFunction::erlang(1.0, 1).unwrap()],
        )
        .unwrap();
        let grid = TimeGrid::from_horizon(0.01, 3.0).unwrap();
        let out = time_mixture_evolution(&spec, &grid).unwrap();
        for a_k in &out.trace.a {
            assert!(frob(&(a_k.matrix() - SuperOp::identity(2).matrix())) < 1e-14);
        }
    }

    #[test]
    fn time_mixture_dephasing_is_cp_and_consistent() {
        // x₁(t) = γe^{−γt}, L₁ = dephasing(γ): CP and unital on the grid,
        // the returned G matches the numerically extracted one to O(h²),
        // and A = I + ∫G holds to quadrature accuracy.
        let spec = TimeMixtureSpec::new(
            vec![dephasing(1.0)],
            vec![MemoryFunction::erlang(1.0, 1).unwrap()],
        )
        .unwrap();
        let grid = TimeGrid::from_horizon(5e-3, 4.0).unwrap();
        let out = time_mixture_evolution(&spec, &grid).unwrap();
        assert!(out.trace.min_cp_defect() >= -tol::TRACE_CP_TOL);
        assert!(out.trace.max_unitality_defect() <= tol::TRACE_UNITALITY_TOL);

        let budget = tol::CONSISTENCY_CONST * grid.step() * grid.step();
        let ext = extract_g(&out.trace).unwrap();
        let mut worst = 0.0f64;
        for (num, closed) in ext.rep.g.iter().zip(&out.g.g) {
            worst = worst.max(frob(&(num.matrix() - closed.matrix())));
        }
        assert!(worst < budget, "G deviation {worst:.3e} vs {budget:.3e}");

        let eye = Array2::<C64>::eye(4);
        let mut recon = 0.0f64;
        for (a_k, c) in out
            .trace
            .a
            .iter()
            .zip(cumtrapz_ops(&out.g.g, grid.step()))
        {
            recon = recon.max(frob(&(&(&eye + &c) - a_k.matrix())));
        }
        assert!(recon < budget, "A vs I + ∫G deviation {recon:.3e}");
    }

    #[test]
    fn time_mixture_rejects_excess_mass() {
        // scale 2 drives ∫₀⁴ x to ≈ 1.96 > 1: the evolution would leave
        // the CP convex hull and must be rejected.
        let spec = TimeMixtureSpec::new(
            vec![dephasing(1.0)],
            vec![MemoryFunction::erlang_scaled(1.0, 1, 2.0).unwrap()],
        )
        .unwrap();
        let grid = TimeGrid::from_horizon(0.01, 4.0).unwrap();
        assert!(matches!(
            time_mixture_evolution(&spec, &grid),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn time_mixture_rejects_negative_weight_values() {
        let grid = TimeGrid::new(0.01, 8).unwrap();
        let mut vals = vec![0.1; 8];
        vals[3] = -0.05;
        let spec = TimeMixtureSpec::new(
            vec![dephasing(1.0)],
            vec![MemoryFunction::samples(0.01, vals).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            time_mixture_evolution(&spec, &grid),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dilation_without_interaction_reduces_to_system_semigroup() {
        // L_tot = L_sys ⊗ id: the environment decouples and A_t = e^{tL_sys}.
        let h_sys = pauli_x();
        let rate = 0.4;
        let total = GkslSpec::new(
            Operator::new(kron(h_sys.matrix(), &Array2::eye(2))).unwrap(),
            vec![(
                Operator::new(kron(pauli_z().matrix(), &Array2::eye(2))).unwrap(),
                rate,
            )],
        )
        .unwrap();
        let spec = DilationSpec::new(2, 2, total, None).unwrap();
        let grid = TimeGrid::from_horizon(0.01, 2.0).unwrap();
        let trace = dilation_reduced(&spec, &grid).unwrap();
        let l_sys = GkslSpec::new(h_sys, vec![(pauli_z(), rate)])
            .unwrap()
            .generator(Picture::Heisenberg);
        let mut worst = 0.0f64;
        for (k, a_k) in trace.a.iter().enumerate() {
            let exact = l_sys.expm(grid.time(k)).unwrap();
            worst = worst.max(frob(&(a_k.matrix() - exact.matrix())));
        }
        assert!(worst < 1e-9, "sup deviation {worst:.3e}");
    }

    #[test]
    fn dilation_exchange_model_is_cp_unital_with_memory() {
        // Qubit + qubit with excitation exchange H = g(σ₊⊗σ₋ + σ₋⊗σ₊) and
        // environment damping: the reduced dynamics is CP and unital on the
        // grid, its generator annihilates 1, and it is genuinely
        // non-Markovian (G_t ≠ G_0 e^{…} — checked via a non-semigroup
        // composition defect).
        let g = 1.0;
        let h_int = Operator::new(
            (kron(sigma_plus().matrix(), sigma_minus().matrix())
                + kron(sigma_minus().matrix(), sigma_plus().matrix()))
            .mapv(|z| z * g),
        )
        .unwrap();
        let damping = Operator::new(kron(&Array2::eye(2), sigma_minus().matrix())).unwrap();
        let total = GkslSpec::new(h_int, vec![(damping, 0.8)]).unwrap();
        let spec = DilationSpec::new(2, 2, total, None).unwrap();
        let grid = TimeGrid::from_horizon(0.01, 5.0).unwrap();
        let trace = dilation_reduced(&spec, &grid).unwrap();

        assert_eq!(trace.a[0], SuperOp::identity(2));
        assert!(trace.min_cp_defect() >= -tol::TRACE_CP_TOL, "{}", trace.min_cp_defect());
        assert!(trace.max_unitality_defect() <= tol::TRACE_UNITALITY_TOL);

        let ext = extract_g(&trace).unwrap();
        assert!(ext.max_identity_image <= 1e-6);

        // non-Markovianity: A_{2t} ≠ A_t∘A_t somewhere on the grid
        let mid = grid.len() / 2;
        let twice = trace.a[mid].compose(&trace.a[mid]).unwrap();
        let defect = frob(&(trace.a[2 * mid].matrix() - twice.matrix()));
        assert!(defect > 1e-3, "semigroup defect only {defect:.3e}");
    }

    #[test]
    fn dilation_spec_validation_rejects_bad_input() {
        let total4 = GkslSpec::new(Operator::zeros(4), vec![]).unwrap();
        // composite dimension limit
        let total18 = GkslSpec::new(Operator::zeros(18), vec![]).unwrap();
        assert!(DilationSpec::new(3, 6, total18, None).is_err());
        // generator dimension must equal d·k
        assert!(DilationSpec::new(2, 3, total4.clone(), None).is_err());
        // trace ≠ 1
        let bad_trace = Operator::new(Array2::eye(2).mapv(|z: C64| z * 0.7)).unwrap();
        assert!(DilationSpec::new(2, 2, total4.clone(), Some(bad_trace)).is_err());
        // not PSD (trace 1, eigenvalues 1.5 and −0.5)
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 0]] = C64::new(1.5, 0.0);
        m[[1, 1]] = C64::new(-0.5, 0.0);
        assert!(DilationSpec::new(2, 2, total4.clone(), Some(Operator::new(m).unwrap())).is_err());
        // not Hermitian
        let skew = Operator::new(ndarray::array![
            [C64::new(1.0, 0.0), C64::new(0.3, 0.2)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        ])
        .unwrap();
        assert!(DilationSpec::new(2, 2, total4, Some(skew)).is_err());
    }

    #[test]
    fn dilation_default_environment_state_is_ground_projector() {
        let total = GkslSpec::new(Operator::zeros(4), vec![]).unwrap();
        let spec = DilationSpec::new(2, 2, total, None).unwrap();
        assert_eq!(spec.omega(), &Operator::matrix_unit(2, 0, 0));
    }
}
