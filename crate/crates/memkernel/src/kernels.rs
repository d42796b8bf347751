// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Memory-kernel generator constructions and CP sufficiency checks.
//!
//! A kernel specification describes the right-hand side of the memory
//! master equation dA/dt = L_loc(A_t) + ∫₀^t K_{t−s}(A_s) ds. The memory
//! part K may be given three ways:
//!
//! - **scalar CP form** K_t = κ(t)(B − I) with κ a scalar kernel and B a CP
//!   unital map — the construction whose evolutions are CP whenever κ comes
//!   from an admissible memory function (module [`crate::memory`]);
//! - **split form** K_t = B_t − Z_t with the completely positive part B_t
//!   and normalization part Z_t identified separately, which is what the
//!   sufficiency checks consume;
//! - **plain samples**, for kernels with no identified structure.
//!
//! Two sufficient conditions for complete positivity of the solved
//! evolution are implemented as *reported* checks (never enforced — the
//! solver evolves any kernel, and falsified sufficient conditions are
//! scientifically useful data):
//!
//! - [`cp_sufficiency_check`]: B_t CP on the grid, the kernel annihilates
//!   the identity, and the normalization solution N_t (from Z_t) is CP.
//! - [`breuer_vacchini_check`]: the convolution ∫₀^t N_{t−s}B_s ds is CP on
//!   the grid. Ref: Breuer & Vacchini, Phys. Rev. E 79, 041147 (2009).

use ndarray::Array2;
use ndarray_linalg::Inverse;

use crate::algebra::{frob, SuperOp};
use crate::error::{Error, Result};
use crate::memory::ScalarKernel;
use crate::par;
use crate::tol;
use crate::volterra::{
    conv_trapz_ops, cumtrapz_ops, diff2_ops, solve_normalization, MemorySamples,
    NormalizationSolution, SampledSuperOp, TimeGrid,
};
use crate::C64;

// ---------------------------------------------------------------------------
// Kernel specifications
// ---------------------------------------------------------------------------

/// The memory (convolution) part of a kernel specification.
#[derive(Debug, Clone)]
pub enum MemoryPart {
    /// K_t = κ_reg(t)·(B − I), with κ's Dirac weight contributing
    /// local_weight·(B − I) to the instantaneous part automatically.
    ScalarCp {
        /// The scalar kernel κ (Dirac weight + regular samples).
        kappa: ScalarKernel,
        /// The CP unital map B.
        b: SuperOp,
    },
    /// K_t = B_t − Z_t with both parts tabulated.
    Split {
        /// The completely positive part B_t.
        b_t: SampledSuperOp,
        /// The normalization part Z_t.
        z_t: SampledSuperOp,
    },
    /// K_t tabulated directly, no identified structure.
    Sampled(SampledSuperOp),
    /// No memory integral.
    None,
}

/// A full kernel specification: system dimension, optional instantaneous
/// generator, and the memory part.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    dim: usize,
    local: Option<SuperOp>,
    memory: MemoryPart,
}

impl KernelSpec {
    /// Assemble and dimension-check a specification. No CP gating happens
    /// here — use [`make_scalar_cp_kernel`] for the guarded construction.
    pub fn new(dim: usize, local: Option<SuperOp>, memory: MemoryPart) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("kernel dimension must be ≥ 1".into()));
        }
        if let Some(l) = &local {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "KernelSpec local part",
                    expected: dim,
                    found: l.dim(),
                });
            }
        }
        match &memory {
            MemoryPart::ScalarCp { b, .. } => {
                if b.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "KernelSpec scalar-CP map",
                        expected: dim,
                        found: b.dim(),
                    });
                }
            }
            MemoryPart::Split { b_t, z_t } => {
                if b_t.dim() != dim || z_t.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "KernelSpec split parts",
                        expected: dim,
                        found: b_t.dim().min(z_t.dim()),
                    });
                }
                if !b_t.grid().step_matches(z_t.grid().step())
                    || b_t.grid().len() != z_t.grid().len()
                {
                    return Err(Error::GridMismatch {
                        context: "KernelSpec split grids",
                        expected: b_t.grid().len(),
                        found: z_t.grid().len(),
                    });
                }
            }
            MemoryPart::Sampled(values) => {
                if values.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "KernelSpec sampled memory",
                        expected: dim,
                        found: values.dim(),
                    });
                }
            }
            MemoryPart::None => {}
        }
        Ok(Self { dim, local, memory })
    }

    /// System dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The explicit instantaneous part, if any.
    pub fn local(&self) -> Option<&SuperOp> {
        self.local.as_ref()
    }

    /// The memory part.
    pub fn memory(&self) -> &MemoryPart {
        &self.memory
    }

    /// The instantaneous generator the solver actually uses: the explicit
    /// `local` plus, for scalar-CP kernels, the Dirac contribution
    /// local_weight·(B − I).
    pub fn effective_local(&self) -> Option<SuperOp> {
        let dirac = match &self.memory {
            MemoryPart::ScalarCp { kappa, b } if kappa.local_weight != 0.0 => {
                Some((b - &SuperOp::identity(self.dim)).scale(kappa.local_weight))
            }
            _ => None,
        };
        match (&self.local, dirac) {
            (Some(l), Some(d)) => Some(l + &d),
            (Some(l), None) => Some(l.clone()),
            (None, d) => d,
        }
    }

    /// Regular memory samples covering `grid`, in marcher form.
    pub(crate) fn memory_samples(&self, grid: &TimeGrid) -> Result<MemorySamples> {
        match &self.memory {
            MemoryPart::None => Ok(MemorySamples::None),
            MemoryPart::ScalarCp { kappa, b } => {
                if !grid.step_matches(kappa.h) {
                    return Err(Error::GridMismatch {
                        context: "scalar kernel step",
                        expected: (grid.step() * 1e12) as usize,
                        found: (kappa.h * 1e12) as usize,
                    });
                }
                if kappa.regular.len() < grid.len() {
                    return Err(Error::GridMismatch {
                        context: "scalar kernel length",
                        expected: grid.len(),
                        found: kappa.regular.len(),
                    });
                }
                let map = (b - &SuperOp::identity(self.dim)).matrix().clone();
                Ok(MemorySamples::Scalar {
                    weights: kappa.regular[..grid.len()].to_vec(),
                    map,
                })
            }
            MemoryPart::Split { b_t, z_t } => {
                let bs = b_t.prefix_for(grid)?;
                let zs = z_t.prefix_for(grid)?;
                Ok(MemorySamples::Dense(
                    bs.iter()
                        .zip(zs)
                        .map(|(b, z)| b.matrix() - z.matrix())
                        .collect(),
                ))
            }
            MemoryPart::Sampled(values) => Ok(MemorySamples::Dense(
                values
                    .prefix_for(grid)?
                    .iter()
                    .map(|v| v.matrix().clone())
                    .collect(),
            )),
        }
    }
}

/// Guarded constructor for the scalar CP form K_t = κ(t)(B − I): B must be
/// CP (Choi λ_min ≥ −τ, Hermiticity residual ≤ τ) and unital within
/// τ = 1e−8·d. Evolutions of the result are CP whenever κ comes from an
/// admissible memory function.
pub fn make_scalar_cp_kernel(kappa: &ScalarKernel, b: &SuperOp) -> Result<KernelSpec> {
    let d = b.dim();
    let t = tol::default_tol(d);
    let defect = b.cp_defect()?;
    if defect.lambda_min < -t || defect.herm_residual > t {
        return Err(Error::InvalidInput(format!(
            "map B is not CP: Choi λ_min = {:.3e}, Hermiticity residual = {:.3e}",
            defect.lambda_min, defect.herm_residual
        )));
    }
    let unitality = b.unitality_defect();
    if unitality > t {
        return Err(Error::InvalidInput(format!(
            "map B is not unital: ‖B(1) − 1‖ = {unitality:.3e}"
        )));
    }
    KernelSpec::new(
        d,
        None,
        MemoryPart::ScalarCp {
            kappa: kappa.clone(),
            b: b.clone(),
        },
    )
}

/// Build the generalized kernel K_t = Z_t ∘ (B − I) from a normalization
/// part Z and a CP unital map B, stored in split form (B_t = Z_t∘B,
/// Z_t = Z_t) so the sufficiency check can consume it directly.
///
/// Composition order: Z is applied *after* B − I, matching the operator
/// product Z_t(B − I); the two orders differ for non-commuting maps.
pub fn generalized_generator(
    z: &[SuperOp],
    grid: &TimeGrid,
    b: &SuperOp,
) -> Result<KernelSpec> {
    let d = b.dim();
    let t = tol::default_tol(d);
    let defect = b.cp_defect()?;
    if defect.lambda_min < -t || defect.herm_residual > t {
        return Err(Error::InvalidInput(format!(
            "map B is not CP: Choi λ_min = {:.3e}, Hermiticity residual = {:.3e}",
            defect.lambda_min, defect.herm_residual
        )));
    }
    if b.unitality_defect() > t {
        return Err(Error::InvalidInput(format!(
            "map B is not unital: ‖B(1) − 1‖ = {:.3e}",
            b.unitality_defect()
        )));
    }
    let b_t = z
        .iter()
        .map(|z_k| z_k.compose(b))
        .collect::<Result<Vec<_>>>()?;
    KernelSpec::new(
        d,
        None,
        MemoryPart::Split {
            b_t: SampledSuperOp::new(*grid, b_t)?,
            z_t: SampledSuperOp::new(*grid, z.to_vec())?,
        },
    )
}

// ---------------------------------------------------------------------------
// Z synthesis from F
// ---------------------------------------------------------------------------

/// Result of [`z_from_f`]: the regular part of Z, its Dirac content, and the
/// sup-norm residual of the defining first-kind equation.
#[derive(Debug, Clone)]
pub struct ZSynthesis {
    /// Regular samples Z_{t_k}.
    pub z: Vec<SuperOp>,
    /// Dirac content W = F_0 when ‖F_0‖ exceeds τ; the normalization
    /// equation then carries W as its local term.
    pub dirac: Option<SuperOp>,
    /// sup_t ‖N_t∘W + (N ∗ Z)_t − F_t‖_F with N = I − ∫F — pure quadrature
    /// error, O(h²) for smooth F.
    pub first_kind_residual: f64,
}

/// Solve ∫₀^t N_{t−s} Z_s ds = F_t for Z, where N_t = I − ∫₀^t F.
///
/// Mirrors the scalar synthesis: substituting Z = W·δ + Z_reg with W = F_0
/// and differentiating (N′ = −F, N_0 = I) gives the second-kind form
///
/// ```text
///     Z_reg(t) = F′(t) + F_t∘W + ∫₀^t F_{t−s} ∘ Z_reg(s) ds,
/// ```
///
/// which is marched with the trapezoid rule. The F_t∘W term is the
/// derivative of the Dirac contribution N_t∘W; it vanishes when F_0 = 0.
pub fn z_from_f(f: &[SuperOp], grid: &TimeGrid) -> Result<ZSynthesis> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch {
            context: "z_from_f",
            expected: grid.len(),
            found: f.len(),
        });
    }
    if f.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "Z synthesis needs ≥ 3 grid points for differentiation, got {}",
            f.len()
        )));
    }
    let dim = f[0].dim();
    if f.iter().any(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            context: "z_from_f",
            expected: dim,
            found: 0,
        });
    }
    let h = grid.step();
    let side = dim * dim;
    let n = grid.len();

    let w_mat = f[0].matrix().clone();
    let dirac = if frob(&w_mat) > tol::default_tol(dim) {
        log::warn!(
            "F_0 has norm {:.3e}; Z carries a Dirac component of that weight",
            frob(&w_mat)
        );
        Some(SuperOp::new(dim, w_mat.clone())?)
    } else {
        None
    };

    // Forcing F′ + F_t∘W.
    let fd = diff2_ops(f, h);
    let forcing: Vec<Array2<C64>> = fd
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            if dirac.is_some() {
                d + f[k].matrix().dot(&w_mat)
            } else {
                d
            }
        })
        .collect();

    // Trapezoid march for Z = forcing + F ∗ Z; the implicit endpoint
    // diagonal (I − (h/2)F_0)^{-1} is factored once.
    let eye = Array2::<C64>::eye(side);
    let diag = &eye - &w_mat.mapv(|z| z * (0.5 * h));
    let diag_inv = diag.inv().map_err(|_| {
        Error::StepSize(format!(
            "trapezoid diagonal I − (h/2)F_0 is numerically singular at h = {h:.3e}; \
             reduce the step size"
        ))
    })?;

    let mut z_mats: Vec<Array2<C64>> = Vec::with_capacity(n);
    z_mats.push(forcing[0].clone());
    for k in 1..n {
        let mut acc = (f[k].matrix().dot(&z_mats[0])).mapv(|z| z * 0.5);
        for j in 1..k {
            acc = acc + f[k - j].matrix().dot(&z_mats[j]);
        }
        let val = diag_inv.dot(&(&forcing[k] + &acc.mapv(|z| z * h)));
        if val.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical {
                step: k,
                what: "Z synthesis produced a non-finite value".into(),
            });
        }
        z_mats.push(val);
    }
    let z = z_mats
        .into_iter()
        .map(|m| SuperOp::new(dim, m))
        .collect::<Result<Vec<_>>>()?;

    // Residual of the first-kind equation with N = I − ∫F.
    let n_ops = cumtrapz_ops(f, h)
        .into_iter()
        .map(|c| SuperOp::new(dim, &eye - &c))
        .collect::<Result<Vec<_>>>()?;
    let conv = conv_trapz_ops(&n_ops, &z, h);
    let first_kind_residual = (0..n)
        .map(|k| {
            let mut r = conv[k].clone();
            if dirac.is_some() {
                r = r + n_ops[k].matrix().dot(&w_mat);
            }
            frob(&(&r - f[k].matrix()))
        })
        .fold(0.0, f64::max);

    Ok(ZSynthesis {
        z,
        dirac,
        first_kind_residual,
    })
}

// ---------------------------------------------------------------------------
// Sufficiency checks
// ---------------------------------------------------------------------------

/// Report of [`cp_sufficiency_check`]: raw measurements plus the verdict.
#[derive(Debug, Clone, Copy)]
pub struct SufficiencyReport {
    /// min over the grid (and Dirac part) of the Choi λ_min of B_t.
    pub min_b_cp_defect: f64,
    /// max anti-Hermitian Choi residual of B_t.
    pub max_b_herm_residual: f64,
    /// max over the grid of ‖K_t(1)‖_F (the kernel must annihilate 1).
    pub max_identity_image: f64,
    /// min over the grid of the Choi λ_min of the normalization solution N_t.
    pub min_n_cp_defect: f64,
    /// Gate for the two CP measurements.
    pub cp_tol: f64,
    /// Gate for the identity-annihilation measurement.
    pub identity_tol: f64,
    /// All three checks passed: the sufficient condition for CP evolution
    /// holds on this grid.
    pub sufficient: bool,
}

/// Check the sufficient condition for complete positivity of the solved
/// evolution: (a) B_t is CP on the grid, (b) the kernel annihilates the
/// identity, (c) the normalization solution N_t (solved here from Z_t) is
/// CP on the grid. The condition is sufficient, not necessary — a `false`
/// verdict does not certify a CP violation of the evolution itself.
///
/// The memory part must identify a B/Z split (scalar CP or split form), and
/// no extra explicit `local` part may be present (the split would not
/// account for it).
pub fn cp_sufficiency_check(spec: &KernelSpec, grid: &TimeGrid) -> Result<SufficiencyReport> {
    if spec.local().is_some() {
        return Err(Error::InvalidInput(
            "sufficiency check does not support an extra explicit local part; \
             fold it into the split"
                .into(),
        ));
    }
    let d = spec.dim();
    let eye = SuperOp::identity(d);
    // Resolve the split: regular samples plus optional Dirac pair.
    let (b_samples, z_samples, dirac): (Vec<SuperOp>, Vec<SuperOp>, Option<(SuperOp, SuperOp)>) =
        match spec.memory() {
            MemoryPart::ScalarCp { kappa, b } => {
                if !grid.step_matches(kappa.h) || kappa.regular.len() < grid.len() {
                    return Err(Error::GridMismatch {
                        context: "sufficiency check scalar kernel",
                        expected: grid.len(),
                        found: kappa.regular.len(),
                    });
                }
                let weights = &kappa.regular[..grid.len()];
                let bs = weights.iter().map(|&w| b.scale(w)).collect();
                let zs = weights.iter().map(|&w| eye.scale(w)).collect();
                let dirac = (kappa.local_weight != 0.0)
                    .then(|| (b.scale(kappa.local_weight), eye.scale(kappa.local_weight)));
                (bs, zs, dirac)
            }
            MemoryPart::Split { b_t, z_t } => (
                b_t.prefix_for(grid)?.to_vec(),
                z_t.prefix_for(grid)?.to_vec(),
                None,
            ),
            _ => {
                return Err(Error::InvalidInput(
                    "sufficiency check needs a scalar-CP or split memory part \
                     (no B/Z structure identified)"
                        .into(),
                ))
            }
        };

    // (a) CP of the B part, Dirac included.
    let mut b_all: Vec<&SuperOp> = b_samples.iter().collect();
    if let Some((wb, _)) = &dirac {
        b_all.push(wb);
    }
    let b_defects = par::map_indexed(b_all.len(), |k| b_all[k].cp_defect())
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let min_b_cp_defect = b_defects
        .iter()
        .map(|c| c.lambda_min)
        .fold(f64::INFINITY, f64::min);
    let max_b_herm_residual = b_defects
        .iter()
        .map(|c| c.herm_residual)
        .fold(0.0, f64::max);

    // (b) The kernel annihilates the identity: K_t = B_t − Z_t.
    let one = crate::algebra::Operator::identity(d);
    let mut max_identity_image = 0.0f64;
    for (b_k, z_k) in b_samples.iter().zip(&z_samples) {
        let img = (b_k - z_k).apply(&one)?;
        max_identity_image = max_identity_image.max(img.norm());
    }
    if let Some((wb, wz)) = &dirac {
        let img = (wb - wz).apply(&one)?;
        max_identity_image = max_identity_image.max(img.norm());
    }

    // (c) CP of the normalization solution.
    let sol = solve_normalization(&z_samples, dirac.as_ref().map(|(_, wz)| wz), grid)?;
    let n_defects = par::map_indexed(sol.n.len(), |k| sol.n[k].cp_defect())
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let min_n_cp_defect = n_defects
        .iter()
        .map(|c| c.lambda_min)
        .fold(f64::INFINITY, f64::min);

    let cp_tol = tol::TRACE_CP_TOL;
    let identity_tol = tol::TRACE_UNITALITY_TOL;
    let sufficient = min_b_cp_defect >= -cp_tol
        && max_b_herm_residual <= cp_tol
        && max_identity_image <= identity_tol
        && min_n_cp_defect >= -cp_tol;
    Ok(SufficiencyReport {
        min_b_cp_defect,
        max_b_herm_residual,
        max_identity_image,
        min_n_cp_defect,
        cp_tol,
        identity_tol,
        sufficient,
    })
}

/// Report of [`breuer_vacchini_check`].
#[derive(Debug, Clone, Copy)]
pub struct BvReport {
    /// min over the grid of the Choi λ_min of M_t = ∫₀^t N_{t−s}B_s ds.
    pub min_cp_defect: f64,
    /// Gate used for the verdict.
    pub cp_tol: f64,
    /// M_t is CP across the grid.
    pub pass: bool,
}

/// Check the memory-kernel CP condition of Breuer & Vacchini
/// (Phys. Rev. E 79, 041147 (2009)): the map M_t = ∫₀^t N_{t−s}B_s ds must
/// be CP for all t. `b_dirac` is the optional Dirac content of B_t, which
/// contributes N_t∘W_B to the convolution.
pub fn breuer_vacchini_check(
    n_sol: &NormalizationSolution,
    b_reg: &[SuperOp],
    b_dirac: Option<&SuperOp>,
) -> Result<BvReport> {
    if b_reg.len() != n_sol.n.len() {
        return Err(Error::GridMismatch {
            context: "breuer_vacchini_check",
            expected: n_sol.n.len(),
            found: b_reg.len(),
        });
    }
    let dim = n_sol.n[0].dim();
    if b_reg.iter().any(|v| v.dim() != dim) || b_dirac.is_some_and(|w| w.dim() != dim) {
        return Err(Error::DimensionMismatch {
            context: "breuer_vacchini_check",
            expected: dim,
            found: 0,
        });
    }
    let conv = conv_trapz_ops(&n_sol.n, b_reg, n_sol.grid.step());
    let m: Vec<SuperOp> = conv
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let mat = match b_dirac {
                Some(w) => c + n_sol.n[k].matrix().dot(w.matrix()),
                None => c,
            };
            SuperOp::new(dim, mat)
        })
        .collect::<Result<Vec<_>>>()?;
    let defects = par::map_indexed(m.len(), |k| m[k].cp_defect())
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let min_cp_defect = defects
        .iter()
        .map(|c| c.lambda_min)
        .fold(f64::INFINITY, f64::min);
    let cp_tol = tol::TRACE_CP_TOL;
    Ok(BvReport {
        min_cp_defect,
        cp_tol,
        pass: min_cp_defect >= -cp_tol,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
