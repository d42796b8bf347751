// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! JSON mirror types for the domain objects.
//!
//! Every domain type that crosses the process boundary (configs, dumps) has
//! a serde-facing mirror here. The mirrors hold plain nested arrays and
//! tagged enums; conversion into domain types goes through the validated
//! constructors, so no JSON path can bypass an invariant. Matrices are
//! encoded as separate real and imaginary row-major nested arrays, with the
//! imaginary part optional (omitted ⟹ real matrix).
//!
//! Schema overview (tagged by `"kind"` where a choice exists):
//!
//! ```json
//! {"re": [[0,1],[1,0]]}                                   // operator
//! {"dim": 2, "re": [[…4×4…]]}                             // superoperator
//! {"kind": "erlang", "gamma": 1.0, "order": 2}            // memory function
//! {"hamiltonian": {…}, "jumps": [{"operator": {…}, "rate": 0.5}]}
//! {"kind": "gksl", "gksl": {…}, "picture": "heisenberg"}  // generator
//! {"dim": 2, "local": null, "memory": {"kind": "scalar_cp", "f": {…}, "b": {…}}}
//! ```

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::algebra::{GkslSpec, Operator, Picture, SuperOp};
use crate::error::{Error, Result};
use crate::families::{DilationSpec, MixtureSpec, TimeMixtureSpec};
use crate::kernels::{make_scalar_cp_kernel, KernelSpec, MemoryPart};
use crate::memory::{check_admissible, kappa_from_f, MemoryFunction};
use crate::volterra::{SampledSuperOp, TimeGrid};
use crate::C64;

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

fn matrix_from_parts(
    context: &'static str,
    rows: usize,
    cols: usize,
    re: &[Vec<f64>],
    im: Option<&Vec<Vec<f64>>>,
) -> Result<Array2<C64>> {
    let shape_ok = |part: &[Vec<f64>]| part.len() == rows && part.iter().all(|r| r.len() == cols);
    if !shape_ok(re) || im.is_some_and(|m| !shape_ok(m)) {
        return Err(Error::InvalidInput(format!(
            "{context}: matrix parts must be {rows}×{cols} nested arrays"
        )));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| {
        C64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

fn matrix_to_parts(m: &Array2<C64>) -> (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    let re = m.rows().into_iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
    let any_im = m.iter().any(|z| z.im != 0.0);
    let im = any_im
        .then(|| m.rows().into_iter().map(|r| r.iter().map(|z| z.im).collect()).collect());
    (re, im)
}

/// JSON form of an operator a ∈ M_d: `{"re": [[…]], "im": [[…]]}` with the
/// imaginary part optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    /// Row-major real part, d×d.
    pub re: Vec<Vec<f64>>,
    /// Row-major imaginary part, d×d; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl OperatorJson {
    /// Convert into a validated [`Operator`].
    pub fn to_operator(&self) -> Result<Operator> {
        let d = self.re.len();
        Operator::new(matrix_from_parts("operator", d, d, &self.re, self.im.as_ref())?)
    }

    /// Mirror of a domain operator.
    pub fn from_operator(op: &Operator) -> Self {
        let (re, im) = matrix_to_parts(op.matrix());
        Self { re, im }
    }
}

/// JSON form of a superoperator on M_d: `{"dim": d, "re": [[…d²×d²…]]}`.
/// The explicit `dim` disambiguates d from d² and is validated against the
/// matrix shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperOpJson {
    /// System dimension d (the matrix is d²×d²).
    pub dim: usize,
    /// Row-major real part.
    pub re: Vec<Vec<f64>>,
    /// Row-major imaginary part; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl SuperOpJson {
    /// Convert into a validated [`SuperOp`].
    pub fn to_superop(&self) -> Result<SuperOp> {
        let side = self.dim * self.dim;
        SuperOp::new(
            self.dim,
            matrix_from_parts("superoperator", side, side, &self.re, self.im.as_ref())?,
        )
    }

    /// Mirror of a domain superoperator.
    pub fn from_superop(s: &SuperOp) -> Self {
        let (re, im) = matrix_to_parts(s.matrix());
        Self {
            dim: s.dim(),
            re,
            im,
        }
    }
}

// ---------------------------------------------------------------------------
// Memory functions and GKSL generators
// ---------------------------------------------------------------------------

/// JSON form of a memory function.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MemoryFunctionJson {
    /// Erlang density: `{"kind": "erlang", "gamma": γ, "order": m, "scale": c}`
    /// with `scale` optional (default 1).
    Erlang {
        /// Rate γ > 0.
        gamma: f64,
        /// Shape order m ≥ 1.
        order: u32,
        /// Total mass ∫₀^∞ f = scale (admissible iff ≤ 1); default 1.
        #[serde(default = "one")]
        scale: f64,
    },
    /// Tabulated samples on a uniform grid: `{"kind": "samples", "h": …,
    /// "values": […]}`.
    Samples {
        /// Sample step.
        h: f64,
        /// f(k·h), k = 0, 1, ….
        values: Vec<f64>,
    },
    /// The zero function.
    Zero,
}

fn one() -> f64 {
    1.0
}

impl MemoryFunctionJson {
    /// Convert into a validated [`MemoryFunction`].
    pub fn to_memory_function(&self) -> Result<MemoryFunction> {
        match self {
            Self::Erlang {
                gamma,
                order,
                scale,
            } => MemoryFunction::erlang_scaled(*gamma, *order, *scale),
            Self::Samples { h, values } => MemoryFunction::samples(*h, values.clone()),
            Self::Zero => Ok(MemoryFunction::Zero),
        }
    }
}

/// JSON form of one jump operator with its rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpJson {
    /// The jump operator V.
    pub operator: OperatorJson,
    /// The nonnegative rate γ.
    pub rate: f64,
}

/// JSON form of a GKSL generator specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkslJson {
    /// Hermitian Hamiltonian H.
    pub hamiltonian: OperatorJson,
    /// Jump operators with rates; may be empty (pure Hamiltonian flow).
    #[serde(default)]
    pub jumps: Vec<JumpJson>,
}

impl GkslJson {
    /// Convert into a validated [`GkslSpec`].
    pub fn to_spec(&self) -> Result<GkslSpec> {
        let h = self.hamiltonian.to_operator()?;
        let jumps = self
            .jumps
            .iter()
            .map(|j| Ok((j.operator.to_operator()?, j.rate)))
            .collect::<Result<Vec<_>>>()?;
        GkslSpec::new(h, jumps)
    }
}

/// Picture selector for JSON-specified GKSL generators.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PictureJson {
    /// Evolve observables (generators annihilate the identity).
    #[default]
    Heisenberg,
    /// Evolve states (generators are trace-free in the dual sense).
    Schroedinger,
}

impl From<PictureJson> for Picture {
    fn from(p: PictureJson) -> Self {
        match p {
            PictureJson::Heisenberg => Picture::Heisenberg,
            PictureJson::Schroedinger => Picture::Schroedinger,
        }
    }
}

/// JSON form of a superoperator-valued generator: either a GKSL
/// specification rendered in a chosen picture, or a raw superoperator
/// matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorJson {
    /// `{"kind": "gksl", "gksl": {…}, "picture": "heisenberg"}` — the
    /// picture is optional and defaults to Heisenberg.
    Gksl {
        /// The GKSL data.
        gksl: GkslJson,
        /// Which picture to render the generator in.
        #[serde(default)]
        picture: PictureJson,
    },
    /// `{"kind": "superop", "superop": {…}}` — a raw matrix, for
    /// generators outside the GKSL form.
    Superop {
        /// The raw superoperator.
        superop: SuperOpJson,
    },
}

impl GeneratorJson {
    /// Convert into a superoperator.
    pub fn to_superop(&self) -> Result<SuperOp> {
        match self {
            Self::Gksl { gksl, picture } => Ok(gksl.to_spec()?.generator((*picture).into())),
            Self::Superop { superop } => superop.to_superop(),
        }
    }
}

// ---------------------------------------------------------------------------
// Kernel specifications
// ---------------------------------------------------------------------------

/// JSON form of the memory part of a kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MemoryPartJson {
    /// The CP-guaranteed construction K_t = κ(t)(B − I): the scalar kernel
    /// κ is synthesized from the memory function `f` on the run grid, and
    /// `f` must pass admissibility (∫f ≤ 1, f ≥ 0) — this is the JSON
    /// route to evolutions that are CP by construction.
    ScalarCp {
        /// The memory function generating κ.
        f: MemoryFunctionJson,
        /// The CP unital map B.
        b: SuperOpJson,
    },
    /// K_t = B_t − Z_t with both parts tabulated on a uniform grid.
    Split {
        /// Tabulation step.
        h: f64,
        /// B_{t_k} samples.
        b_t: Vec<SuperOpJson>,
        /// Z_{t_k} samples.
        z_t: Vec<SuperOpJson>,
    },
    /// K_t tabulated directly.
    Sampled {
        /// Tabulation step.
        h: f64,
        /// K_{t_k} samples.
        values: Vec<SuperOpJson>,
    },
    /// No memory integral.
    None,
}

/// JSON form of a kernel specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpecJson {
    /// System dimension d.
    pub dim: usize,
    /// Optional instantaneous generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<GeneratorJson>,
    /// The memory part.
    pub memory: MemoryPartJson,
}

fn sampled_from_json(h: f64, values: &[SuperOpJson]) -> Result<SampledSuperOp> {
    let grid = TimeGrid::new(h, values.len())?;
    let ops = values
        .iter()
        .map(|v| v.to_superop())
        .collect::<Result<Vec<_>>>()?;
    SampledSuperOp::new(grid, ops)
}

impl KernelSpecJson {
    /// Resolve into a validated [`KernelSpec`] for a run on `grid`.
    ///
    /// The grid is needed because the scalar-CP form synthesizes κ from f
    /// on the run grid; that path also enforces admissibility of f and
    /// CP/unitality of B, so a kernel obtained from this route carries the
    /// CP guarantee.
    pub fn resolve(&self, grid: &TimeGrid) -> Result<KernelSpec> {
        let local = self.local.as_ref().map(|l| l.to_superop()).transpose()?;
        match &self.memory {
            MemoryPartJson::ScalarCp { f, b } => {
                if local.is_some() {
                    return Err(Error::InvalidInput(
                        "the scalar-CP kernel form owns the instantaneous part (the Dirac \
                         weight of κ); drop the explicit local generator"
                            .into(),
                    ));
                }
                let f = f.to_memory_function()?;
                let report = check_admissible(&f, grid)?;
                if !report.admissible {
                    return Err(Error::InvalidInput(format!(
                        "memory function is not admissible (min value {:.3e}, mass \
                         {:.12}); the CP guarantee needs f ≥ 0 with ∫f ≤ 1",
                        report.min_value,
                        report.total_mass.unwrap_or(report.grid_mass)
                    )));
                }
                let synthesis = kappa_from_f(&f, grid)?;
                make_scalar_cp_kernel(&synthesis.kernel, &b.to_superop()?)
            }
            MemoryPartJson::Split { h, b_t, z_t } => KernelSpec::new(
                self.dim,
                local,
                MemoryPart::Split {
                    b_t: sampled_from_json(*h, b_t)?,
                    z_t: sampled_from_json(*h, z_t)?,
                },
            ),
            MemoryPartJson::Sampled { h, values } => KernelSpec::new(
                self.dim,
                local,
                MemoryPart::Sampled(sampled_from_json(*h, values)?),
            ),
            MemoryPartJson::None => KernelSpec::new(self.dim, local, MemoryPart::None),
        }
    }
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// JSON form of a static mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureJson {
    /// Convex weights, summing to 1.
    pub weights: Vec<f64>,
    /// Component generators, one per weight.
    pub generators: Vec<GeneratorJson>,
}

impl MixtureJson {
    /// Convert into a validated [`MixtureSpec`].
    pub fn to_spec(&self) -> Result<MixtureSpec> {
        let generators = self
            .generators
            .iter()
            .map(|g| g.to_superop())
            .collect::<Result<Vec<_>>>()?;
        MixtureSpec::new(generators, self.weights.clone())
    }
}

/// JSON form of a time-dependent mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeMixtureJson {
    /// Weight functions x_j(t), one per generator.
    pub weights: Vec<MemoryFunctionJson>,
    /// Component generators.
    pub generators: Vec<GeneratorJson>,
}

impl TimeMixtureJson {
    /// Convert into a validated [`TimeMixtureSpec`].
    pub fn to_spec(&self) -> Result<TimeMixtureSpec> {
        let generators = self
            .generators
            .iter()
            .map(|g| g.to_superop())
            .collect::<Result<Vec<_>>>()?;
        let weights = self
            .weights
            .iter()
            .map(|w| w.to_memory_function())
            .collect::<Result<Vec<_>>>()?;
        TimeMixtureSpec::new(generators, weights)
    }
}

/// JSON form of a system–environment dilation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationJson {
    /// System dimension d.
    pub sys_dim: usize,
    /// Environment dimension k.
    pub env_dim: usize,
    /// GKSL generator on the composite d·k space.
    pub total: GkslJson,
    /// Environment state ω; omitted selects the ground-state projector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OperatorJson>,
}

impl DilationJson {
    /// Convert into a validated [`DilationSpec`].
    pub fn to_spec(&self) -> Result<DilationSpec> {
        let omega = self.omega.as_ref().map(|w| w.to_operator()).transpose()?;
        DilationSpec::new(self.sys_dim, self.env_dim, self.total.to_spec()?, omega)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
