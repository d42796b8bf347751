// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense operator and superoperator algebra on M_d.
//!
//! Conventions (fixed here, inherited by every other module):
//!
//! - Vectorization is **column-stacking**: vec(a)[i + j·d] = a[i, j], so that
//!   vec(X a Y) = (Yᵀ ⊗ X) vec(a).
//! - The Hilbert–Schmidt inner product is ⟨a, b⟩ = tr(a†b) = vec(a)†vec(b);
//!   consequently the dual (adjoint) of a superoperator is exactly the
//!   conjugate transpose of its matrix.
//! - The Choi matrix is C(S) = Σ_{ij} E_ij ⊗ S(E_ij) with E_ij the matrix
//!   units; S is completely positive iff C(S) is positive semidefinite
//!   (Choi (1975), Linear Algebra Appl. 10, 285).
//! - Norms are Frobenius unless stated otherwise.
//!
//! Complete positivity is certified spectrally: the Choi matrix is
//! Hermitized as (C + C†)/2 before the eigensolve, and the anti-Hermitian
//! residual ‖C − C†‖_F is reported separately so that "not
//! Hermiticity-preserving" is distinguishable from "not CP".

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{EigValsh, Inverse, OperationNorm, UPLO};

use crate::error::{Error, Result};
use crate::tol;
use crate::C64;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// A d×d complex matrix, element of M_d. Hermiticity and positivity are
/// checkable predicates, not invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
}

impl Operator {
    /// Wrap a square matrix. Rejects non-square or empty input.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let (r, c) = mat.dim();
        if r == 0 || r != c {
            return Err(Error::InvalidInput(format!(
                "operator matrix must be square and nonempty, got {r}×{c}"
            )));
        }
        Ok(Self { mat })
    }

    /// The zero operator on M_d.
    pub fn zeros(d: usize) -> Self {
        Self {
            mat: Array2::zeros((d, d)),
        }
    }

    /// The identity 1 ∈ M_d.
    pub fn identity(d: usize) -> Self {
        Self {
            mat: Array2::eye(d),
        }
    }

    /// Matrix unit E_ij ∈ M_d (1 at row i, column j).
    pub fn matrix_unit(d: usize, i: usize, j: usize) -> Self {
        let mut mat = Array2::zeros((d, d));
        mat[[i, j]] = ONE;
        Self { mat }
    }

    /// Dimension d.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Underlying matrix.
    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    /// Conjugate transpose a†.
    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.t().mapv(|z| z.conj()),
        }
    }

    /// Frobenius norm ‖a‖_F.
    pub fn norm(&self) -> f64 {
        frob(&self.mat)
    }

    /// Hermiticity residual ‖a − a†‖_F.
    pub fn hermiticity_residual(&self) -> f64 {
        frob(&(&self.mat - &self.dagger().mat))
    }

    /// tr(a).
    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }
}

/// Pauli σ_x.
pub fn pauli_x() -> Operator {
    Operator::new(ndarray::array![[ZERO, ONE], [ONE, ZERO]]).expect("2×2")
}

/// Pauli σ_y.
pub fn pauli_y() -> Operator {
    let i = C64::new(0.0, 1.0);
    Operator::new(ndarray::array![[ZERO, -i], [i, ZERO]]).expect("2×2")
}

/// Pauli σ_z.
pub fn pauli_z() -> Operator {
    Operator::new(ndarray::array![[ONE, ZERO], [ZERO, -ONE]]).expect("2×2")
}

/// Raising operator σ₊ = |1⟩⟨0|.
pub fn sigma_plus() -> Operator {
    Operator::matrix_unit(2, 1, 0)
}

/// Lowering operator σ₋ = |0⟩⟨1| (decays the excited state |1⟩ into |0⟩).
pub fn sigma_minus() -> Operator {
    Operator::matrix_unit(2, 0, 1)
}

// ---------------------------------------------------------------------------
// Vectorization
// ---------------------------------------------------------------------------

/// Column-stacking index: entry (i, j) of a d×d matrix lands at i + j·d.
#[inline]
pub fn vec_index(d: usize, i: usize, j: usize) -> usize {
    i + j * d
}

/// vec(a) under column stacking.
pub fn vectorize(a: &Array2<C64>) -> Array1<C64> {
    let d = a.nrows();
    Array1::from_shape_fn(d * d, |k| a[[k % d, k / d]])
}

/// Inverse of [`vectorize`]: fold a length-d² vector back into a d×d matrix.
pub fn devectorize(v: &Array1<C64>) -> Result<Array2<C64>> {
    let d2 = v.len();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 {
        return Err(Error::InvalidInput(format!(
            "vector length {d2} is not a perfect square"
        )));
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| v[i + j * d]))
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij != ZERO {
                let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
                block.assign(&b.mapv(|x| aij * x));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Superoperators
// ---------------------------------------------------------------------------

/// A linear map on M_d, stored as the d²×d² matrix acting on column-stacked
/// vectorizations: vec(S(a)) = matrix · vec(a).
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    dim: usize,
    mat: Array2<C64>,
}

impl SuperOp {
    /// Wrap a d²×d² matrix acting on vec(M_d).
    pub fn new(dim: usize, mat: Array2<C64>) -> Result<Self> {
        let d2 = dim * dim;
        if dim == 0 || mat.dim() != (d2, d2) {
            return Err(Error::DimensionMismatch {
                context: "SuperOp::new",
                expected: d2,
                found: mat.nrows(),
            });
        }
        Ok(Self { dim, mat })
    }

    /// The identity map I on M_d.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mat: Array2::eye(dim * dim),
        }
    }

    /// The zero map on M_d.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            mat: Array2::zeros((dim * dim, dim * dim)),
        }
    }

    /// The map a ↦ X a Y, whose matrix is Yᵀ ⊗ X under column stacking.
    pub fn sandwich(x: &Operator, y: &Operator) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                context: "SuperOp::sandwich",
                expected: x.dim(),
                found: y.dim(),
            });
        }
        let yt = y.matrix().t().to_owned();
        Ok(Self {
            dim: x.dim(),
            mat: kron(&yt, x.matrix()),
        })
    }

    /// Conjugation a ↦ u a u† (a unitary channel when u is unitary).
    pub fn conjugation(u: &Operator) -> Result<Self> {
        Self::sandwich(u, &u.dagger())
    }

    /// The transpose map a ↦ aᵀ (positive but not completely positive).
    pub fn transpose_map(dim: usize) -> Self {
        let d2 = dim * dim;
        let mut mat = Array2::zeros((d2, d2));
        for i in 0..dim {
            for j in 0..dim {
                mat[[vec_index(dim, j, i), vec_index(dim, i, j)]] = ONE;
            }
        }
        Self { dim, mat }
    }

    /// The map a ↦ tr(a)·1/d (the completely depolarizing channel).
    pub fn trace_map(dim: usize) -> Self {
        let d2 = dim * dim;
        let inv_d = C64::new(1.0 / dim as f64, 0.0);
        let mut mat = Array2::zeros((d2, d2));
        // tr(E_ij) = δ_ij, so only columns vec(E_ii) are hit, each mapping
        // to vec(1/d) = Σ_r e_{r + r·d} / d.
        for i in 0..dim {
            for r in 0..dim {
                mat[[vec_index(dim, r, r), vec_index(dim, i, i)]] = inv_d;
            }
        }
        Self { dim, mat }
    }

    /// System dimension d (the matrix is d²×d²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The d²×d² matrix.
    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    /// Apply the map: S(a) = devec(matrix · vec(a)).
    pub fn apply(&self, a: &Operator) -> Result<Operator> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "SuperOp::apply",
                expected: self.dim,
                found: a.dim(),
            });
        }
        let v = self.mat.dot(&vectorize(a.matrix()));
        Operator::new(devectorize(&v)?)
    }

    /// Composition (self ∘ other): apply `other` first, then `self`.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: "SuperOp::compose",
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(SuperOp {
            dim: self.dim,
            mat: self.mat.dot(&other.mat),
        })
    }

    /// Scale by a real factor.
    pub fn scale(&self, c: f64) -> SuperOp {
        SuperOp {
            dim: self.dim,
            mat: self.mat.mapv(|z| z * c),
        }
    }

    /// Hilbert–Schmidt dual S*, defined by tr((S*a)†b) = tr(a†(Sb)).
    ///
    /// With column stacking and ⟨a, b⟩ = vec(a)†vec(b), the defining relation
    /// reads (M* v)†w = v†(M w) for all v, w, i.e. M* = M† exactly — no basis
    /// bookkeeping survives. Validated against the defining relation on
    /// random operator pairs in the unit tests.
    pub fn dual(&self) -> SuperOp {
        SuperOp {
            dim: self.dim,
            mat: self.mat.t().mapv(|z| z.conj()),
        }
    }

    /// Choi matrix C(S) = Σ_{ij} E_ij ⊗ S(E_ij).
    ///
    /// Block (i, j) of C (each block d×d) equals S(E_ij), which is the
    /// devectorized column i + j·d of the superoperator matrix.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let mut mat = Array2::zeros((d * d, d * d));
        for i in 0..d {
            for j in 0..d {
                let col = self.mat.column(vec_index(d, i, j));
                for r in 0..d {
                    for c in 0..d {
                        mat[[i * d + r, j * d + c]] = col[vec_index(d, r, c)];
                    }
                }
            }
        }
        ChoiMatrix { dim: d, mat }
    }

    /// Frobenius norm of the superoperator matrix.
    pub fn norm(&self) -> f64 {
        frob(&self.mat)
    }

    /// ‖S(1) − 1‖_F: zero iff the map is unital.
    pub fn unitality_defect(&self) -> f64 {
        let one = Operator::identity(self.dim);
        let img = self.apply(&one).expect("dimensions agree by construction");
        frob(&(&img.matrix().view() - &one.matrix().view()))
    }

    /// ‖S(1)‖_F: the companion check for *generators*, which must annihilate
    /// the identity (L(1) = 0) for the evolution to stay unital.
    pub fn identity_image_norm(&self) -> f64 {
        let img = self
            .apply(&Operator::identity(self.dim))
            .expect("dimensions agree by construction");
        img.norm()
    }

    /// CP diagnostic: λ_min of the Hermitized Choi matrix, plus the
    /// anti-Hermitian residual of the Choi matrix as a side diagnostic.
    ///
    /// S is certified CP at tolerance τ iff `lambda_min ≥ −τ` and
    /// `herm_residual ≤ τ`.
    pub fn cp_defect(&self) -> Result<CpDefect> {
        self.choi().cp_defect()
    }

    /// Matrix exponential e^{tS} (see [`expm_dense`]).
    pub fn expm(&self, t: f64) -> Result<SuperOp> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite time {t} in expm")));
        }
        let scaled = self.mat.mapv(|z| z * t);
        Ok(SuperOp {
            dim: self.dim,
            mat: expm_dense(&scaled)?,
        })
    }
}

impl std::ops::Add for &SuperOp {
    type Output = SuperOp;
    fn add(self, rhs: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions must agree");
        SuperOp {
            dim: self.dim,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &SuperOp {
    type Output = SuperOp;
    fn sub(self, rhs: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions must agree");
        SuperOp {
            dim: self.dim,
            mat: &self.mat - &rhs.mat,
        }
    }
}

// ---------------------------------------------------------------------------
// Choi matrices and CP certification
// ---------------------------------------------------------------------------

/// The Choi matrix of a superoperator: C(S) = Σ_{ij} E_ij ⊗ S(E_ij).
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim: usize,
    mat: Array2<C64>,
}

/// Result of a spectral CP check.
#[derive(Debug, Clone, Copy)]
pub struct CpDefect {
    /// Minimum eigenvalue of the Hermitized Choi matrix (C + C†)/2.
    /// Nonnegative (within tolerance) iff the map is CP.
    pub lambda_min: f64,
    /// Anti-Hermitian residual ‖C − C†‖_F; nonzero means the map is not
    /// Hermiticity-preserving, which is reported separately from CP failure.
    pub herm_residual: f64,
}

impl ChoiMatrix {
    /// System dimension d (the matrix is d²×d²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The d²×d² Choi matrix.
    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    /// Rebuild the superoperator: column i + j·d of the matrix is
    /// vec(block (i, j) of C).
    pub fn to_superop(&self) -> SuperOp {
        let d = self.dim;
        let mut mat = Array2::zeros((d * d, d * d));
        for i in 0..d {
            for j in 0..d {
                for r in 0..d {
                    for c in 0..d {
                        mat[[vec_index(d, r, c), vec_index(d, i, j)]] =
                            self.mat[[i * d + r, j * d + c]];
                    }
                }
            }
        }
        SuperOp { dim: d, mat }
    }

    /// λ_min of (C + C†)/2 together with ‖C − C†‖_F. See [`SuperOp::cp_defect`].
    pub fn cp_defect(&self) -> Result<CpDefect> {
        let herm = self.mat.t().mapv(|z| z.conj());
        let herm_residual = frob(&(&self.mat - &herm));
        let sym = (&self.mat + &herm).mapv(|z| z * 0.5);
        let evals = sym
            .eigvalsh(UPLO::Lower)
            .map_err(Error::linalg("Choi eigensolve"))?;
        let lambda_min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(CpDefect {
            lambda_min,
            herm_residual,
        })
    }
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Result<Array1<f64>> {
    let herm = (m + &m.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
    herm.eigvalsh(UPLO::Lower)
        .map_err(Error::linalg("Hermitian eigensolve"))
}

/// Smallest singular value of a square complex matrix, via the Hermitian
/// eigenproblem of M†M (σ_min² = λ_min(M†M)). Squaring halves the digits
/// near σ_min ≈ √ε, which is ample for pole-proximity gates at 1e−10.
pub(crate) fn smallest_singular_value(m: &Array2<C64>) -> Result<f64> {
    let mtm = m.t().mapv(|z| z.conj()).dot(m);
    let evals = mtm
        .eigvalsh(UPLO::Lower)
        .map_err(Error::linalg("singular-value eigensolve"))?;
    Ok(evals.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0).sqrt())
}

/// Frobenius norm of a complex matrix.
pub fn frob(m: &impl FrobeniusSource) -> f64 {
    m.sum_norm_sqr().sqrt()
}

/// Helper trait so [`frob`] accepts owned arrays and views alike.
pub trait FrobeniusSource {
    fn sum_norm_sqr(&self) -> f64;
}

impl FrobeniusSource for Array2<C64> {
    fn sum_norm_sqr(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl<'a> FrobeniusSource for ndarray::ArrayView2<'a, C64> {
    fn sum_norm_sqr(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }
}

// ---------------------------------------------------------------------------
// GKSL generators
// ---------------------------------------------------------------------------

/// Which picture a generator acts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    /// Evolves observables; the generator annihilates the identity.
    Heisenberg,
    /// Evolves states; the generator is the Hilbert–Schmidt dual of the
    /// Heisenberg one and is trace-annihilating.
    Schroedinger,
}

/// Specification of a GKSL (Lindblad) generator: a Hermitian Hamiltonian and
/// jump operators with nonnegative rates (both in units of inverse time).
///
/// Ref: Gorini, Kossakowski, Sudarshan (1976), J. Math. Phys. 17, 821;
/// Lindblad (1976), Commun. Math. Phys. 48, 119.
#[derive(Debug, Clone)]
pub struct GkslSpec {
    hamiltonian: Operator,
    jumps: Vec<(Operator, f64)>,
}

impl GkslSpec {
    /// Validate and build. The Hamiltonian must be Hermitian within
    /// τ(d) = 1e−8·d relative to its norm, and all rates nonnegative.
    pub fn new(hamiltonian: Operator, jumps: Vec<(Operator, f64)>) -> Result<Self> {
        let d = hamiltonian.dim();
        let scale = hamiltonian.norm().max(1.0);
        if hamiltonian.hermiticity_residual() > tol::default_tol(d) * scale {
            return Err(Error::InvalidInput(format!(
                "Hamiltonian is not Hermitian: residual {:.3e}",
                hamiltonian.hermiticity_residual()
            )));
        }
        for (v, rate) in &jumps {
            if v.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "GkslSpec jump operator",
                    expected: d,
                    found: v.dim(),
                });
            }
            if !rate.is_finite() || *rate < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "jump rate must be finite and ≥ 0, got {rate}"
                )));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    /// System dimension.
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// The Hamiltonian part.
    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    /// The jump operators with their rates.
    pub fn jumps(&self) -> &[(Operator, f64)] {
        &self.jumps
    }

    /// Build the generator superoperator.
    ///
    /// Heisenberg form: L(a) = i[H, a] + Σ_k γ_k (V_k† a V_k − ½{V_k†V_k, a});
    /// the Schrödinger form is its Hilbert–Schmidt dual. L(1) = 0 holds in
    /// the Heisenberg picture to machine precision.
    pub fn generator(&self, picture: Picture) -> SuperOp {
        let d = self.dim();
        let i = C64::new(0.0, 1.0);
        let h = self.hamiltonian.matrix();
        let eye = Array2::<C64>::eye(d);

        // i[H, a] = i (1 ⊗ H − Hᵀ ⊗ 1) vec(a)  (left mult: 1ᵀ⊗H; right: Hᵀ⊗1)
        let mut mat = kron(&eye, h);
        mat -= &kron(&h.t().to_owned(), &eye);
        mat.mapv_inplace(|z| z * i);

        for (v, rate) in &self.jumps {
            let g = C64::new(*rate, 0.0);
            let vd = v.dagger();
            // V† a V: sandwich (V†, V) → Vᵀ ⊗ V†
            let gain = kron(&v.matrix().t().to_owned(), vd.matrix());
            // ½{V†V, a}: ½ (1 ⊗ V†V + (V†V)ᵀ ⊗ 1)
            let vdv = vd.matrix().dot(v.matrix());
            let half = C64::new(0.5, 0.0);
            let anti = (kron(&eye, &vdv) + kron(&vdv.t().to_owned(), &eye)).mapv(|z| z * half);
            mat += &(gain - anti).mapv(|z| z * g);
        }

        let heisenberg = SuperOp { dim: d, mat };
        match picture {
            Picture::Heisenberg => heisenberg,
            Picture::Schroedinger => heisenberg.dual(),
        }
    }
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// Exponential-of-matrix via Padé order-13 approximation with scaling and
/// squaring, after Higham (2005), SIAM J. Matrix Anal. Appl. 26, 1179.
/// Relative accuracy is at machine-precision level for well-scaled inputs;
/// the semigroup property is validated to 1e−9 in the property tests.
pub fn expm_dense(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.dim() != (n, n) {
        return Err(Error::InvalidInput("expm needs a square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical {
            step: 0,
            what: "non-finite entries in expm input".into(),
        });
    }

    // θ_m thresholds for the 1-norm (Higham 2005, Table 2.3).
    const THETA_3: f64 = 1.495_585_217_958_292e-2;
    const THETA_5: f64 = 2.539_398_330_063_230e-1;
    const THETA_7: f64 = 9.504_178_996_162_932e-1;
    const THETA_9: f64 = 2.097_847_961_257_068e0;
    const THETA_13: f64 = 5.371_920_351_148_152e0;

    let norm = a.opnorm_one().map_err(Error::linalg("expm 1-norm"))?;
    if !norm.is_finite() {
        return Err(Error::Numerical {
            step: 0,
            what: "overflow in expm input norm".into(),
        });
    }

    let eye: Array2<C64> = Array2::eye(n);
    if norm == 0.0 {
        return Ok(eye);
    }

    let a2 = a.dot(a);
    if norm <= THETA_9 {
        // Low-order diagonal Padé: U = A·(odd part), V = even part.
        let (b, order): (&[f64], usize) = if norm <= THETA_3 {
            (&[120.0, 60.0, 12.0, 1.0], 3)
        } else if norm <= THETA_5 {
            (&[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0], 5)
        } else if norm <= THETA_7 {
            (
                &[17_297_280.0, 8_648_640.0, 1_995_840.0, 277_200.0, 25_200.0, 1_512.0, 56.0, 1.0],
                7,
            )
        } else {
            (
                &[
                    17_643_225_600.0,
                    8_821_612_800.0,
                    2_075_673_600.0,
                    302_702_400.0,
                    30_270_240.0,
                    2_162_160.0,
                    110_880.0,
                    3_960.0,
                    90.0,
                    1.0,
                ],
                9,
            )
        };
        // Powers A², A⁴, … as needed; accumulate even/odd polynomials in A².
        let mut even = eye.mapv(|z| z * b[0]);
        let mut odd = eye.mapv(|z| z * b[1]);
        let mut pow = a2.clone(); // A^{2k}, starting at k = 1
        let mut k = 2;
        while k <= order {
            even += &pow.mapv(|z| z * b[k]);
            if k + 1 <= order {
                odd += &pow.mapv(|z| z * b[k + 1]);
            }
            if k + 2 <= order {
                pow = pow.dot(&a2);
            }
            k += 2;
        }
        let u = a.dot(&odd);
        return pade_solve(&even, &u);
    }

    // Order 13 with scaling and squaring.
    let b: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
    let scale = C64::new((0.5f64).powi(s as i32), 0.0);
    let a_s = a.mapv(|z| z * scale);
    let a2 = a_s.dot(&a_s);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let u_hi = &a6.mapv(|z| z * b[13]) + &a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u_lo = &a6.mapv(|z| z * b[7])
        + &a4.mapv(|z| z * b[5])
        + &a2.mapv(|z| z * b[3])
        + eye.mapv(|z| z * b[1]);
    let u = a_s.dot(&(a6.dot(&u_hi) + u_lo));

    let v_hi = &a6.mapv(|z| z * b[12]) + &a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v_lo = &a6.mapv(|z| z * b[6])
        + &a4.mapv(|z| z * b[4])
        + &a2.mapv(|z| z * b[2])
        + eye.mapv(|z| z * b[0]);
    let v = a6.dot(&v_hi) + v_lo;

    let mut r = pade_solve(&v, &u)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Solve (V − U) R = (V + U) for the Padé quotient R.
fn pade_solve(v: &Array2<C64>, u: &Array2<C64>) -> Result<Array2<C64>> {
    let denom = v - u;
    let numer = v + u;
    let inv = denom.inv().map_err(Error::linalg("Padé denominator solve"))?;
    Ok(inv.dot(&numer))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn conj_x() -> SuperOp {
        SuperOp::conjugation(&pauli_x()).unwrap()
    }

    #[test]
    fn apply_identity_fixes_sigma_x() {
        let s = SuperOp::identity(2);
        let out = s.apply(&pauli_x()).unwrap();
        assert_eq!(out, pauli_x());
    }

    #[test]
    fn apply_zero_map_gives_zero() {
        let s = SuperOp::zero(2);
        let out = s.apply(&pauli_y()).unwrap();
        assert_eq!(out, Operator::zeros(2));
    }

    #[test]
    fn apply_sigma_x_conjugation_flips_sigma_z() {
        // σ_x σ_z σ_x = −σ_z
        let out = conj_x().apply(&pauli_z()).unwrap();
        let expected = Operator::new(pauli_z().matrix().mapv(|z| -z)).unwrap();
        assert!(frob(&(out.matrix() - expected.matrix())) < 1e-14);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let s = SuperOp::identity(3);
        assert!(matches!(
            s.apply(&pauli_x()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_of_identity_is_identity() {
        let s = SuperOp::identity(2);
        assert_eq!(s.dual(), s);
    }

    #[test]
    fn dual_of_unitary_conjugation_conjugates_the_other_way() {
        // dual(a ↦ u a u†) = (a ↦ u† a u) for u = σ_x
        let fwd = conj_x();
        let back = SuperOp::conjugation(&pauli_x().dagger()).unwrap();
        assert!(frob(&(&fwd.dual().mat - &back.mat)) < 1e-14);
    }

    #[test]
    fn dual_is_an_involution() {
        // random-ish fixed d=3 superop: entries (r+c)/7 + i(r·c)/11
        let d = 3;
        let mat = Array2::from_shape_fn((d * d, d * d), |(r, c)| {
            C64::new((r as f64 + c as f64) / 7.0, (r * c) as f64 / 11.0)
        });
        let s = SuperOp::new(d, mat).unwrap();
        assert!(frob(&(&s.dual().dual().mat - &s.mat)) < 1e-15);
    }

    #[test]
    fn dual_satisfies_defining_relation_on_pairs() {
        // tr((S*a)†b) = tr(a†(Sb)) on a grid of matrix-unit pairs.
        let d = 2;
        let mat = Array2::from_shape_fn((4, 4), |(r, c)| {
            C64::new((2 * r + c) as f64 / 5.0, (r as f64 - c as f64) / 3.0)
        });
        let s = SuperOp::new(d, mat).unwrap();
        let sd = s.dual();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let a = Operator::matrix_unit(d, i, j);
                        let b = Operator::matrix_unit(d, k, l);
                        let lhs = sd.apply(&a).unwrap().dagger().matrix().dot(b.matrix());
                        let rhs = a.dagger().matrix().dot(s.apply(&b).unwrap().matrix());
                        let lhs_tr: C64 = lhs.diag().sum();
                        let rhs_tr: C64 = rhs.diag().sum();
                        assert!((lhs_tr - rhs_tr).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn choi_of_identity_has_single_eigenvalue_d() {
        // Choi(I) is the unnormalized maximally entangled projector:
        // eigenvalues {2, 0, 0, 0} at d = 2.
        let evals = hermitian_eigenvalues(SuperOp::identity(2).choi().matrix()).unwrap();
        let mut v: Vec<f64> = evals.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[3], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn choi_of_transpose_is_swap() {
        // Choi(transpose) is the SWAP matrix with eigenvalues {1, 1, 1, −1}.
        let evals = hermitian_eigenvalues(SuperOp::transpose_map(2).choi().matrix()).unwrap();
        let mut v: Vec<f64> = evals.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(v[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[2], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[3], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn choi_of_trace_map_is_half_identity() {
        // a ↦ tr(a)·1/2 has Choi (1⊗1)/2: all eigenvalues 1/2.
        let evals = hermitian_eigenvalues(SuperOp::trace_map(2).choi().matrix()).unwrap();
        for ev in evals.iter() {
            assert_abs_diff_eq!(*ev, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn cp_defect_identity_is_zero() {
        let d = SuperOp::identity(2).cp_defect().unwrap();
        assert_abs_diff_eq!(d.lambda_min, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.herm_residual, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cp_defect_transpose_is_minus_one() {
        let d = SuperOp::transpose_map(2).cp_defect().unwrap();
        assert_abs_diff_eq!(d.lambda_min, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn cp_defect_unitary_conjugation_is_zero() {
        // Rank-one Choi of a unitary conjugation: eigenvalues {2, 0, 0, 0}.
        let d = conj_x().cp_defect().unwrap();
        assert_abs_diff_eq!(d.lambda_min, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn unitality_defect_identity_and_trace_map_are_zero() {
        assert_abs_diff_eq!(SuperOp::identity(2).unitality_defect(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            SuperOp::trace_map(2).unitality_defect(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn unitality_defect_left_multiplication_by_sigma_x() {
        // a ↦ σ_x a sends 1 ↦ σ_x, so the defect is ‖σ_x − 1‖_F = 2.
        let s = SuperOp::sandwich(&pauli_x(), &Operator::identity(2)).unwrap();
        assert_abs_diff_eq!(s.unitality_defect(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gksl_zero_spec_gives_zero_generator() {
        let spec = GkslSpec::new(Operator::zeros(2), vec![]).unwrap();
        let l = spec.generator(Picture::Heisenberg);
        assert_eq!(l, SuperOp::zero(2));
    }

    #[test]
    fn gksl_dephasing_damps_coherences() {
        // Jump V = σ_z at rate γ: e^{tL} multiplies σ_x, σ_y by e^{−2γt}.
        let gamma = 0.7;
        let spec = GkslSpec::new(Operator::zeros(2), vec![(pauli_z(), gamma)]).unwrap();
        let l = spec.generator(Picture::Heisenberg);
        assert!(l.identity_image_norm() < 1e-15);
        let t = 1.3;
        let at = l.expm(t).unwrap();
        let factor = (-2.0 * gamma * t).exp();
        for op in [pauli_x(), pauli_y()] {
            let img = at.apply(&op).unwrap();
            let expected = op.matrix().mapv(|z| z * factor);
            assert!(frob(&(img.matrix() - &expected)) < 1e-12);
        }
        // σ_z and 1 are fixed points of pure dephasing.
        for op in [pauli_z(), Operator::identity(2)] {
            let img = at.apply(&op).unwrap();
            assert!(frob(&(img.matrix() - op.matrix())) < 1e-12);
        }
    }

    #[test]
    fn gksl_pure_hamiltonian_is_unitary_rotation() {
        // H = σ_z, no jumps: L(a) = i[σ_z, a]; e^{tL} is conjugation by
        // e^{itσ_z}, CP for all t.
        let spec = GkslSpec::new(pauli_z(), vec![]).unwrap();
        let l = spec.generator(Picture::Heisenberg);
        let t = 0.9;
        let at = l.expm(t).unwrap();
        let d = at.cp_defect().unwrap();
        assert!(d.lambda_min > -1e-12);
        assert!(at.unitality_defect() < 1e-12);
        // explicit check against u a u† with u = e^{itσ_z}
        let u = Operator::new(expm_dense(&pauli_z().matrix().mapv(|z| z * C64::new(0.0, t))).unwrap())
            .unwrap();
        let conj = SuperOp::conjugation(&u).unwrap();
        assert!(frob(&(&at.mat - &conj.mat)) < 1e-12);
    }

    #[test]
    fn gksl_rejects_non_hermitian_hamiltonian() {
        let h = Operator::new(ndarray::array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        ])
        .unwrap();
        assert!(GkslSpec::new(h, vec![]).is_err());
    }

    #[test]
    fn gksl_rejects_negative_rate() {
        assert!(GkslSpec::new(Operator::zeros(2), vec![(pauli_z(), -1.0)]).is_err());
    }

    #[test]
    fn expm_of_zero_map_is_identity() {
        let e = SuperOp::zero(3).expm(1.7).unwrap();
        assert_eq!(e, SuperOp::identity(3));
    }

    #[test]
    fn expm_at_time_zero_is_identity() {
        let spec = GkslSpec::new(pauli_z(), vec![(pauli_x(), 0.3)]).unwrap();
        let e = spec.generator(Picture::Heisenberg).expm(0.0).unwrap();
        assert!(frob(&(&e.mat - &SuperOp::identity(2).mat)) < 1e-15);
    }

    #[test]
    fn expm_dephasing_matches_scalar_exponential() {
        // coherence factor e^{−2γt} at γ = 1, t = 1 → 0.13533528…
        let spec = GkslSpec::new(Operator::zeros(2), vec![(pauli_z(), 1.0)]).unwrap();
        let at = spec.generator(Picture::Heisenberg).expm(1.0).unwrap();
        let img = at.apply(&pauli_x()).unwrap();
        let got = img.matrix()[[0, 1]].re;
        assert_abs_diff_eq!(got, (-2.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.135_335_283_236_612_7, epsilon = 1e-12);
    }

    #[test]
    fn expm_large_argument_uses_squaring() {
        // e^{tL} for t‖L‖ ≫ θ13 still satisfies the semigroup property.
        let spec = GkslSpec::new(pauli_x(), vec![(pauli_z(), 2.0)]).unwrap();
        let l = spec.generator(Picture::Heisenberg);
        let whole = l.expm(8.0).unwrap();
        let half = l.expm(4.0).unwrap();
        let composed = half.compose(&half).unwrap();
        assert!(frob(&(&whole.mat - &composed.mat)) < 1e-10);
    }

    #[test]
    fn choi_roundtrip_reconstructs_superop() {
        let d = 3;
        let mat = Array2::from_shape_fn((d * d, d * d), |(r, c)| {
            C64::new(((r * 13 + c * 7) % 10) as f64 / 9.0, ((r + 3 * c) % 8) as f64 / 7.0)
        });
        let s = SuperOp::new(d, mat).unwrap();
        let back = s.choi().to_superop();
        assert!(frob(&(&back.mat - &s.mat)) < 1e-14);
    }

    #[test]
    fn vectorize_roundtrip() {
        let a = pauli_y();
        let v = vectorize(a.matrix());
        // column stacking: vec index i + j·d
        assert_eq!(v[vec_index(2, 1, 0)], C64::new(0.0, 1.0));
        assert_eq!(v[vec_index(2, 0, 1)], C64::new(0.0, -1.0));
        let back = devectorize(&v).unwrap();
        assert_eq!(back, a.matrix().clone());
    }

    #[test]
    fn sandwich_matches_direct_product() {
        // vec(X a Y) = (Yᵀ ⊗ X) vec(a) on a specific triple.
        let x = pauli_x();
        let y = pauli_y();
        let a = pauli_z();
        let s = SuperOp::sandwich(&x, &y).unwrap();
        let via_super = s.apply(&a).unwrap();
        let direct = x.matrix().dot(a.matrix()).dot(y.matrix());
        assert!(frob(&(via_super.matrix() - &direct)) < 1e-15);
    }
}
