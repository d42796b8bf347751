// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Property-based invariants of the public API.
//!
//! Each property encodes a structural fact that must hold for *all* valid
//! inputs, not just the worked examples: Kraus sums are CP, Hilbert–Schmidt
//! duality is an isometric involution, Choi reconstruction is exact,
//! matrix exponentials satisfy the semigroup law, admissible memory
//! functions produce CP unital evolutions, and convex mixtures stay CP.
//! Tolerances leave headroom above f64 eigensolve noise so the properties
//! hold for every draw, not just lucky seeds.

use memkernel::algebra::{
    frob, vectorize, GkslSpec, Operator, Picture, SuperOp,
};
use memkernel::families::{mixture_evolution, MixtureSpec};
use memkernel::kernels::{make_scalar_cp_kernel, z_from_f};
use memkernel::memory::{check_admissible, g_from_f, kappa_from_f, MemoryFunction};
use memkernel::tol;
use memkernel::volterra::{evolve, solve_normalization, TimeGrid};
use memkernel::C64;

use ndarray::Array2;
use proptest::collection::vec;
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn operator(d: usize) -> impl Strategy<Value = Operator> {
    vec(c64(), d * d).prop_map(move |v| {
        Operator::new(Array2::from_shape_vec((d, d), v).expect("shape")).expect("square")
    })
}

fn superop(d: usize) -> impl Strategy<Value = SuperOp> {
    let side = d * d;
    vec(c64(), side * side).prop_map(move |v| {
        SuperOp::new(d, Array2::from_shape_vec((side, side), v).expect("shape")).expect("square")
    })
}

/// A manifestly CP map Σ_i V_i · V_i† from random Kraus operators.
fn kraus_map(d: usize, terms: usize) -> impl Strategy<Value = SuperOp> {
    vec(operator(d), 1..=terms).prop_map(move |ops| {
        let mut acc = SuperOp::zero(d);
        for v in &ops {
            acc = &acc + &SuperOp::sandwich(v, &v.dagger()).expect("dims");
        }
        acc
    })
}

/// A CP *unital* map: a convex combination of unitary conjugations.
/// d = 2 draws from Pauli conjugations; d = 3 from a cyclic permutation and
/// diagonal phase unitaries.
fn unital_cp_map(d: usize) -> BoxedStrategy<SuperOp> {
    match d {
        2 => (vec(0.05..1.0f64, 4))
            .prop_map(|w| {
                let total: f64 = w.iter().sum();
                let us = [
                    Operator::identity(2),
                    memkernel::algebra::pauli_x(),
                    memkernel::algebra::pauli_y(),
                    memkernel::algebra::pauli_z(),
                ];
                let mut acc = SuperOp::zero(2);
                for (u, &wi) in us.iter().zip(&w) {
                    acc = &acc + &SuperOp::conjugation(u).expect("2×2").scale(wi / total);
                }
                acc
            })
            .boxed(),
        3 => (vec(0.05..1.0f64, 3), 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
            .prop_map(|(w, th, ph)| {
                let total: f64 = w.iter().sum();
                let mut perm = Array2::<C64>::zeros((3, 3));
                perm[[1, 0]] = C64::new(1.0, 0.0);
                perm[[2, 1]] = C64::new(1.0, 0.0);
                perm[[0, 2]] = C64::new(1.0, 0.0);
                let mut phase = Array2::<C64>::zeros((3, 3));
                phase[[0, 0]] = C64::new(1.0, 0.0);
                phase[[1, 1]] = C64::from_polar(1.0, th);
                phase[[2, 2]] = C64::from_polar(1.0, ph);
                let us = [
                    Operator::identity(3),
                    Operator::new(perm).expect("3×3"),
                    Operator::new(phase).expect("3×3"),
                ];
                let mut acc = SuperOp::zero(3);
                for (u, &wi) in us.iter().zip(&w) {
                    acc = &acc + &SuperOp::conjugation(u).expect("3×3").scale(wi / total);
                }
                acc
            })
            .boxed(),
        _ => unreachable!("strategies cover d = 2, 3"),
    }
}

/// A random GKSL specification: Hermitized Hamiltonian plus up to two jump
/// operators with rates in [0, 1].
fn gksl(d: usize) -> impl Strategy<Value = GkslSpec> {
    (operator(d), vec((operator(d), 0.0..1.0f64), 0..=2)).prop_map(move |(h_raw, jumps)| {
        let herm = Operator::new(
            (h_raw.matrix() + &h_raw.dagger().matrix().view()).mapv(|z| z * 0.5),
        )
        .expect("square");
        GkslSpec::new(herm, jumps).expect("Hermitized input")
    })
}

fn hs_inner(a: &Operator, b: &Operator) -> C64 {
    let va = vectorize(a.matrix());
    let vb = vectorize(b.matrix());
    va.iter().zip(vb.iter()).map(|(x, y)| x.conj() * y).sum()
}

// ---------------------------------------------------------------------------
// Algebra properties
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Sums of Kraus sandwiches are CP: the Choi matrix is a Gram matrix.
    #[test]
    fn kraus_sums_are_completely_positive(s in prop_oneof![kraus_map(2, 3), kraus_map(3, 3)]) {
        let defect = s.cp_defect().unwrap();
        prop_assert!(defect.lambda_min >= -1e-10, "λ_min = {:.3e}", defect.lambda_min);
        prop_assert!(defect.herm_residual <= 1e-10);
    }

    /// The Hilbert–Schmidt dual is an involution: S** = S exactly.
    #[test]
    fn dual_is_an_involution(s in superop(2)) {
        let back = s.dual().dual();
        prop_assert!(frob(&(s.matrix() - back.matrix())) == 0.0);
    }

    /// Defining relation of the dual: ⟨S*(a), b⟩ = ⟨a, S(b)⟩ for all a, b.
    #[test]
    fn dual_satisfies_defining_relation(
        s in superop(2),
        a in operator(2),
        b in operator(2),
    ) {
        let lhs = hs_inner(&s.dual().apply(&a).unwrap(), &b);
        let rhs = hs_inner(&a, &s.apply(&b).unwrap());
        let scale = 1.0 + s.norm() * a.norm() * b.norm();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    /// Unitality of S bounds the trace change of the dual (Schrödinger) map:
    /// |tr(S*(ρ)) − tr(ρ)| = |⟨S(1) − 1, ρ⟩| ≤ ‖S(1) − 1‖·‖ρ‖.
    #[test]
    fn unitality_defect_bounds_dual_trace_change(
        s in kraus_map(2, 3),
        rho in operator(2),
    ) {
        let lhs = (s.dual().apply(&rho).unwrap().trace() - rho.trace()).norm();
        let bound = s.unitality_defect() * rho.norm() + 1e-12 * (1.0 + s.norm() * rho.norm());
        prop_assert!(lhs <= bound, "trace change {lhs:.3e} vs bound {bound:.3e}");
    }

    /// Choi reconstruction is exact: to_superop(choi(S)) = S.
    #[test]
    fn choi_round_trip_is_exact(s in prop_oneof![superop(2), superop(3)]) {
        let back = s.choi().to_superop();
        prop_assert!(frob(&(s.matrix() - back.matrix())) <= 1e-12 * (1.0 + s.norm()));
    }

    /// The dual of a CP map is CP with the same defect data: C(S*) is the
    /// adjoint of C(S) up to the lattice relabeling (i,r) ↔ (r,i), which
    /// preserves both λ_min and the anti-Hermitian residual.
    #[test]
    fn dual_preserves_cp_defect(s in superop(2)) {
        let d1 = s.cp_defect().unwrap();
        let d2 = s.dual().cp_defect().unwrap();
        let scale = 1.0 + s.norm();
        prop_assert!((d1.lambda_min - d2.lambda_min).abs() <= 1e-10 * scale);
        prop_assert!((d1.herm_residual - d2.herm_residual).abs() <= 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Semigroup law of the matrix exponential on GKSL generators.
    #[test]
    fn expm_satisfies_semigroup_law(
        spec in gksl(2),
        s in 0.1..1.5f64,
        t in 0.1..1.5f64,
    ) {
        let l = spec.generator(Picture::Heisenberg);
        let a_st = l.expm(s + t).unwrap();
        let a_s = l.expm(s).unwrap();
        let a_t = l.expm(t).unwrap();
        let composed = a_s.compose(&a_t).unwrap();
        let scale = 1.0 + a_st.norm();
        prop_assert!(
            frob(&(a_st.matrix() - composed.matrix())) <= 1e-9 * scale
        );
    }

    /// Heisenberg GKSL generators annihilate the identity; their duals
    /// (Schrödinger) preserve the trace of every state.
    #[test]
    fn gksl_generators_annihilate_identity(spec in gksl(3), rho in operator(3)) {
        let l = spec.generator(Picture::Heisenberg);
        prop_assert!(l.identity_image_norm() <= 1e-12 * (1.0 + l.norm()));
        let ls = spec.generator(Picture::Schroedinger);
        let tr = ls.apply(&rho).unwrap().trace().norm();
        prop_assert!(tr <= 1e-12 * (1.0 + ls.norm() * rho.norm()));
    }
}

// ---------------------------------------------------------------------------
// Memory-function properties
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Erlang densities with mass ≤ 1 are admissible and their survival
    /// function decreases from exactly 1, staying in [0, 1].
    #[test]
    fn erlang_families_are_admissible_with_monotone_survival(
        gamma in 0.2..4.0f64,
        order in 1u32..5,
        scale in 0.1..1.0f64,
    ) {
        let f = MemoryFunction::erlang_scaled(gamma, order, scale).unwrap();
        let grid = TimeGrid::from_horizon(4.0 / (gamma * 200.0), 4.0 / gamma).unwrap();
        let report = check_admissible(&f, &grid).unwrap();
        prop_assert!(report.admissible, "{report:?}");
        let g = g_from_f(&f, &grid).unwrap();
        prop_assert!(g[0] == 1.0);
        for w in g.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15 && w[1] >= -1e-12);
        }
    }

    /// Scaling down the memory function scales κ's forcing consistently:
    /// the synthesized kernel of c·f must satisfy its first-kind equation
    /// with the same quadrature-order residual as f's.
    #[test]
    fn kappa_synthesis_residual_is_quadrature_order(
        gamma in 0.5..2.0f64,
        order in 2u32..4,
        scale in 0.2..1.0f64,
    ) {
        let f = MemoryFunction::erlang_scaled(gamma, order, scale).unwrap();
        let grid = TimeGrid::from_horizon(5e-3 / gamma, 5.0 / gamma).unwrap();
        let syn = kappa_from_f(&f, &grid).unwrap();
        let h = grid.step();
        // residual scale grows like γ³ (κ ~ γ², one more γ from the
        // derivative); normalize before comparing against C·h²
        let gamma3 = gamma.powi(3).max(1.0);
        prop_assert!(
            syn.first_kind_residual <= tol::CONSISTENCY_CONST * gamma3 * h * h,
            "residual {:.3e} at h = {h:.3e}",
            syn.first_kind_residual
        );
    }
}

// ---------------------------------------------------------------------------
// Evolution properties (heavier: fewer cases)
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The CP guarantee: any admissible Erlang memory function with any CP
    /// unital map B evolves to a CP, unital family — the property the
    /// construction exists to deliver.
    #[test]
    fn admissible_scalar_kernels_evolve_completely_positively(
        gamma in 0.5..2.0f64,
        order in 2u32..4,
        b in prop_oneof![unital_cp_map(2), unital_cp_map(3)],
    ) {
        let f = MemoryFunction::erlang(gamma, order).unwrap();
        let horizon = 6.0 / gamma;
        let grid = TimeGrid::from_horizon(horizon / 400.0, horizon).unwrap();
        let kappa = kappa_from_f(&f, &grid).unwrap();
        let spec = make_scalar_cp_kernel(&kappa.kernel, &b).unwrap();
        let trace = evolve(&spec, &grid).unwrap();
        prop_assert!(
            trace.min_cp_defect() >= -tol::TRACE_CP_TOL,
            "min cp defect {:.3e}",
            trace.min_cp_defect()
        );
        prop_assert!(trace.max_unitality_defect() <= tol::TRACE_UNITALITY_TOL);
    }

    /// Convex mixtures of GKSL semigroups are CP and unital on the grid.
    #[test]
    fn mixtures_stay_in_the_cp_unital_hull(
        specs in vec(gksl(2), 2..=3),
        raw_weights in vec(0.05..1.0f64, 3),
    ) {
        let n = specs.len();
        let total: f64 = raw_weights[..n].iter().sum();
        let weights: Vec<f64> = raw_weights[..n].iter().map(|w| w / total).collect();
        let generators: Vec<SuperOp> =
            specs.iter().map(|s| s.generator(Picture::Heisenberg)).collect();
        let spec = MixtureSpec::new(generators, weights);
        // floating renormalization can miss 1 by an ulp; skip those draws
        prop_assume!(spec.is_ok());
        let grid = TimeGrid::from_horizon(0.02, 2.0).unwrap();
        let trace = mixture_evolution(&spec.unwrap(), &grid).unwrap();
        prop_assert!(trace.min_cp_defect() >= -1e-10);
        prop_assert!(trace.max_unitality_defect() <= 3.0 * tol::default_tol(2));
    }

    /// Z synthesis round trip at the operator level: for F_t = f(t)·B the
    /// solved normalization recovers N = I − ∫F to quadrature order.
    #[test]
    fn z_synthesis_round_trip_is_second_order(
        gamma in 0.6..1.6f64,
        b in unital_cp_map(2),
    ) {
        let grid = TimeGrid::from_horizon(5e-3 / gamma, 4.0 / gamma).unwrap();
        let f_ops: Vec<SuperOp> = (0..grid.len())
            .map(|k| {
                let t = grid.time(k);
                b.scale(gamma * gamma * t * (-gamma * t).exp())
            })
            .collect();
        let syn = z_from_f(&f_ops, &grid).unwrap();
        prop_assert!(syn.dirac.is_none());
        let sol = solve_normalization(&syn.z, None, &grid).unwrap();
        // N = I − ∫F on the same grid, independently quadratured
        let h = grid.step();
        let eye = Array2::<C64>::eye(4);
        let mut cum = Array2::<C64>::zeros((4, 4));
        let mut worst = 0.0f64;
        for (k, n_k) in sol.n.iter().enumerate() {
            if k > 0 {
                cum = &cum
                    + &(f_ops[k - 1].matrix() + f_ops[k].matrix()).mapv(|z| z * (0.5 * h));
            }
            worst = worst.max(frob(&(&(&eye - &cum) - n_k.matrix())));
        }
        let gamma3 = gamma.powi(3).max(1.0);
        prop_assert!(
            worst <= tol::ROUND_TRIP_CONST * gamma3 * h * h,
            "round trip {worst:.3e} at h = {h:.3e}"
        );
    }
}
