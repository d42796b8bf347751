// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario dispatch: load the config, apply CLI overrides, run the library
//! pipeline, and emit artifacts. Each runner returns `Ok(pass)` — the
//! conjunction of its certification verdicts — or an error for input/numeric
//! failures, which the caller maps to the exit-code contract
//! {0 = pass, 2 = verdict failure, 1 = error}.

use std::fs;

use anyhow::{bail, Context};
use serde_json::json;

use memkernel::families::{dilation_reduced, mixture_evolution, time_mixture_evolution};
use memkernel::json::{KernelSpecJson, MemoryPartJson};
use memkernel::kernels::{
    breuer_vacchini_check, cp_sufficiency_check, KernelSpec, MemoryPart,
};
use memkernel::memory::{check_admissible, kappa_from_f};
use memkernel::tol;
use memkernel::volterra::{
    evolve, extract_g, kernel_from_g, solve_normalization, EvolutionTrace, TimeGrid,
};
use memkernel::algebra::SuperOp;

use crate::config::{
    self, CertifyConfig, DilateConfig, EvolveConfig, GridConfig, KernelFromFConfig,
    LaplaceCheckConfig, LaplaceSource, MixtureConfig, TimeMixtureConfig, Tolerances,
};
use crate::output::{self, Report, Verdict};
use crate::{Command, RunArgs};

/// Default gate for ‖G_t(1)‖: the derivative representation of a unital
/// evolution must annihilate the identity.
const DEFAULT_G_IDENTITY_TOL: f64 = 1e-6;

/// Run the selected scenario; `Ok(true)` means every verdict passed.
pub(crate) fn dispatch(cmd: Command) -> anyhow::Result<bool> {
    match cmd {
        Command::Evolve(args) => run_evolve(&args),
        Command::Certify(args) => run_certify(&args),
        Command::KernelFromF(args) => run_kernel_from_f(&args),
        Command::Mixture(args) => run_mixture(&args),
        Command::TimeMixture(args) => run_time_mixture(&args),
        Command::Dilate(args) => run_dilate(&args),
        Command::LaplaceCheck(args) => run_laplace_check(&args),
    }
}

/// Fold `--h/--T/--tol` into the loaded config (the report then echoes the
/// overridden values — the config as actually run).
fn apply_overrides(grid: &mut GridConfig, tolerances: &mut Tolerances, args: &RunArgs) {
    if let Some(h) = args.h {
        grid.h = h;
    }
    if let Some(t) = args.t {
        grid.t = t;
    }
    if let Some(tol) = args.tol {
        tolerances.cp = Some(tol);
        tolerances.unitality = Some(tol);
    }
}

fn build_grid(grid: &GridConfig) -> anyhow::Result<TimeGrid> {
    grid.validate()?;
    Ok(TimeGrid::from_horizon(grid.h, grid.t)?)
}

fn cp_unitality_tols(tolerances: &Tolerances) -> (f64, f64) {
    (
        tolerances.cp.unwrap_or(tol::TRACE_CP_TOL),
        tolerances.unitality.unwrap_or(tol::TRACE_UNITALITY_TOL),
    )
}

/// The three per-trace verdicts shared by every evolving scenario.
fn trace_verdicts(report: &mut Report, trace: &EvolutionTrace, cp_tol: f64, uni_tol: f64) {
    report.tolerances.insert("cp", cp_tol);
    report.tolerances.insert("unitality", uni_tol);
    report.push_verdict(
        "trace_cp",
        Verdict::at_least(trace.min_cp_defect(), -cp_tol),
    );
    report.push_verdict(
        "trace_unitality",
        Verdict::at_most(trace.max_unitality_defect(), uni_tol),
    );
    report.push_verdict(
        "choi_hermiticity",
        Verdict::at_most(trace.max_choi_herm_residual(), cp_tol),
    );
}

fn emit(args: &RunArgs, report: &Report) -> anyhow::Result<()> {
    output::write_report(&args.outdir, report)?;
    Ok(())
}

fn prepare_outdir(args: &RunArgs) -> anyhow::Result<()> {
    fs::create_dir_all(&args.outdir)
        .with_context(|| format!("cannot create output directory {}", args.outdir.display()))
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

fn run_evolve(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: EvolveConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    let spec = cfg.kernel.resolve(&grid)?;
    let trace = evolve(&spec, &grid)?;

    let mut report = Report::new("evolve", &grid, serde_json::to_value(&cfg)?);
    let (cp_tol, uni_tol) = cp_unitality_tols(&cfg.tolerances);
    trace_verdicts(&mut report, &trace, cp_tol, uni_tol);

    prepare_outdir(args)?;
    output::write_trace_csv(&args.outdir, &grid, &trace.diagnostics)?;
    emit(args, &report)?;
    Ok(report.pass)
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

/// Resolve a kernel for certification *without* the construction-time CP
/// gate: pointing the checks at a suspect kernel is the purpose of this
/// scenario, so B is taken as given and judged by the verdicts instead.
/// Admissibility of f is still enforced — it is a premise of the scalar
/// construction, not a certified property.
fn resolve_for_certify(kernel: &KernelSpecJson, grid: &TimeGrid) -> anyhow::Result<KernelSpec> {
    match &kernel.memory {
        MemoryPartJson::ScalarCp { f, b } => {
            if kernel.local.is_some() {
                bail!(
                    "the scalar kernel form owns the instantaneous part (the Dirac weight \
                     of κ); drop the explicit local generator"
                );
            }
            let f = f.to_memory_function()?;
            let adm = check_admissible(&f, grid)?;
            if !adm.admissible {
                bail!(
                    "memory function is not admissible (min value {:.3e}, mass {:.12}); \
                     κ synthesis requires f ≥ 0 with ∫f ≤ 1",
                    adm.min_value,
                    adm.total_mass.unwrap_or(adm.grid_mass)
                );
            }
            let synthesis = kappa_from_f(&f, grid)?;
            Ok(KernelSpec::new(
                kernel.dim,
                None,
                MemoryPart::ScalarCp {
                    kappa: synthesis.kernel,
                    b: b.to_superop()?,
                },
            )?)
        }
        _ => Ok(kernel.resolve(grid)?),
    }
}

/// Mirror of the sufficiency check's split resolution, for the memory-kernel
/// CP check: regular B/Z samples plus optional Dirac parts.
#[allow(clippy::type_complexity)]
fn split_parts(
    spec: &KernelSpec,
    grid: &TimeGrid,
) -> anyhow::Result<(Vec<SuperOp>, Option<SuperOp>, Vec<SuperOp>, Option<SuperOp>)> {
    let eye = SuperOp::identity(spec.dim());
    match spec.memory() {
        MemoryPart::ScalarCp { kappa, b } => {
            if !grid.step_matches(kappa.h) || kappa.regular.len() < grid.len() {
                bail!("scalar kernel tabulation does not cover the run grid");
            }
            let weights = &kappa.regular[..grid.len()];
            let b_reg = weights.iter().map(|&w| b.scale(w)).collect();
            let z_reg = weights.iter().map(|&w| eye.scale(w)).collect();
            let dirac = kappa.local_weight != 0.0;
            Ok((
                b_reg,
                dirac.then(|| b.scale(kappa.local_weight)),
                z_reg,
                dirac.then(|| eye.scale(kappa.local_weight)),
            ))
        }
        MemoryPart::Split { b_t, z_t } => Ok((
            b_t.prefix_for(grid)?.to_vec(),
            None,
            z_t.prefix_for(grid)?.to_vec(),
            None,
        )),
        _ => bail!(
            "certification needs a kernel with an identified B/Z split \
             (scalar CP or split form)"
        ),
    }
}

fn run_certify(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: CertifyConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    let spec = resolve_for_certify(&cfg.kernel, &grid)?;

    let sufficiency = cp_sufficiency_check(&spec, &grid)?;
    let (b_reg, b_dirac, z_reg, z_dirac) = split_parts(&spec, &grid)?;
    let n_sol = solve_normalization(&z_reg, z_dirac.as_ref(), &grid)?;
    let memory_cp = breuer_vacchini_check(&n_sol, &b_reg, b_dirac.as_ref())?;
    let trace = evolve(&spec, &grid)?;

    let mut report = Report::new("certify", &grid, serde_json::to_value(&cfg)?);
    let (cp_tol, uni_tol) = cp_unitality_tols(&cfg.tolerances);
    trace_verdicts(&mut report, &trace, cp_tol, uni_tol);
    report.push_verdict(
        "cp_sufficiency",
        Verdict {
            value: sufficiency.min_b_cp_defect.min(sufficiency.min_n_cp_defect),
            threshold: -sufficiency.cp_tol,
            pass: sufficiency.sufficient,
        },
    );
    report.push_verdict(
        "memory_cp",
        Verdict {
            value: memory_cp.min_cp_defect,
            threshold: -memory_cp.cp_tol,
            pass: memory_cp.pass,
        },
    );
    report.details = json!({
        "sufficiency": {
            "min_b_cp_defect": sufficiency.min_b_cp_defect,
            "max_b_herm_residual": sufficiency.max_b_herm_residual,
            "max_identity_image": sufficiency.max_identity_image,
            "min_n_cp_defect": sufficiency.min_n_cp_defect,
            "cp_tol": sufficiency.cp_tol,
            "identity_tol": sufficiency.identity_tol,
            "sufficient": sufficiency.sufficient,
        },
        "memory_cp": {
            "min_cp_defect": memory_cp.min_cp_defect,
            "cp_tol": memory_cp.cp_tol,
            "pass": memory_cp.pass,
        },
    });

    prepare_outdir(args)?;
    output::write_trace_csv(&args.outdir, &grid, &trace.diagnostics)?;
    emit(args, &report)?;
    Ok(report.pass)
}

// ---------------------------------------------------------------------------
// kernel-from-f
// ---------------------------------------------------------------------------

fn run_kernel_from_f(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: KernelFromFConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    let f = cfg.f.to_memory_function()?;

    let adm = check_admissible(&f, &grid)?;
    if !adm.admissible {
        bail!(
            "memory function is not admissible (min value {:.3e}, mass {:.12}); \
             κ synthesis requires f ≥ 0 with ∫f ≤ 1",
            adm.min_value,
            adm.total_mass.unwrap_or(adm.grid_mass)
        );
    }
    let synthesis = kappa_from_f(&f, &grid)?;

    let mut report = Report::new("kernel-from-f", &grid, serde_json::to_value(&cfg)?);
    report.details = json!({
        "kappa": {
            "local_weight": synthesis.kernel.local_weight,
            "first_kind_residual": synthesis.first_kind_residual,
        },
        "admissibility": {
            "min_value": adm.min_value,
            "grid_mass": adm.grid_mass,
            "total_mass": adm.total_mass,
            "tail_mass": adm.tail_mass,
            "tol": adm.tol,
        },
    });

    prepare_outdir(args)?;
    output::write_kappa_csv(&args.outdir, &grid, &synthesis.kernel.regular)?;
    emit(args, &report)?;
    Ok(report.pass)
}

// ---------------------------------------------------------------------------
// mixture / time-mixture / dilate
// ---------------------------------------------------------------------------

fn run_mixture(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: MixtureConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    let spec = cfg.mixture.to_spec()?;
    let trace = mixture_evolution(&spec, &grid)?;

    let mut report = Report::new("mixture", &grid, serde_json::to_value(&cfg)?);
    let (cp_tol, uni_tol) = cp_unitality_tols(&cfg.tolerances);
    trace_verdicts(&mut report, &trace, cp_tol, uni_tol);

    prepare_outdir(args)?;
    output::write_trace_csv(&args.outdir, &grid, &trace.diagnostics)?;
    emit(args, &report)?;
    Ok(report.pass)
}

fn run_time_mixture(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: TimeMixtureConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    let spec = cfg.time_mixture.to_spec()?;
    let out = time_mixture_evolution(&spec, &grid)?;

    let mut report = Report::new("time-mixture", &grid, serde_json::to_value(&cfg)?);
    let (cp_tol, uni_tol) = cp_unitality_tols(&cfg.tolerances);
    trace_verdicts(&mut report, &out.trace, cp_tol, uni_tol);
    let g_identity = out
        .g
        .g
        .iter()
        .map(|s| s.identity_image_norm())
        .fold(0.0, f64::max);
    report.details = json!({ "g_max_identity_image": g_identity });

    prepare_outdir(args)?;
    output::write_trace_csv(&args.outdir, &grid, &out.trace.diagnostics)?;
    emit(args, &report)?;
    Ok(report.pass)
}

fn run_dilate(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: DilateConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    let spec = cfg.dilation.to_spec()?;
    let trace = dilation_reduced(&spec, &grid)?;
    let extraction = extract_g(&trace)?;

    let mut report = Report::new("dilate", &grid, serde_json::to_value(&cfg)?);
    let (cp_tol, uni_tol) = cp_unitality_tols(&cfg.tolerances);
    trace_verdicts(&mut report, &trace, cp_tol, uni_tol);
    report.tolerances.insert("g_identity", DEFAULT_G_IDENTITY_TOL);
    report.push_verdict(
        "g_identity",
        Verdict::at_most(extraction.max_identity_image, DEFAULT_G_IDENTITY_TOL),
    );
    report.details = json!({
        "g_reconstruction_residual": extraction.reconstruction_residual,
    });

    prepare_outdir(args)?;
    output::write_trace_csv(&args.outdir, &grid, &trace.diagnostics)?;
    emit(args, &report)?;
    Ok(report.pass)
}

// ---------------------------------------------------------------------------
// laplace-check
// ---------------------------------------------------------------------------

fn run_laplace_check(args: &RunArgs) -> anyhow::Result<bool> {
    let mut cfg: LaplaceCheckConfig = config::load(&args.config)?;
    apply_overrides(&mut cfg.grid, &mut cfg.tolerances, args);
    let grid = build_grid(&cfg.grid)?;
    if cfg.p.is_empty() {
        bail!("laplace-check needs at least one sample point p");
    }
    if cfg.p.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        bail!("Laplace sample points must be positive and finite, got {:?}", cfg.p);
    }

    let trace = match &cfg.source {
        LaplaceSource::Kernel { kernel } => evolve(&kernel.resolve(&grid)?, &grid)?,
        LaplaceSource::Mixture { mixture } => mixture_evolution(&mixture.to_spec()?, &grid)?,
        LaplaceSource::Dilation { dilation } => dilation_reduced(&dilation.to_spec()?, &grid)?,
    };
    let extraction = extract_g(&trace)?;
    let hats = kernel_from_g(&extraction.rep, &cfg.p)?;

    let mut report = Report::new("laplace-check", &grid, serde_json::to_value(&cfg)?);
    let (cp_tol, uni_tol) = cp_unitality_tols(&cfg.tolerances);
    trace_verdicts(&mut report, &trace, cp_tol, uni_tol);
    let resolvent_tol = cfg.tolerances.resolvent.unwrap_or(tol::RESOLVENT_TOL);
    report.tolerances.insert("resolvent", resolvent_tol);
    report.tolerances.insert("g_identity", DEFAULT_G_IDENTITY_TOL);
    report.push_verdict(
        "g_identity",
        Verdict::at_most(extraction.max_identity_image, DEFAULT_G_IDENTITY_TOL),
    );
    for hat in &hats {
        report.push_verdict(
            format!("resolvent_p_{}", hat.p),
            Verdict::at_most(hat.resolvent_residual, resolvent_tol),
        );
    }
    report.details = json!({
        "g_reconstruction_residual": extraction.reconstruction_residual,
        "laplace": hats
            .iter()
            .map(|hat| {
                json!({
                    "p": hat.p,
                    "g_tail_bound": hat.g_tail_bound,
                    "resolvent_residual": hat.resolvent_residual,
                })
            })
            .collect::<Vec<_>>(),
    });

    prepare_outdir(args)?;
    output::write_trace_csv(&args.outdir, &grid, &trace.diagnostics)?;
    emit(args, &report)?;
    Ok(report.pass)
}
