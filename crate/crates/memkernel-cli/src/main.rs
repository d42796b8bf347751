// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! `memkernel` — batch scenario runner for memory-kernel master equations.
//!
//! One scenario per invocation: a JSON config is read, the corresponding
//! library pipeline runs, and machine-readable artifacts are written to the
//! output directory (`trace.csv` with per-step diagnostics, `report.json`
//! with verdicts, tolerances, and the resolved config). Exit codes follow a
//! strict contract:
//!
//! * `0` — ran to completion and every certification verdict passed,
//! * `2` — ran to completion but at least one verdict failed,
//! * `1` — input or numerical error (schema violations report the JSON
//!   path; numerical failures report the grid step).
//!
//! The only environment variable consulted is `MEMKERNEL_LOG` (log filter);
//! everything else comes from the config file and flags, so identical
//! inputs produce byte-identical outputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod output;
mod run;

#[derive(Debug, Parser)]
#[command(
    name = "memkernel",
    version,
    about = "Memory-kernel master equations: CP-certified evolution, kernel synthesis, and Laplace-domain checks",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Common per-scenario arguments.
#[derive(Debug, Args)]
pub(crate) struct RunArgs {
    /// Scenario configuration file (JSON).
    #[arg(short = 'c', long = "config", value_name = "FILE")]
    pub(crate) config: PathBuf,

    /// Output directory for trace.csv and report.json (created if absent).
    #[arg(short = 'o', long = "outdir", value_name = "DIR")]
    pub(crate) outdir: PathBuf,

    /// Override the grid step h from the config.
    #[arg(long = "h", value_name = "STEP")]
    pub(crate) h: Option<f64>,

    /// Override the grid horizon T from the config.
    #[arg(long = "T", value_name = "HORIZON")]
    pub(crate) t: Option<f64>,

    /// Override the CP and unitality verdict tolerances with one value.
    #[arg(long = "tol", value_name = "TOL")]
    pub(crate) tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub(crate) enum Command {
    /// Solve dA/dt = L(A_t) + ∫K_{t−s}(A_s) ds and certify the trace.
    Evolve(RunArgs),
    /// Run the CP sufficiency and memory-kernel CP checks on a kernel.
    Certify(RunArgs),
    /// Synthesize the scalar kernel κ from a memory function f.
    KernelFromF(RunArgs),
    /// Evolve a convex mixture of GKSL semigroups.
    Mixture(RunArgs),
    /// Evolve a time-dependent mixture with weight functions x_j(t).
    TimeMixture(RunArgs),
    /// Reduce a system⊗environment semigroup to the system and certify.
    Dilate(RunArgs),
    /// Recover L̂_p from a trace and verify the resolvent identity.
    LaplaceCheck(RunArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                // help/version are successful terminations, not errors
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEMKERNEL_LOG", "warn"))
        .init();

    match run::dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
