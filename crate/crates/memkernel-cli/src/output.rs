// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Artifact emission: RFC-4180 CSV traces and JSON reports, written
//! atomically (temp file + rename in the target directory) so a crashed run
//! never leaves a partial artifact behind. All numeric formatting is fixed
//! 17-significant-digit scientific notation, making outputs byte-stable
//! across runs for identical inputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use memkernel::volterra::{StepDiagnostics, TimeGrid};

/// One certification verdict: the measured value, the gate it was compared
/// against, and the boolean outcome. The comparison direction is part of the
/// verdict's meaning (CP defects are lower-bounded, residuals upper-bounded).
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    /// Measured value.
    pub value: f64,
    /// Threshold actually used (signed as compared).
    pub threshold: f64,
    /// Whether the measurement passed its gate.
    pub pass: bool,
}

impl Verdict {
    /// A lower-bounded verdict: pass iff value ≥ threshold.
    pub fn at_least(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    /// An upper-bounded verdict: pass iff value ≤ threshold.
    pub fn at_most(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// Grid echo for the report.
#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub points: usize,
}

impl GridEcho {
    pub fn of(grid: &TimeGrid) -> Self {
        Self {
            h: grid.step(),
            t: grid.horizon(),
            points: grid.len(),
        }
    }
}

/// The complete report written to `report.json`. Field order is fixed by
/// the struct; map keys are sorted (BTreeMap); no timestamps — identical
/// inputs serialize to identical bytes.
#[derive(Debug, Serialize)]
pub struct Report {
    /// Scenario kind that produced this report.
    pub scenario: &'static str,
    /// The grid actually run (after CLI overrides).
    pub grid: GridEcho,
    /// Tolerance values actually used for the verdicts.
    pub tolerances: BTreeMap<&'static str, f64>,
    /// Named certification verdicts.
    pub verdicts: BTreeMap<String, Verdict>,
    /// Conjunction of all verdicts (exit 0 iff true).
    pub pass: bool,
    /// Scenario-specific measurements (residuals, tail bounds, syntheses).
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    /// The resolved scenario config, verbatim, after CLI overrides.
    pub config: serde_json::Value,
}

impl Report {
    pub fn new(scenario: &'static str, grid: &TimeGrid, config: serde_json::Value) -> Self {
        Self {
            scenario,
            grid: GridEcho::of(grid),
            tolerances: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            pass: true,
            details: serde_json::Value::Null,
            config,
        }
    }

    /// Record a verdict and fold it into the overall outcome.
    pub fn push_verdict(&mut self, name: impl Into<String>, verdict: Verdict) {
        self.pass = self.pass && verdict.pass;
        self.verdicts.insert(name.into(), verdict);
    }
}

/// Atomically write `bytes` to `dir/name` via a temp file in the same
/// directory (rename is atomic only within a filesystem).
pub fn atomic_write(dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("cannot write {name}"))?;
    let target = dir.join(name);
    tmp.persist(&target)
        .with_context(|| format!("cannot persist {}", target.display()))?;
    Ok(())
}

fn push_csv_row(out: &mut String, fields: &[f64]) {
    for (i, x) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        // 17 significant digits: enough to round-trip any f64 exactly
        out.push_str(&format!("{x:.16e}"));
    }
    out.push_str("\r\n");
}

/// Write `trace.csv`: per-step certification diagnostics, RFC-4180 (CRLF,
/// comma-separated, header row).
pub fn write_trace_csv(
    dir: &Path,
    grid: &TimeGrid,
    diagnostics: &[StepDiagnostics],
) -> anyhow::Result<()> {
    let mut out = String::with_capacity(32 + 96 * diagnostics.len());
    out.push_str("t,cp_defect,unitality_defect,choi_herm_residual\r\n");
    for (k, d) in diagnostics.iter().enumerate() {
        push_csv_row(
            &mut out,
            &[
                grid.time(k),
                d.cp_defect,
                d.unitality_defect,
                d.choi_herm_residual,
            ],
        );
    }
    atomic_write(dir, "trace.csv", out.as_bytes())
}

/// Write `kappa.csv`: the synthesized scalar kernel's regular samples
/// (the Dirac weight, if any, is in the report).
pub fn write_kappa_csv(dir: &Path, grid: &TimeGrid, regular: &[f64]) -> anyhow::Result<()> {
    let mut out = String::with_capacity(16 + 48 * regular.len());
    out.push_str("t,kappa\r\n");
    for (k, &v) in regular.iter().enumerate() {
        push_csv_row(&mut out, &[grid.time(k), v]);
    }
    atomic_write(dir, "kappa.csv", out.as_bytes())
}

/// Write `report.json` (pretty-printed, trailing newline).
pub fn write_report(dir: &Path, report: &Report) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(report).context("cannot serialize report")?;
    text.push('\n');
    atomic_write(dir, "report.json", text.as_bytes())
}
