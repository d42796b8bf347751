// Copyright 2026 memkernel Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration schemas.
//!
//! One JSON document per run. Every scenario shares a `grid` block and an
//! optional `tolerances` block; the payload field is scenario-specific and
//! reuses the library's JSON schemas. All structs reject unknown fields so
//! typos fail loudly with a JSON-path message instead of being ignored.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use memkernel::json::{
    DilationJson, KernelSpecJson, MemoryFunctionJson, MixtureJson, TimeMixtureJson,
};

/// Uniform run grid: step `h` and horizon `T` (t_k = k·h up to T).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Grid step h > 0.
    pub h: f64,
    /// Horizon T ≥ h.
    #[serde(rename = "T")]
    pub t: f64,
}

impl GridConfig {
    /// Validate h > 0, T ≥ h (after CLI overrides).
    pub fn validate(&self) -> anyhow::Result<()> {
        if !self.h.is_finite() || self.h <= 0.0 {
            bail!("grid step h must be positive and finite, got {}", self.h);
        }
        if !self.t.is_finite() || self.t < self.h {
            bail!(
                "grid horizon T must satisfy T ≥ h, got T = {}, h = {}",
                self.t,
                self.h
            );
        }
        Ok(())
    }
}

/// Optional verdict-tolerance overrides; absent fields use the library
/// defaults (CP 1e−7, unitality 1e−7, resolvent 1e−3).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Lower gate for CP defects (min λ_min ≥ −cp).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp: Option<f64>,
    /// Upper gate for unitality defects.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitality: Option<f64>,
    /// Upper gate for Laplace resolvent residuals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<f64>,
}

/// `evolve`: solve a kernel specification and certify the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub kernel: KernelSpecJson,
}

/// `certify`: run the CP sufficiency and memory-kernel CP checks. Unlike
/// `evolve`, the kernel is *not* gated at construction — certification is
/// the diagnostic path for suspect kernels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub kernel: KernelSpecJson,
}

/// `kernel-from-f`: synthesize κ from a memory function.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFromFConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub f: MemoryFunctionJson,
}

/// `mixture`: evolve a convex mixture of GKSL semigroups.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub mixture: MixtureJson,
}

/// `time-mixture`: evolve a time-dependent mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeMixtureConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub time_mixture: TimeMixtureJson,
}

/// `dilate`: reduce a composite semigroup to the system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilateConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub dilation: DilationJson,
}

/// The evolution a `laplace-check` extracts its derivative data from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaplaceSource {
    /// A kernel specification solved by the Volterra marcher.
    Kernel { kernel: KernelSpecJson },
    /// A convex mixture of GKSL semigroups.
    Mixture { mixture: MixtureJson },
    /// A reduced system⊗environment semigroup.
    Dilation { dilation: DilationJson },
}

/// `laplace-check`: tabulate an evolution, extract G, recover L̂_p, and
/// verify the resolvent identity at each requested p.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceCheckConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Laplace sample points (each finite and > 0).
    pub p: Vec<f64>,
    pub source: LaplaceSource,
}

/// Load and deserialize a config file, reporting schema violations with the
/// offending JSON path.
pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        anyhow::anyhow!(
            "{}: invalid config at `{}`: {}",
            path.display(),
            err.path(),
            err.inner()
        )
    })
}
