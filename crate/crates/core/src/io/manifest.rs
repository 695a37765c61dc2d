use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Subcommand};
use crate::assembly::FOURIER_QUADRATURE_ORDER;
use crate::error::Result;
use crate::experiments::BasisSummary;
use crate::model::{build_lattice, LatticeVariant, GENERATOR};
use crate::observables::ClassificationThresholds;
use crate::spectral::{EnergyWindow, SolverOptions};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub basis: BasisSummary,
    pub quadrature_order: usize,
    pub generator: String,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCount {
    pub variant: LatticeVariant,
    pub x_interval: (f64, f64),
    pub sites: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub window: EnergyWindow,
    pub flux: f64,
    /// `config`, `flux-scan` or `asymmetric-walls`.
    pub flux_source: String,
    pub thresholds: ClassificationThresholds,
    pub lattices: Vec<LatticeCount>,
}

/// Everything needed to replay a run. Feeding the manifest back as a config
/// reproduces every CSV of the run byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub subcommand: Subcommand,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    /// Kept empty: no wall-clock value enters any artifact.
    pub timestamp: Option<String>,
    pub discretization: Option<Discretization>,
    pub derived: Option<Derived>,
    /// Per-L report directories of a sweep.
    pub children: Vec<String>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: Subcommand, config: RunConfig) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand,
            seeds: config.seed_values(),
            config,
            timestamp: None,
            discretization: None,
            derived: None,
            children: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn lattice_counts(length: f64, variants: &[LatticeVariant]) -> Result<Vec<LatticeCount>> {
    variants
        .iter()
        .map(|&v| {
            let l = build_lattice(v, length)?;
            Ok(LatticeCount {
                variant: v,
                x_interval: l.x_interval,
                sites: l.len(),
            })
        })
        .collect()
}

pub fn discretization(basis: &crate::assembly::Basis, solver: SolverOptions) -> Discretization {
    Discretization {
        basis: BasisSummary::from(basis),
        quadrature_order: FOURIER_QUADRATURE_ORDER,
        generator: GENERATOR.to_string(),
        solver,
    }
}
