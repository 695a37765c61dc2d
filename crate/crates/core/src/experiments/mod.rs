//! Ensemble experiments: band-window decomposition, gap-window edge
//! spectra, the flux scan and decay fits.

pub mod fit;
pub mod flux;
pub mod matching;
pub mod report;
pub mod theorem1;
pub mod theorem2;

use serde::{Deserialize, Serialize};

use crate::assembly::Basis;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::ClassificationThresholds;
use crate::spectral::{EnergyWindow, SolverOptions};

pub use fit::{fit_decay, DecayFit, DecayModel};
pub use flux::{default_flux_grid, hypothesis1_flux_scan, FluxRow, FluxScan};
pub use matching::{match_spectra, min_spacing, MatchedPair, SpectralMatch};
pub use report::{
    aggregate, median, quantile, BasisSummary, EnsembleAggregate, ExperimentKind, ExperimentReport,
    FailureRecord, RealizationRecord, StateRow, StateSet,
};
pub use theorem1::theorem1_run;
pub use theorem2::theorem2_run;

/// Slice amplitude below this fraction of the single-mode baseline counts as suppressed.
pub const SLICE_RATIO_MAX: f64 = 1e-2;

/// Everything an ensemble run needs besides the seeds.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub params: ModelParams,
    pub basis: Basis,
    pub window: EnergyWindow,
    pub solver: SolverOptions,
    pub thresholds: ClassificationThresholds,
    pub workers: usize,
}

/// Runs `f` over the seeds on a pool of `workers` threads; output keeps seed order.
pub(crate) fn run_pool<T: Send>(
    workers: usize,
    seeds: &[u64],
    f: impl Fn(u64) -> T + Sync + Send,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Linalg(format!("worker pool: {e}")))?;
    Ok(pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()))
}

/// Lower floor for matching caps, so exact cases at solver resolution still pair.
pub(crate) fn cap_floor(tol: f64) -> f64 {
    10.0 * tol
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct LabeledLevel {
    pub energy: f64,
    pub side: crate::model::WallSide,
    pub current: f64,
}
