use serde::{Deserialize, Serialize};

use crate::assembly::Basis;
use crate::model::ModelParams;
use crate::observables::{Classification, StateDiagnostics};
use crate::spectral::EnergyWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Theorem1,
    Theorem2,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::Theorem2 => "theorem2",
        }
    }
}

/// Which set of the decomposition a window eigenvalue was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSet {
    Left,
    Right,
    Bulk,
    /// Gap-window eigenvalue without an edge partner.
    Unmatched,
}

impl StateSet {
    pub fn as_str(self) -> &'static str {
        match self {
            StateSet::Left => "left",
            StateSet::Right => "right",
            StateSet::Bulk => "bulk",
            StateSet::Unmatched => "unmatched",
        }
    }

    pub fn is_edge(self) -> bool {
        matches!(self, StateSet::Left | StateSet::Right)
    }
}

/// One window eigenstate of `H_ω` with its assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub seed: u64,
    pub energy: f64,
    pub set: StateSet,
    pub reference_energy: Option<f64>,
    pub shift: Option<f64>,
    pub current: f64,
    pub reference_current: Option<f64>,
    pub x_centroid: f64,
    pub x_spread: f64,
    pub min_slice: f64,
    pub y_bar: f64,
    pub dy_slice: f64,
    pub baseline: f64,
    pub label: Classification,
    pub residual: f64,
}

impl StateRow {
    pub fn from_diagnostics(seed: u64, set: StateSet, d: &StateDiagnostics, residual: f64) -> Self {
        Self {
            seed,
            energy: d.energy,
            set,
            reference_energy: None,
            shift: None,
            current: d.current,
            reference_current: None,
            x_centroid: d.x_centroid,
            x_spread: d.x_spread,
            min_slice: d.min_slice,
            y_bar: d.y_bar,
            dy_slice: d.dy_slice,
            baseline: d.baseline,
            label: d.classification,
            residual,
        }
    }

    pub fn slice_ratio(&self) -> f64 {
        self.min_slice / self.baseline
    }
}

/// Per-realization summary; every field is recomputable from the state rows
/// of the same seed plus the reference counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub seed: u64,
    pub window_count: usize,
    pub n_left: usize,
    pub n_right: usize,
    /// Σ_b for the band experiment, unmatched eigenvalues for the gap experiment.
    pub n_bulk: usize,
    pub n_reference: usize,
    pub n_unmatched_reference: usize,
    pub cap: f64,
    pub median_shift: Option<f64>,
    pub max_shift: Option<f64>,
    pub min_edge_current: Option<f64>,
    pub max_bulk_current: Option<f64>,
    pub dist_bulk_edge: Option<f64>,
    pub bulk_reference_count: Option<usize>,
    pub bulk_matched: Option<usize>,
    pub bulk_match_max_shift: Option<f64>,
    pub max_current_deviation: Option<f64>,
    pub max_slice_ratio: Option<f64>,
    pub currents_ok: bool,
    pub slice_ok: bool,
    pub warnings: usize,
}

impl RealizationRecord {
    pub fn partition_ok(&self) -> bool {
        self.n_left + self.n_right + self.n_bulk == self.window_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnsembleAggregate {
    pub seeds_run: usize,
    pub seeds_failed: usize,
    pub pooled_median_shift: Option<f64>,
    pub max_shift_q10: Option<f64>,
    pub max_shift_q50: Option<f64>,
    pub max_shift_q90: Option<f64>,
    pub fraction_partition_ok: Option<f64>,
    pub fraction_currents_ok: Option<f64>,
    pub fraction_exhaustive: Option<f64>,
    pub fraction_slice_ok: Option<f64>,
    pub max_bulk_current: Option<f64>,
    pub min_edge_current: Option<f64>,
    pub mean_window_count: Option<f64>,
    pub total_bulk_states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub n_x: usize,
    pub dx: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub j_max: i64,
    pub n_modes: usize,
    pub dim: usize,
}

impl From<&Basis> for BasisSummary {
    fn from(b: &Basis) -> Self {
        Self {
            n_x: b.n_x(),
            dx: b.dx,
            x_min: b.x_min(),
            x_max: b.x_max(),
            j_max: b.j_max,
            n_modes: b.n_modes(),
            dim: b.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub params: ModelParams,
    pub window: EnergyWindow,
    pub basis: BasisSummary,
    pub seeds: Vec<u64>,
    pub records: Vec<RealizationRecord>,
    pub states: Vec<StateRow>,
    pub failures: Vec<FailureRecord>,
    pub aggregate: EnsembleAggregate,
    pub notes: Vec<String>,
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

fn fraction(records: &[RealizationRecord], f: impl Fn(&RealizationRecord) -> bool) -> Option<f64> {
    if records.is_empty() {
        None
    } else {
        Some(records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64)
    }
}

/// Ensemble statistics recomputed from raw rows.
pub fn aggregate(
    records: &[RealizationRecord],
    states: &[StateRow],
    failures: &[FailureRecord],
) -> EnsembleAggregate {
    let shifts: Vec<f64> = states
        .iter()
        .filter(|s| s.set.is_edge())
        .filter_map(|s| s.shift)
        .collect();
    let max_shifts: Vec<f64> = records.iter().filter_map(|r| r.max_shift).collect();
    let bulk: Vec<f64> = states
        .iter()
        .filter(|s| s.set == StateSet::Bulk)
        .map(|s| s.current.abs())
        .collect();
    let edge: Vec<f64> = states
        .iter()
        .filter(|s| s.set.is_edge())
        .map(|s| s.current.abs())
        .collect();
    EnsembleAggregate {
        seeds_run: records.len(),
        seeds_failed: failures.len(),
        pooled_median_shift: median(&shifts),
        max_shift_q10: quantile(&max_shifts, 0.1),
        max_shift_q50: quantile(&max_shifts, 0.5),
        max_shift_q90: quantile(&max_shifts, 0.9),
        fraction_partition_ok: fraction(records, |r| r.partition_ok()),
        fraction_currents_ok: fraction(records, |r| r.currents_ok),
        fraction_exhaustive: fraction(records, |r| r.n_bulk == 0),
        fraction_slice_ok: fraction(records, |r| r.slice_ok),
        max_bulk_current: bulk.iter().copied().reduce(f64::max),
        min_edge_current: edge.iter().copied().reduce(f64::min),
        mean_window_count: if records.is_empty() {
            None
        } else {
            Some(records.iter().map(|r| r.window_count as f64).sum::<f64>() / records.len() as f64)
        },
        total_bulk_states: bulk.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&v), Some(2.5));
        assert_eq!(quantile(&v, 0.0), Some(1.0));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert_eq!(median(&[]), None);
    }
}
