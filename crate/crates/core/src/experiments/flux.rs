use serde::{Deserialize, Serialize};

use crate::assembly::{Basis, WallSet};
use crate::error::{invariant, Result};
use crate::model::{ModelParams, WallSide};
use crate::spectral::{fiber_window_states, EnergyWindow, StateFilter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub flux: f64,
    pub n_left: usize,
    pub n_right: usize,
    /// `dist(σ(H_ℓ⁰) ∩ Δ, σ(H_r⁰) ∩ Δ)`, absent when either side is empty.
    pub min_spacing: Option<f64>,
    pub scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxScan {
    pub length: f64,
    pub window: EnergyWindow,
    pub rows: Vec<FluxRow>,
    pub best_flux: Option<f64>,
    pub best_scaled: Option<f64>,
}

/// Default scan grid `0, 0.025, …, 0.5`; the spectra are periodic in the
/// flux with period 1 and symmetric about 0.
pub fn default_flux_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.025).collect()
}

/// Cross spacing of the pure-edge window spectra, scaled by L, per flux value.
pub fn hypothesis1_flux_scan(
    params: &ModelParams,
    basis: &Basis,
    window: &EnergyWindow,
    flux_grid: &[f64],
) -> Result<FluxScan> {
    if !params.walls_symmetric() {
        return invariant("flux scan requires symmetric walls (U_l(x) = U_r(-x))");
    }
    let mut rows = Vec::with_capacity(flux_grid.len());
    for &flux in flux_grid {
        let p = params.clone().with_flux(flux);
        let side = |s: WallSide| -> Result<Vec<f64>> {
            Ok(fiber_window_states(basis, &p, WallSet::only(s), window, StateFilter::Side(s))?
                .into_iter()
                .map(|st| st.energy)
                .collect())
        };
        let left = side(WallSide::Left)?;
        let right = side(WallSide::Right)?;
        let min_spacing = left
            .iter()
            .flat_map(|a| right.iter().map(move |b| (a - b).abs()))
            .reduce(f64::min);
        rows.push(FluxRow {
            flux,
            n_left: left.len(),
            n_right: right.len(),
            min_spacing,
            scaled: min_spacing.map(|d| d * params.length),
        });
    }
    let best = rows
        .iter()
        .filter_map(|r| r.scaled.map(|s| (r.flux, s)))
        .fold(None, |acc: Option<(f64, f64)>, (f, s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((f, s)),
        });
    Ok(FluxScan {
        length: params.length,
        window: *window,
        rows,
        best_flux: best.map(|b| b.0),
        best_scaled: best.map(|b| b.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flux_is_degenerate_and_quarter_flux_is_not() {
        let params = ModelParams::new(2.0, 8.0, 0.3);
        let window = EnergyWindow::band(&params).unwrap();
        let basis = Basis::auto(&params, window.hi, Default::default()).unwrap();
        let scan = hypothesis1_flux_scan(&params, &basis, &window, &[0.0, 0.25, 0.5]).unwrap();
        assert!(scan.rows[0].scaled.unwrap() < 1e-8);
        assert!(scan.rows[1].scaled.unwrap() > 1e-3);
        // half a flux quantum maps the left spectrum onto the right one again
        assert!(scan.rows[2].scaled.unwrap() < 1e-8);
        assert_eq!(scan.best_flux, Some(0.25));
    }
}
