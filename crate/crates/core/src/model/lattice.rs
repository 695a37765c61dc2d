use serde::{Deserialize, Serialize};

use super::disorder::BUMP_RADIUS;
use crate::error::{invariant, Result};

/// Which x-interval of the cylinder carries impurities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeVariant {
    /// `[-L/2 + ln L, L/2 - ln L]`: buffer strips of width `ln L` along both walls.
    BandExperiment,
    /// `[-L/2, L/2]`: impurities fill the whole region between the walls.
    GapExperiment,
    /// `[-L/2, -L/2 + 3√L/4 + 1]`.
    EdgeStripLeft,
    /// `[L/2 - 3√L/4 - 1, L/2]`.
    EdgeStripRight,
}

impl LatticeVariant {
    pub fn x_interval(self, length: f64) -> (f64, f64) {
        let half = 0.5 * length;
        let strip = 0.75 * length.sqrt() + 1.0;
        match self {
            LatticeVariant::BandExperiment => (-half + length.ln(), half - length.ln()),
            LatticeVariant::GapExperiment => (-half, half),
            LatticeVariant::EdgeStripLeft => (-half, -half + strip),
            LatticeVariant::EdgeStripRight => (half - strip, half),
        }
    }
}

/// Impurity sites `(n, m) ∈ ℤ²` with `n ∈ X` and `m ∈ [-L/2, L/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub variant: LatticeVariant,
    pub length: f64,
    pub x_interval: (f64, f64),
    /// Sorted lexicographically by `(n, m)`; this order fixes the sampling order.
    pub sites: Vec<(i64, i64)>,
}

impl LatticeSpec {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Distinct x-columns `n` that carry sites, ascending.
    pub fn columns(&self) -> Vec<i64> {
        let mut cols: Vec<i64> = self.sites.iter().map(|s| s.0).collect();
        cols.dedup();
        cols
    }

    pub fn contains(&self, site: (i64, i64)) -> bool {
        self.sites.binary_search(&site).is_ok()
    }
}

/// Integer y-coordinates in the half-open period `[-L/2, L/2)`.
pub fn y_sites(length: f64) -> Vec<i64> {
    let half = 0.5 * length;
    let lo = (-half).ceil() as i64;
    let mut hi = half.floor() as i64;
    if hi as f64 >= half {
        hi -= 1;
    }
    (lo..=hi).collect()
}

pub fn build_lattice(variant: LatticeVariant, length: f64) -> Result<LatticeSpec> {
    if !(length >= 4.0 && length.is_finite()) {
        return invariant(format!("L >= 4 required to build a lattice (L={length})"));
    }
    let (x_lo, x_hi) = variant.x_interval(length);
    let n_lo = x_lo.ceil() as i64;
    let n_hi = x_hi.floor() as i64;
    if n_hi < n_lo {
        return invariant(format!(
            "lattice {variant:?} is empty for L={length}: X = [{x_lo}, {x_hi}] holds no integer"
        ));
    }
    let ys = y_sites(length);
    let seam = length - (ys[ys.len() - 1] - ys[0]) as f64;
    if seam < 2.0 * BUMP_RADIUS {
        return invariant(format!(
            "L={length} puts the first and last y-sites {seam} apart across the seam; their bumps would overlap"
        ));
    }
    let sites = (n_lo..=n_hi)
        .flat_map(|n| ys.iter().map(move |&m| (n, m)))
        .collect();
    Ok(LatticeSpec {
        variant,
        length,
        x_interval: (x_lo, x_hi),
        sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_lattice_l8() {
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        assert_eq!(lat.len(), 24);
        assert_eq!(lat.columns(), vec![-1, 0, 1]);
        let ms: Vec<i64> = lat.sites.iter().filter(|s| s.0 == 0).map(|s| s.1).collect();
        assert_eq!(ms, (-4..=3).collect::<Vec<_>>());
    }

    #[test]
    fn gap_lattice_l8() {
        let lat = build_lattice(LatticeVariant::GapExperiment, 8.0).unwrap();
        assert_eq!(lat.len(), 72);
        assert_eq!(lat.columns(), (-4..=4).collect::<Vec<_>>());
    }

    #[test]
    fn edge_strips_l16() {
        let right = build_lattice(LatticeVariant::EdgeStripRight, 16.0).unwrap();
        assert_eq!(right.columns(), vec![4, 5, 6, 7, 8]);
        let left = build_lattice(LatticeVariant::EdgeStripLeft, 16.0).unwrap();
        assert_eq!(left.columns(), vec![-8, -7, -6, -5, -4]);
    }

    #[test]
    fn y_period_half_open() {
        assert_eq!(y_sites(8.0), (-4..=3).collect::<Vec<_>>());
        assert_eq!(y_sites(9.0), (-4..=4).collect::<Vec<_>>());
        assert_eq!(y_sites(12.0).len(), 12);
    }

    #[test]
    fn sites_unique_and_inside() {
        for &l in &[4.0, 8.0, 9.0, 12.5, 16.0] {
            for v in [
                LatticeVariant::BandExperiment,
                LatticeVariant::GapExperiment,
                LatticeVariant::EdgeStripLeft,
                LatticeVariant::EdgeStripRight,
            ] {
                let lat = build_lattice(v, l).unwrap();
                let (lo, hi) = lat.x_interval;
                for w in lat.sites.windows(2) {
                    assert!(w[0] < w[1]);
                }
                for &(n, m) in &lat.sites {
                    assert!(n as f64 >= lo && n as f64 <= hi);
                    assert!(m as f64 >= -l / 2.0 && (m as f64) < l / 2.0);
                }
            }
        }
    }

    #[test]
    fn rejects_short_cylinder() {
        assert!(build_lattice(LatticeVariant::BandExperiment, 3.5).is_err());
    }

    #[test]
    fn rejects_overlap_across_the_seam() {
        assert!(build_lattice(LatticeVariant::GapExperiment, 8.25).is_err());
        assert!(build_lattice(LatticeVariant::GapExperiment, 8.5).is_ok());
        assert!(build_lattice(LatticeVariant::GapExperiment, 9.0).is_ok());
    }
}
