use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::lattice::{build_lattice, LatticeSpec, LatticeVariant};
use crate::error::{invariant, Result};

/// Name recorded in manifests for the coupling generator.
pub const GENERATOR: &str = "ChaCha20Rng/rand_chacha-0.3/seed_from_u64/uniform[-1,1)-53bit";

/// Support radius of the local impurity bump.
pub const BUMP_RADIUS: f64 = 0.25;

/// Local impurity profile `V_loc·(1 − (4r)²)³` for `r < 1/4`, zero outside.
///
/// The profile and its first two derivatives vanish at `r = 1/4`.
pub fn eval_bump(dx: f64, dy: f64, v_loc: f64) -> f64 {
    let s = 1.0 - 16.0 * (dx * dx + dy * dy);
    if s <= 0.0 {
        0.0
    } else {
        v_loc * s * s * s
    }
}

/// Where a realization's couplings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingOrigin {
    Sampled,
    /// Couplings copied from a realization on a parent lattice.
    Restricted { parent: LatticeVariant },
    /// Couplings set explicitly (tests, hand-built fixtures).
    Explicit,
}

/// One sampled `ω`: lattice sites and their couplings `X_{n,m} ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub lattice: LatticeSpec,
    /// Aligned with `lattice.sites`.
    pub couplings: Vec<f64>,
    pub seed: u64,
    pub bump_height: f64,
    pub generator: String,
    pub origin: CouplingOrigin,
}

fn uniform_pm1(rng: &mut ChaCha20Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// Draws i.i.d. uniform couplings on `[-1, 1)`, one per site in lattice order.
pub fn sample_realization(seed: u64, lattice: &LatticeSpec, v0: f64) -> DisorderRealization {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let couplings = lattice.sites.iter().map(|_| uniform_pm1(&mut rng)).collect();
    DisorderRealization {
        lattice: lattice.clone(),
        couplings,
        seed,
        bump_height: v0,
        generator: GENERATOR.to_string(),
        origin: CouplingOrigin::Sampled,
    }
}

impl DisorderRealization {
    pub fn explicit(lattice: LatticeSpec, couplings: Vec<f64>, v0: f64) -> Result<Self> {
        if couplings.len() != lattice.len() {
            return invariant(format!(
                "{} couplings given for {} sites",
                couplings.len(),
                lattice.len()
            ));
        }
        if let Some(bad) = couplings.iter().find(|x| !(x.abs() <= 1.0)) {
            return invariant(format!("coupling {bad} outside [-1, 1]"));
        }
        Ok(Self {
            lattice,
            couplings,
            seed: 0,
            bump_height: v0,
            generator: "explicit".to_string(),
            origin: CouplingOrigin::Explicit,
        })
    }

    /// Same lattice with every coupling zero.
    pub fn zero(lattice: &LatticeSpec, v0: f64) -> Self {
        Self {
            lattice: lattice.clone(),
            couplings: vec![0.0; lattice.len()],
            seed: 0,
            bump_height: v0,
            generator: "zero".to_string(),
            origin: CouplingOrigin::Explicit,
        }
    }

    pub fn coupling(&self, site: (i64, i64)) -> Option<f64> {
        self.lattice
            .sites
            .binary_search(&site)
            .ok()
            .map(|i| self.couplings[i])
    }

    /// Restriction of `ω` to the sites of `sub` that are present in this lattice.
    pub fn restrict(&self, sub: &LatticeSpec) -> Self {
        let mut sites = Vec::new();
        let mut couplings = Vec::new();
        for &s in &sub.sites {
            if let Some(x) = self.coupling(s) {
                sites.push(s);
                couplings.push(x);
            }
        }
        Self {
            lattice: LatticeSpec {
                sites,
                ..sub.clone()
            },
            couplings,
            seed: self.seed,
            bump_height: self.bump_height,
            generator: self.generator.clone(),
            origin: CouplingOrigin::Restricted {
                parent: self.lattice.variant,
            },
        }
    }

    /// Rebuilds the couplings from the stored seed and lattice.
    pub fn regenerate(&self) -> Result<Self> {
        match &self.origin {
            CouplingOrigin::Sampled => Ok(sample_realization(
                self.seed,
                &self.lattice,
                self.bump_height,
            )),
            CouplingOrigin::Restricted { parent } => {
                let parent = build_lattice(*parent, self.lattice.length)?;
                let full = sample_realization(self.seed, &parent, self.bump_height);
                Ok(full.restrict(&self.lattice))
            }
            CouplingOrigin::Explicit => Ok(self.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bump_height == 0.0 || self.couplings.iter().all(|&x| x == 0.0)
    }

    /// Iterator over `(n, m, X_{n,m})`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.lattice
            .sites
            .iter()
            .zip(&self.couplings)
            .map(|(&(n, m), &x)| (n, m, x))
    }
}

/// Minimal-image displacement on a circle of circumference `length`, in
/// `[-length/2, length/2)`. Both steps are exact in floating point, so `d`
/// and `d + length` map to the same value whenever that sum is exact.
pub fn minimal_image(d: f64, length: f64) -> f64 {
    let r = d.rem_euclid(length);
    if r >= 0.5 * length {
        r - length
    } else {
        r
    }
}

/// `V_ω(x, y) = Σ X_{n,m} V(x − n, y − m)` with periodic y.
pub fn eval_disorder_potential(x: f64, y: f64, omega: &DisorderRealization, length: f64) -> f64 {
    let mut total = 0.0;
    for (n, m, coupling) in omega.iter() {
        let dx = x - n as f64;
        if dx.abs() >= BUMP_RADIUS || coupling == 0.0 {
            continue;
        }
        let dy = minimal_image(y - m as f64, length);
        total += coupling * eval_bump(dx, dy, omega.bump_height);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lattice::build_lattice;

    #[test]
    fn bump_values() {
        assert_eq!(eval_bump(0.0, 0.0, 1.0), 1.0);
        assert_eq!(eval_bump(0.25, 0.0, 1.0), 0.0);
        assert!((eval_bump(0.1, 0.2, 1.0) - 0.008).abs() < 1e-15);
        assert_eq!(eval_bump(0.3, 0.3, 1.0), 0.0);
    }

    #[test]
    fn bump_vanishes_smoothly_at_support_edge() {
        for r in [0.25 - 1e-9, 0.25 + 1e-9] {
            for angle in [0.0f64, 0.7, 2.1] {
                let v = eval_bump(r * angle.cos(), r * angle.sin(), 1.0);
                assert!(v.abs() < 1e-24, "r={r}: {v}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let a = sample_realization(7, &lat, 0.3);
        let b = sample_realization(7, &lat, 0.3);
        assert_eq!(a.couplings, b.couplings);
        assert!(a.couplings.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(a.bump_height, 0.3);
        assert_eq!(a.regenerate().unwrap(), a);
    }

    #[test]
    fn different_seeds_differ() {
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let a = sample_realization(1, &lat, 0.3);
        let b = sample_realization(2, &lat, 0.3);
        assert_eq!(a.couplings.len(), 24);
        assert!(a.couplings.iter().zip(&b.couplings).any(|(x, y)| x != y));
    }

    #[test]
    fn restriction_keeps_values_and_regenerates() {
        let full = build_lattice(LatticeVariant::GapExperiment, 9.0).unwrap();
        let strip = build_lattice(LatticeVariant::EdgeStripLeft, 9.0).unwrap();
        let omega = sample_realization(11, &full, 0.1);
        let sub = omega.restrict(&strip);
        assert!(!sub.lattice.is_empty());
        for (n, m, x) in sub.iter() {
            assert_eq!(omega.coupling((n, m)), Some(x));
        }
        assert_eq!(sub.regenerate().unwrap(), sub);
    }

    #[test]
    fn potential_single_site() {
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let couplings = lat
            .sites
            .iter()
            .map(|&s| if s == (0, 0) { 1.0 } else { 0.0 })
            .collect();
        let omega = DisorderRealization::explicit(lat.clone(), couplings, 0.3).unwrap();
        assert!((eval_disorder_potential(0.0, 0.0, &omega, 8.0) - 0.3).abs() < 1e-15);
        let zero = DisorderRealization::zero(&lat, 0.3);
        assert_eq!(eval_disorder_potential(0.05, 0.1, &zero, 8.0), 0.0);
    }

    #[test]
    fn potential_wraps_periodically() {
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let omega = sample_realization(3, &lat, 0.3);
        let a = eval_disorder_potential(0.0, 8.0 - 0.1, &omega, 8.0);
        let b = eval_disorder_potential(0.0, -0.1, &omega, 8.0);
        assert!((a - b).abs() < 1e-14);
        assert!(a != 0.0);
    }

    #[test]
    fn potential_bounded_and_periodic_on_grid() {
        for seed in 0..4 {
            let lat = build_lattice(LatticeVariant::GapExperiment, 8.0).unwrap();
            let omega = sample_realization(seed, &lat, 0.3);
            // dyadic sample points so that y + L is exact
            for i in 0..=144 {
                for j in 0..128 {
                    let x = -4.5 + i as f64 / 16.0;
                    let y = -4.0 + j as f64 / 16.0;
                    let v = eval_disorder_potential(x, y, &omega, 8.0);
                    assert!(v.abs() <= 0.3);
                    assert_eq!(v, eval_disorder_potential(x, y + 8.0, &omega, 8.0));
                }
            }
        }
    }
}
