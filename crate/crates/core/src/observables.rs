//! Current, position moments and the slice diagnostic of eigenstates, and the
//! edge/bulk classification built on them.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::assembly::{AssembledOperator, Basis};
use crate::error::{invariant, Result};
use crate::spectral::EigenRecord;

/// Accepted deviation of `‖ψ‖` from one.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    EdgeLeft,
    EdgeRight,
    Bulk,
    Ambiguous,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::EdgeLeft => "edge_left",
            Classification::EdgeRight => "edge_right",
            Classification::Bulk => "bulk",
            Classification::Ambiguous => "ambiguous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "edge_left" => Some(Self::EdgeLeft),
            "edge_right" => Some(Self::EdgeRight),
            "bulk" => Some(Self::Bulk),
            "ambiguous" => Some(Self::Ambiguous),
            _ => None,
        }
    }

    pub fn is_edge(self) -> bool {
        matches!(self, Self::EdgeLeft | Self::EdgeRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationThresholds {
    pub edge_min: f64,
    pub bulk_max: f64,
}

impl ClassificationThresholds {
    /// `edge_min = 0.1·√B`, `bulk_max = 10⁻³·√B`.
    pub fn default_for(b_field: f64) -> Self {
        let s = b_field.sqrt();
        Self {
            edge_min: 0.1 * s,
            bulk_max: 1e-3 * s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.bulk_max && self.bulk_max < self.edge_min) {
            return invariant(format!(
                "thresholds require 0 < bulk_max < edge_min (bulk_max={}, edge_min={})",
                self.bulk_max, self.edge_min
            ));
        }
        Ok(())
    }
}

/// Label from the current alone; the left wall carries negative current.
pub fn classify_state(current: f64, t: &ClassificationThresholds) -> Classification {
    let a = current.abs();
    if a >= t.edge_min {
        if current < 0.0 {
            Classification::EdgeLeft
        } else {
            Classification::EdgeRight
        }
    } else if a <= t.bulk_max {
        Classification::Bulk
    } else {
        Classification::Ambiguous
    }
}

fn check_norm(vector: &[C64]) -> Result<()> {
    let n: f64 = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return invariant(format!("state is not normalized (norm = {n:.3e})"));
    }
    Ok(())
}

/// `⟨ψ, v ψ⟩` for a diagonal velocity in the same mode-major layout.
pub fn current(vector: &[C64], velocity: &[f64]) -> Result<f64> {
    if vector.len() != velocity.len() {
        return invariant(format!(
            "state has {} coefficients but velocity has {}",
            vector.len(),
            velocity.len()
        ));
    }
    check_norm(vector)?;
    let form: C64 = vector
        .iter()
        .zip(velocity)
        .map(|(z, v)| z.conj() * (z * v))
        .sum();
    if form.im.abs() > 1e-10 {
        return invariant(format!("current form has imaginary part {:e}", form.im));
    }
    Ok(form.re)
}

/// `(⟨x⟩, √(⟨x²⟩ - ⟨x⟩²))`.
pub fn x_centroid_and_spread(vector: &[C64], basis: &Basis) -> Result<(f64, f64)> {
    check_norm(vector)?;
    let n_x = basis.n_x();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (idx, z) in vector.iter().enumerate() {
        let x = basis.x[idx % n_x];
        let p = z.norm_sqr();
        m1 += p * x;
        m2 += p * x * x;
    }
    let spread = (m2 - m1 * m1).max(0.0).sqrt();
    Ok((m1.clamp(basis.x_min(), basis.x_max()), spread))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostic {
    /// `min_y max_x |ψ(x, y)|`.
    pub min_slice: f64,
    pub y_bar: f64,
    /// `max_x |∂_y ψ(x, ȳ)|`.
    pub dy_slice: f64,
    /// `max_x |ψ|` of a single-mode state with the same x-density.
    pub baseline: f64,
}

struct SliceField<'a> {
    coeffs: &'a [C64],
    k: Vec<f64>,
    n_x: usize,
    scale: f64,
}

impl SliceField<'_> {
    /// `max_x |ψ(x, y)|` and, with `derivative`, `max_x |∂_y ψ(x, y)|`.
    fn eval(&self, y: f64, derivative: bool) -> f64 {
        let phases: Vec<C64> = self
            .k
            .iter()
            .map(|&k| {
                let e = C64::from_polar(1.0, k * y);
                if derivative {
                    e * C64::new(0.0, k)
                } else {
                    e
                }
            })
            .collect();
        let mut best = 0.0f64;
        let mut acc = vec![C64::new(0.0, 0.0); self.n_x];
        for (j, ph) in phases.iter().enumerate() {
            let row = &self.coeffs[j * self.n_x..(j + 1) * self.n_x];
            for (a, c) in acc.iter_mut().zip(row) {
                *a += c * ph;
            }
        }
        for a in &acc {
            best = best.max(a.norm_sqr());
        }
        best.sqrt() * self.scale
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Reconstructs `ψ(x_i, y)` on `y_samples` equispaced values in `[-L/2, L/2)`,
/// then refines the minimizing slice by golden-section search on the
/// neighbouring bracket. The continuum normalization `∫|ψ|² = 1` is used.
pub fn min_slice_amplitude(vector: &[C64], basis: &Basis, y_samples: usize) -> Result<SliceDiagnostic> {
    check_norm(vector)?;
    let modes = basis.n_modes();
    if y_samples < 4 * modes {
        return invariant(format!(
            "y_samples >= 4*(2J+1) = {} required (got {y_samples})",
            4 * modes
        ));
    }
    let length = basis.length;
    let field = SliceField {
        coeffs: vector,
        k: basis.k_values(),
        n_x: basis.n_x(),
        scale: 1.0 / (length * basis.dx).sqrt(),
    };
    let step = length / y_samples as f64;
    let ys: Vec<f64> = (0..y_samples).map(|s| -0.5 * length + s as f64 * step).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| field.eval(y, false)).collect();
    let (imin, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });

    let (mut a, mut b) = (ys[imin] - step, ys[imin] + step);
    let mut best = (ys[imin], vals[imin]);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = field.eval(c, false);
    let mut fd = field.eval(d, false);
    for _ in 0..60 {
        if b - a < 1e-10 * length {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = field.eval(c, false);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = field.eval(d, false);
        }
    }
    for (y, f) in [(c, fc), (d, fd)] {
        if f < best.1 {
            best = (y, f);
        }
    }
    // report ȳ inside the fundamental cell
    let y_bar = best.0 - length * ((best.0 + 0.5 * length) / length).floor();

    let n_x = basis.n_x();
    let mut density = vec![0.0; n_x];
    for (idx, z) in vector.iter().enumerate() {
        density[idx % n_x] += z.norm_sqr();
    }
    let baseline = density.iter().fold(0.0f64, |m, &p| m.max(p)).sqrt() * field.scale;

    Ok(SliceDiagnostic {
        min_slice: best.1,
        y_bar,
        dy_slice: field.eval(best.0, true),
        baseline,
    })
}

/// Default slice resolution: four samples per mode.
pub fn default_y_samples(basis: &Basis) -> usize {
    4 * basis.n_modes()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub energy: f64,
    pub current: f64,
    pub x_centroid: f64,
    pub x_spread: f64,
    pub min_slice: f64,
    pub y_bar: f64,
    pub dy_slice: f64,
    pub baseline: f64,
    pub classification: Classification,
}

pub fn diagnose(
    record: &EigenRecord,
    op: &AssembledOperator,
    thresholds: &ClassificationThresholds,
) -> Result<StateDiagnostics> {
    let j = current(&record.vector, &op.velocity)?;
    let (x_centroid, x_spread) = x_centroid_and_spread(&record.vector, &op.basis)?;
    let slice = min_slice_amplitude(&record.vector, &op.basis, default_y_samples(&op.basis))?;
    Ok(StateDiagnostics {
        energy: record.energy,
        current: j,
        x_centroid,
        x_spread,
        min_slice: slice.min_slice,
        y_bar: slice.y_bar,
        dy_slice: slice.dy_slice,
        baseline: slice.baseline,
        classification: classify_state(j, thresholds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis() -> Basis {
        Basis::new(6.0, 129, 8, 8.0, 3.0).unwrap()
    }

    fn normalized(mut v: Vec<C64>) -> Vec<C64> {
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
        v
    }

    #[test]
    fn classification_examples() {
        let t = ClassificationThresholds {
            edge_min: 0.1,
            bulk_max: 1e-3,
        };
        assert_eq!(classify_state(-0.8, &t), Classification::EdgeLeft);
        assert_eq!(classify_state(0.8, &t), Classification::EdgeRight);
        assert_eq!(classify_state(1e-7, &t), Classification::Bulk);
        assert_eq!(classify_state(0.01, &t), Classification::Ambiguous);
        assert!(ClassificationThresholds { edge_min: 0.1, bulk_max: 0.2 }.validate().is_err());
    }

    #[test]
    fn delta_vector_moments() {
        let b = basis();
        let mut v = vec![C64::new(0.0, 0.0); b.dim()];
        v[b.index(3, 40)] = C64::new(0.0, 1.0);
        let (c, s) = x_centroid_and_spread(&v, &b).unwrap();
        assert_eq!(c, b.x[40]);
        assert!(s < 1e-12);
    }

    #[test]
    fn rejects_unnormalized() {
        let b = basis();
        let v = vec![C64::new(1.0, 0.0); b.dim()];
        assert!(current(&v, &vec![0.0; b.dim()]).is_err());
    }

    #[test]
    fn single_mode_slice_is_flat() {
        let b = basis();
        let profile: Vec<f64> = b.x.iter().map(|x| (-x * x).exp()).collect();
        let mut v = vec![C64::new(0.0, 0.0); b.dim()];
        for (i, p) in profile.iter().enumerate() {
            v[b.index(5, i)] = C64::new(*p, 0.0);
        }
        let v = normalized(v);
        let d = min_slice_amplitude(&v, &b, default_y_samples(&b)).unwrap();
        let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max) / (8.0 * b.dx).sqrt();
        assert!((d.min_slice - peak).abs() < 1e-12 * peak);
        assert!((d.baseline - peak).abs() < 1e-12 * peak);
    }

    #[test]
    fn two_mode_minimum_against_fine_grid() {
        let b = basis();
        let phi: Vec<f64> = b.x.iter().map(|x| (-(x - 0.3) * (x - 0.3)).exp()).collect();
        let mut v = vec![C64::new(0.0, 0.0); b.dim()];
        for (i, p) in phi.iter().enumerate() {
            v[b.index(8, i)] = C64::new(*p, 0.0);
            v[b.index(10, i)] = C64::new(*p, 0.0) * C64::from_polar(1.0, 0.4);
        }
        let v = normalized(v);
        let d = min_slice_amplitude(&v, &b, default_y_samples(&b)).unwrap();
        // brute force on a fine y grid
        let ks = b.k_values();
        let scale = 1.0 / (8.0 * b.dx).sqrt();
        let mut brute = f64::INFINITY;
        let n = 200_000;
        for s in 0..n {
            let y = -4.0 + 8.0 * s as f64 / n as f64;
            let mut m = 0.0f64;
            for i in 0..b.n_x() {
                let z = v[b.index(8, i)] * C64::from_polar(1.0, ks[8] * y)
                    + v[b.index(10, i)] * C64::from_polar(1.0, ks[10] * y);
                m = m.max(z.norm());
            }
            brute = brute.min(m * scale);
        }
        // equal weights: slices cancel completely where the phases oppose
        assert!(brute < 1e-4);
        assert!(d.min_slice <= brute + 1e-6, "{} vs {brute}", d.min_slice);
        // relative phase at ȳ is π
        let rel = (ks[10] - ks[8]) * d.y_bar + 0.4;
        assert!((rel.cos() + 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn current_is_phase_invariant(seed in 0u64..1000, theta in 0.0f64..std::f64::consts::TAU) {
            let b = basis();
            let params = crate::model::ModelParams::new(1.5, 8.0, 0.0);
            let vel = crate::assembly::assemble_velocity(&b, &params);
            let v: Vec<C64> = (0..b.dim())
                .map(|i| {
                    let t = (i as f64 + seed as f64 * 0.37).sin();
                    C64::new(t, (1.7 * i as f64).cos() * 0.5)
                })
                .collect();
            let v = normalized(v);
            let w: Vec<C64> = v.iter().map(|z| z * C64::from_polar(1.0, theta)).collect();
            let a = current(&v, &vel).unwrap();
            let c = current(&w, &vel).unwrap();
            prop_assert!((a - c).abs() <= 1e-12);
        }

        #[test]
        fn labels_recompute_from_current(j in -2.0f64..2.0, scale in 0.5f64..3.0) {
            let t = ClassificationThresholds::default_for(scale);
            let l = classify_state(j, &t);
            prop_assert_eq!(Classification::parse(l.as_str()), Some(l));
            prop_assert_eq!(classify_state(j, &t), l);
        }
    }
}
