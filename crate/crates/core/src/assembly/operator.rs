use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;

use super::basis::Basis;
use super::fiber::{check_wall_dominance, fiber_unchecked, fiber_velocity, WallSet};
use super::quadrature::gauss_legendre;
use crate::error::{invariant, Result};
use crate::model::{DisorderRealization, ModelParams, BUMP_RADIUS};

/// Order of the Gauss–Legendre rule for the bump's y-Fourier coefficients.
pub const FOURIER_QUADRATURE_ORDER: usize = 32;

/// Mode coupling at one grid row: a Hermitian Toeplitz block
/// `C[j][j'] = t(j - j')` stored by its generator `t(Δ)`, `Δ = 0..=2J`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowCoupling {
    pub row: usize,
    /// `t(Δ)` for `Δ ≥ 0`; `t(-Δ) = conj(t(Δ))`.
    pub generator: Vec<C64>,
}

impl RowCoupling {
    pub fn entry(&self, j: usize, jp: usize) -> C64 {
        if j >= jp {
            self.generator[j - jp]
        } else {
            self.generator[jp - j].conj()
        }
    }

    /// Dense `M×M` block.
    pub fn dense(&self, n_modes: usize) -> Mat<C64> {
        Mat::from_fn(n_modes, n_modes, |j, jp| self.entry(j, jp))
    }
}

/// Sparse Hermitian Hamiltonian in the mixed Fourier × grid basis:
/// per-mode tridiagonal fibers plus Toeplitz mode couplings on the grid rows
/// crossed by impurities.
#[derive(Debug, Clone)]
pub struct MixedHamiltonian {
    pub n_x: usize,
    pub n_modes: usize,
    /// Diagonal entries, mode-major.
    pub diag: Vec<f64>,
    /// Constant hopping `-1/dx²` between neighbouring grid points.
    pub hop: f64,
    /// Couplings sorted by row.
    pub couplings: Vec<RowCoupling>,
}

impl MixedHamiltonian {
    pub fn dim(&self) -> usize {
        self.n_x * self.n_modes
    }

    pub fn coupling_at(&self, row: usize) -> Option<&RowCoupling> {
        self.couplings
            .binary_search_by_key(&row, |c| c.row)
            .ok()
            .map(|i| &self.couplings[i])
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        let n = self.n_x;
        for mode in 0..self.n_modes {
            let base = mode * n;
            for i in 0..n {
                let mut acc = v[base + i] * self.diag[base + i];
                if i > 0 {
                    acc += v[base + i - 1] * self.hop;
                }
                if i + 1 < n {
                    acc += v[base + i + 1] * self.hop;
                }
                out[base + i] = acc;
            }
        }
        let m = self.n_modes;
        let mut row_in = vec![C64::new(0.0, 0.0); m];
        for c in &self.couplings {
            for (jp, slot) in row_in.iter_mut().enumerate() {
                *slot = v[jp * n + c.row];
            }
            for j in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for (jp, x) in row_in.iter().enumerate() {
                    acc += c.entry(j, jp) * x;
                }
                out[j * n + c.row] += acc;
            }
        }
    }

    /// Coordinate list `(row, col, value)` of all stored nonzeros.
    pub fn to_coo(&self) -> Vec<(usize, usize, C64)> {
        let n = self.n_x;
        let mut entries = Vec::new();
        let mut coupled = vec![false; n];
        for c in &self.couplings {
            coupled[c.row] = true;
        }
        for mode in 0..self.n_modes {
            let base = mode * n;
            for i in 0..n {
                if i > 0 {
                    entries.push((base + i, base + i - 1, C64::new(self.hop, 0.0)));
                }
                if !coupled[i] {
                    entries.push((base + i, base + i, C64::new(self.diag[base + i], 0.0)));
                }
                if i + 1 < n {
                    entries.push((base + i, base + i + 1, C64::new(self.hop, 0.0)));
                }
            }
        }
        for c in &self.couplings {
            for j in 0..self.n_modes {
                for jp in 0..self.n_modes {
                    let mut val = c.entry(j, jp);
                    if j == jp {
                        val += self.diag[j * n + c.row];
                    }
                    entries.push((j * n + c.row, jp * n + c.row, val));
                }
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        entries
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let dim = self.dim();
        let mut m = Mat::<C64>::zeros(dim, dim);
        for (r, c, v) in self.to_coo() {
            m[(r, c)] += v;
        }
        m
    }
}

/// One assembled `H` together with its velocity operator.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub hamiltonian: MixedHamiltonian,
    /// Diagonal of `v_y = 2(p_y - Bx)`, mode-major.
    pub velocity: Vec<f64>,
    pub basis: Basis,
    pub params: ModelParams,
    pub walls: WallSet,
    pub realization: Option<DisorderRealization>,
    /// Free-form identity used in eigen-record provenance.
    pub label: String,
}

impl AssembledOperator {
    /// `H_0 + selected walls + V_ω` on `basis`.
    pub fn build(
        basis: &Basis,
        params: &ModelParams,
        walls: WallSet,
        realization: Option<&DisorderRealization>,
        label: impl Into<String>,
    ) -> Result<Self> {
        params.validate()?;
        basis.check_modes()?;
        check_wall_dominance(basis, params, walls)?;
        if let Some(omega) = realization {
            if omega.lattice.length != params.length {
                return invariant(format!(
                    "realization lattice built for L={} but params have L={}",
                    omega.lattice.length, params.length
                ));
            }
            if omega.bump_height > params.v0 {
                return invariant("bump height exceeds V0");
            }
        }
        let n = basis.n_x();
        let m = basis.n_modes();
        let mut diag = Vec::with_capacity(n * m);
        for mode in 0..m {
            diag.extend(fiber_unchecked(basis.k(mode), basis, params, walls, None).diag);
        }
        let couplings = match realization {
            Some(omega) if !omega.is_zero() => disorder_couplings(basis, omega),
            _ => Vec::new(),
        };
        Ok(Self {
            hamiltonian: MixedHamiltonian {
                n_x: n,
                n_modes: m,
                diag,
                hop: -1.0 / (basis.dx * basis.dx),
                couplings,
            },
            velocity: assemble_velocity(basis, params),
            basis: basis.clone(),
            params: params.clone(),
            walls,
            realization: realization.cloned(),
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Residual norm `‖Hψ - Eψ‖`.
    pub fn residual(&self, energy: f64, v: &[C64]) -> f64 {
        self.hamiltonian
            .apply(v)
            .iter()
            .zip(v)
            .map(|(hv, v)| (hv - v * energy).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Full `H_ω` with both walls.
pub fn assemble_full(
    omega: &DisorderRealization,
    basis: &Basis,
    params: &ModelParams,
) -> Result<AssembledOperator> {
    AssembledOperator::build(basis, params, WallSet::BOTH, Some(omega), "H_omega")
}

/// Diagonal of the velocity operator, mode-major.
pub fn assemble_velocity(basis: &Basis, params: &ModelParams) -> Vec<f64> {
    (0..basis.n_modes())
        .flat_map(|mode| fiber_velocity(basis.k(mode), basis, params))
        .collect()
}

/// `∫_{-w}^{w} (a - 16t²)³ cos(qt) dt`, `w = √a/4`: the y-Fourier transform of
/// one bump row at fixed x (without the height factor).
pub fn bump_row_transform(a: f64, q: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let w = 0.25 * a.sqrt();
    nodes
        .iter()
        .zip(weights)
        .map(|(s, wt)| {
            let t = w * s;
            let p = a - 16.0 * t * t;
            wt * p * p * p * (q * t).cos()
        })
        .sum::<f64>()
        * w
}

/// `V̂_{k,k'}(x_i) = (1/L) ∫ V_ω(x_i, y) e^{-i(k-k')y} dy` on every grid row that
/// crosses an impurity column.
pub fn disorder_couplings(basis: &Basis, omega: &DisorderRealization) -> Vec<RowCoupling> {
    let (nodes, weights) = gauss_legendre(FOURIER_QUADRATURE_ORDER);
    let length = basis.length;
    let n_delta = 2 * basis.j_max as usize + 1;
    let columns = omega.lattice.columns();

    // S_n(Δ) = Σ_m X_{n,m} e^{-i q_Δ m}
    let phase_sums: Vec<Vec<C64>> = columns
        .iter()
        .map(|&n| {
            (0..n_delta)
                .map(|delta| {
                    let q = 2.0 * PI * delta as f64 / length;
                    omega
                        .iter()
                        .filter(|s| s.0 == n)
                        .map(|(_, m, x)| C64::from_polar(x, -q * m as f64))
                        .sum()
                })
                .collect()
        })
        .collect();

    let scale = omega.bump_height / length;
    let mut out = Vec::new();
    for (row, &x) in basis.x.iter().enumerate() {
        let mut generator = vec![C64::new(0.0, 0.0); n_delta];
        let mut touched = false;
        for (ci, &n) in columns.iter().enumerate() {
            let d = x - n as f64;
            if d.abs() >= BUMP_RADIUS {
                continue;
            }
            let a = 1.0 - 16.0 * d * d;
            touched = true;
            for (delta, g) in generator.iter_mut().enumerate() {
                let q = 2.0 * PI * delta as f64 / length;
                *g += phase_sums[ci][delta] * (scale * bump_row_transform(a, q, &nodes, &weights));
            }
        }
        if touched {
            // the Δ = 0 entry sits on the diagonal and must be real
            generator[0].im = 0.0;
            out.push(RowCoupling { row, generator });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_lattice, sample_realization, LatticeVariant};

    fn small() -> (Basis, ModelParams) {
        let params = ModelParams::new(2.0, 8.0, 0.3);
        let basis = Basis::auto(&params, 2.3, Default::default()).unwrap();
        (basis, params)
    }

    #[test]
    fn zero_disorder_is_block_diagonal() {
        let (basis, params) = small();
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let omega = crate::model::DisorderRealization::zero(&lat, 0.3);
        let op = assemble_full(&omega, &basis, &params).unwrap();
        assert!(op.hamiltonian.is_block_diagonal());
        for (r, c, _) in op.hamiltonian.to_coo() {
            assert_eq!(r / basis.n_x(), c / basis.n_x());
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let (basis, params) = small();
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let omega = sample_realization(5, &lat, 0.3);
        let op = assemble_full(&omega, &basis, &params).unwrap();
        let coo = op.hamiltonian.to_coo();
        let lookup: std::collections::HashMap<(usize, usize), C64> =
            coo.iter().map(|&(r, c, v)| ((r, c), v)).collect();
        let mut worst = 0.0f64;
        for (&(r, c), v) in &lookup {
            let t = lookup.get(&(c, r)).copied().unwrap_or_default();
            worst = worst.max((v - t.conj()).norm());
        }
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn apply_matches_coo() {
        let (basis, params) = small();
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let omega = sample_realization(9, &lat, 0.3);
        let op = assemble_full(&omega, &basis, &params).unwrap();
        let v: Vec<C64> = (0..op.dim())
            .map(|i| C64::new((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let hv = op.hamiltonian.apply(&v);
        let mut reference = vec![C64::new(0.0, 0.0); op.dim()];
        for (r, c, val) in op.hamiltonian.to_coo() {
            reference[r] += val * v[c];
        }
        let err = hv
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn diagonal_shift_is_row_average() {
        let (basis, _) = small();
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let couplings = lat.sites.iter().map(|&s| if s == (0, 1) { 1.0 } else { 0.0 }).collect();
        let omega = crate::model::DisorderRealization::explicit(lat, couplings, 0.3).unwrap();
        let rows = disorder_couplings(&basis, &omega);
        assert!(!rows.is_empty());
        // rows of the other columns carry an all-zero generator
        let near: Vec<_> = rows.iter().filter(|rc| basis.x[rc.row].abs() < 0.25).collect();
        assert!(!near.is_empty());
        for rc in rows.iter().filter(|rc| basis.x[rc.row].abs() >= 0.25) {
            assert!(rc.generator.iter().all(|g| g.norm() == 0.0));
        }
        for rc in near {
            let x = basis.x[rc.row];
            // independent route: composite Simpson over one period of y
            let n = 20000;
            let h = 8.0 / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let y = -4.0 + i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * crate::model::eval_disorder_potential(x, y, &omega, 8.0);
            }
            let avg = s * h / 3.0 / 8.0;
            assert!(rc.generator[0].re > 0.0);
            assert!((rc.generator[0].re - avg).abs() < 1e-9, "{} vs {avg}", rc.generator[0].re);
        }
    }

    #[test]
    fn bump_transform_zero_frequency_closed_form() {
        let (nodes, weights) = gauss_legendre(FOURIER_QUADRATURE_ORDER);
        for a in [0.1, 0.5, 1.0] {
            let exact = a * a * a * 0.25 * f64::sqrt(a) * 32.0 / 35.0;
            assert!((bump_row_transform(a, 0.0, &nodes, &weights) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_too_few_modes() {
        let params = ModelParams::new(2.0, 8.0, 0.3);
        let basis = Basis::auto(
            &params,
            2.3,
            crate::assembly::BasisOptions {
                j_max: Some(5),
                ..Default::default()
            },
        )
        .unwrap();
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let omega = sample_realization(1, &lat, 0.3);
        assert!(assemble_full(&omega, &basis, &params).is_err());
    }
}
