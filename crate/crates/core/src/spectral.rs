//! Eigenpairs in energy windows, fiber dispersion branches and a dense oracle.

use std::fmt;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::assembly::{build_fiber, fiber_velocity, AssembledOperator, Basis, WallSet};
use crate::error::{invariant, Error, Result};
use crate::linalg::{window_eigenpairs, LanczosOptions, ShiftedFactorization, SymTridiagonal};
use crate::model::{ModelParams, WallSide};

/// Largest dimension accepted by [`dense_oracle`].
pub const DENSE_ORACLE_LIMIT: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabel {
    Band,
    Gap,
    Custom,
}

impl WindowLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowLabel::Band => "band",
            WindowLabel::Gap => "gap",
            WindowLabel::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
    pub label: WindowLabel,
}

impl EnergyWindow {
    pub fn custom(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return invariant(format!("window requires lo < hi (lo={lo}, hi={hi})"));
        }
        Ok(Self {
            lo,
            hi,
            label: WindowLabel::Custom,
        })
    }

    /// `[B + ε, B + V0]`, inside the first Landau band.
    pub fn band(params: &ModelParams) -> Result<Self> {
        let lo = params.b_field + params.epsilon;
        let hi = params.b_field + params.v0;
        if !(lo < hi) {
            return invariant(format!(
                "band window [B+epsilon, B+V0] = [{lo}, {hi}] is empty; epsilon < V0 required"
            ));
        }
        Ok(Self {
            lo,
            hi,
            label: WindowLabel::Band,
        })
    }

    /// `(2B - δ, 2B + δ)`, inside the first spectral gap.
    pub fn gap(params: &ModelParams) -> Self {
        Self {
            lo: 2.0 * params.b_field - params.delta,
            hi: 2.0 * params.b_field + params.delta,
            label: WindowLabel::Gap,
        }
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.lo && e <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for EnergyWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}, {}]", self.label.as_str(), self.lo, self.hi)
    }
}

/// One eigenpair of an assembled operator.
#[derive(Debug, Clone)]
pub struct EigenRecord {
    pub energy: f64,
    /// Unit-norm coefficients in mode-major order.
    pub vector: Vec<C64>,
    pub residual: f64,
    pub operator: String,
    pub window: EnergyWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// Windows holding more eigenvalues are bisected before iterating.
    pub max_cluster: usize,
    pub max_basis: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_cluster: 24,
            max_basis: 120,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct WindowSpectrum {
    pub records: Vec<EigenRecord>,
    pub warnings: Vec<String>,
}

impl WindowSpectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Exact number of eigenvalues of the operator in the closed window.
pub fn count_in_window(op: &AssembledOperator, window: &EnergyWindow) -> usize {
    let h = &op.hamiltonian;
    ShiftedFactorization::count_below(h, window.hi.next_up())
        - ShiftedFactorization::count_below(h, window.lo)
}

/// All eigenpairs with energy in the window, ascending, with residuals
/// re-verified on the operator.
pub fn eigs_in_window(
    op: &AssembledOperator,
    window: &EnergyWindow,
    opts: &SolverOptions,
) -> Result<WindowSpectrum> {
    let h = &op.hamiltonian;
    let below_lo = ShiftedFactorization::count_below(h, window.lo);
    let below_hi = ShiftedFactorization::count_below(h, window.hi.next_up());
    let mut pairs = Vec::new();
    solve_range(op, window.lo, window.hi, below_lo, below_hi, opts, 0, &mut pairs)?;
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let mut warnings = Vec::new();
    let mut records = Vec::with_capacity(pairs.len());
    for p in pairs {
        let residual = op.residual(p.energy, &p.vector);
        if residual > opts.tol {
            return Err(Error::Convergence {
                converged: records.len(),
                expected: below_hi - below_lo,
                lo: window.lo,
                hi: window.hi,
            });
        }
        if (p.energy - window.lo).abs() < opts.tol || (p.energy - window.hi).abs() < opts.tol {
            warnings.push(format!(
                "{}: eigenvalue {:.12} within {:e} of a window endpoint of {window}",
                op.label, p.energy, opts.tol
            ));
        }
        records.push(EigenRecord {
            energy: p.energy,
            vector: p.vector,
            residual,
            operator: op.label.clone(),
            window: *window,
        });
    }
    Ok(WindowSpectrum { records, warnings })
}

#[allow(clippy::too_many_arguments)]
fn solve_range(
    op: &AssembledOperator,
    lo: f64,
    hi: f64,
    below_lo: usize,
    below_hi: usize,
    opts: &SolverOptions,
    depth: usize,
    out: &mut Vec<crate::linalg::RitzPair>,
) -> Result<()> {
    let count = below_hi - below_lo;
    if count == 0 {
        return Ok(());
    }
    if count > opts.max_cluster && depth < 40 && hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let below_mid = ShiftedFactorization::count_below(&op.hamiltonian, mid);
        solve_range(op, lo, mid.next_down(), below_lo, below_mid, opts, depth + 1, out)?;
        return solve_range(op, mid, hi, below_mid, below_hi, opts, depth + 1, out);
    }
    let lanczos = LanczosOptions {
        tol: opts.tol,
        max_basis: opts.max_basis,
        max_stalls: 3,
        seed: opts.seed ^ (depth as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    };
    out.extend(window_eigenpairs(&op.hamiltonian, lo, hi, count, &lanczos)?);
    Ok(())
}

/// Full eigendecomposition, ascending; columns are phase-fixed unit vectors.
pub fn dense_oracle(op: &AssembledOperator) -> Result<Vec<(f64, Vec<C64>)>> {
    let dim = op.dim();
    if dim > DENSE_ORACLE_LIMIT {
        return Err(Error::DimensionGuard {
            dim,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    dense_hermitian_eigen(&op.hamiltonian.to_dense())
}

pub fn dense_hermitian_eigen(m: &Mat<C64>) -> Result<Vec<(f64, Vec<C64>)>> {
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    let mut out: Vec<(f64, Vec<C64>)> = (0..m.nrows())
        .map(|c| {
            let mut v: Vec<C64> = (0..m.nrows()).map(|r| u[(r, c)]).collect();
            crate::linalg::fix_phase(&mut v);
            (s[c].re, v)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Eigenstate of a single fiber `H(k)`.
#[derive(Debug, Clone)]
pub struct FiberState {
    pub mode: usize,
    pub k: f64,
    /// Index in the fiber's own spectrum, 0 for the lowest level.
    pub band: usize,
    pub energy: f64,
    /// Real unit-norm profile on the grid.
    pub profile: Vec<f64>,
    pub current: f64,
    pub x_centroid: f64,
}

impl FiberState {
    /// Coefficients of `e^{iky} φ(x)` in mode-major order.
    pub fn embed(&self, basis: &Basis) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); basis.dim()];
        let base = self.mode * basis.n_x();
        for (i, p) in self.profile.iter().enumerate() {
            v[base + i] = C64::new(*p, 0.0);
        }
        v
    }
}

pub(crate) fn profile_current(profile: &[f64], velocity: &[f64]) -> f64 {
    profile.iter().zip(velocity).map(|(p, v)| v * p * p).sum()
}

fn profile_centroid(profile: &[f64], basis: &Basis) -> f64 {
    profile.iter().zip(&basis.x).map(|(p, x)| x * p * p).sum()
}

/// Which fiber states a reference keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateFilter {
    All,
    /// Centroid on this wall's side of `x = 0`; removes states bound to the
    /// bare grid end left by a removed wall.
    Side(WallSide),
}

impl StateFilter {
    fn keeps(self, centroid: f64) -> bool {
        match self {
            StateFilter::All => true,
            StateFilter::Side(WallSide::Left) => centroid < 0.0,
            StateFilter::Side(WallSide::Right) => centroid > 0.0,
        }
    }
}

/// Union over the basis modes of fiber eigenstates in the window.
pub fn fiber_window_states(
    basis: &Basis,
    params: &ModelParams,
    walls: WallSet,
    window: &EnergyWindow,
    filter: StateFilter,
) -> Result<Vec<FiberState>> {
    let mut out = Vec::new();
    for mode in 0..basis.n_modes() {
        let k = basis.k(mode);
        let fiber = build_fiber(k, basis, params, walls, None)?;
        let velocity = fiber_velocity(k, basis, params);
        let first = fiber.count_below(window.lo);
        for (band, (energy, profile)) in (first..)
            .zip(fiber.eigenpairs_in(window.lo, window.hi))
        {
            let x_centroid = profile_centroid(&profile, basis);
            if !filter.keeps(x_centroid) {
                continue;
            }
            out.push(FiberState {
                mode,
                k,
                band,
                energy,
                current: profile_current(&profile, &velocity),
                profile,
                x_centroid,
            });
        }
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

/// One band `n ↦ E_n(k)` of a single-wall fiber family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionBranch {
    pub band: usize,
    pub side: WallSide,
    pub k: Vec<f64>,
    pub energy: Vec<f64>,
    pub current: Vec<f64>,
    /// Centred-difference `dE/dk` with a small probe step.
    pub slope: Vec<f64>,
    /// Sample indices `j` where `E(k_j) → E(k_{j+1})` breaks the expected
    /// monotonicity inside `(B, 3B)`.
    pub violations: Vec<usize>,
}

impl DispersionBranch {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Probe step for the derivative column.
pub const SLOPE_PROBE: f64 = 1e-4;
/// Energy increments below this are at bisection resolution and not judged.
const FLAT_RESOLUTION: f64 = 1e-10;

/// Dispersion branches `n = 0..=n_max` of the fiber family with only the
/// `side` wall, sampled on `k ∈ [k_lo, k_hi]` with at least
/// `samples_per_unit` points per unit of `k` and adaptive refinement where
/// the branch is steep. Computed at zero flux.
pub fn dispersion_branches(
    side: WallSide,
    params: &ModelParams,
    basis: &Basis,
    n_max: usize,
    k_range: (f64, f64),
    samples_per_unit: usize,
) -> Result<Vec<DispersionBranch>> {
    let (k_lo, k_hi) = k_range;
    if !(k_lo < k_hi) {
        return invariant("dispersion k range requires k_lo < k_hi");
    }
    // the branch is the infinite-length relation; flux only relabels momenta
    let unshifted = params.clone().with_flux(0.0);
    let params = &unshifted;
    let walls = WallSet::only(side);
    let n0 = (((k_hi - k_lo) * samples_per_unit.max(8) as f64).ceil() as usize).max(2) + 1;
    let mut ks: Vec<f64> = (0..n0)
        .map(|j| k_lo + (k_hi - k_lo) * j as f64 / (n0 - 1) as f64)
        .collect();
    let solve = |k: f64| -> Result<Vec<(f64, Vec<f64>)>> {
        let fiber = build_fiber(k, basis, params, walls, None)?;
        Ok(fiber.lowest_eigenpairs(0, n_max + 1))
    };
    let mut levels: Vec<Vec<(f64, Vec<f64>)>> = ks.iter().map(|&k| solve(k)).collect::<Result<_>>()?;

    // refine where a step in the lowest branch exceeds B/8
    let steep = params.b_field / 8.0;
    for _ in 0..4 {
        let mut new_k = Vec::with_capacity(ks.len());
        let mut new_l = Vec::with_capacity(ks.len());
        let mut changed = false;
        for j in 0..ks.len() {
            new_k.push(ks[j]);
            new_l.push(levels[j].clone());
            if j + 1 < ks.len() && (levels[j + 1][0].0 - levels[j][0].0).abs() > steep {
                let km = 0.5 * (ks[j] + ks[j + 1]);
                new_k.push(km);
                new_l.push(solve(km)?);
                changed = true;
            }
        }
        ks = new_k;
        levels = new_l;
        if !changed {
            break;
        }
    }

    let fibers_at = |k: f64| -> Result<Vec<f64>> {
        let fiber = build_fiber(k, basis, params, walls, None)?;
        Ok((0..=n_max).map(|n| fiber.eigenvalue(n)).collect())
    };
    let mut slopes = vec![vec![0.0; ks.len()]; n_max + 1];
    for (j, &k) in ks.iter().enumerate() {
        let plus = fibers_at(k + SLOPE_PROBE)?;
        let minus = fibers_at(k - SLOPE_PROBE)?;
        for n in 0..=n_max {
            slopes[n][j] = (plus[n] - minus[n]) / (2.0 * SLOPE_PROBE);
        }
    }

    let b = params.b_field;
    let mut out = Vec::with_capacity(n_max + 1);
    for (n, slope) in slopes.into_iter().enumerate() {
        let energy: Vec<f64> = levels.iter().map(|l| l[n].0).collect();
        let current: Vec<f64> = ks
            .iter()
            .zip(&levels)
            .map(|(&k, l)| profile_current(&l[n].1, &fiber_velocity(k, basis, params)))
            .collect();
        let mut violations = Vec::new();
        for j in 0..ks.len().saturating_sub(1) {
            let (e0, e1) = (energy[j], energy[j + 1]);
            let (floor, ceiling) = ((2 * n + 1) as f64 * b, (2 * n + 3) as f64 * b);
            let judged = |e: f64| e > floor + FLAT_RESOLUTION && e < ceiling;
            if (e1 - e0).abs() <= FLAT_RESOLUTION || !(judged(e0) && judged(e1)) {
                continue;
            }
            let ok = match side {
                WallSide::Left => e1 < e0,
                WallSide::Right => e1 > e0,
            };
            if !ok {
                violations.push(j);
            }
        }
        out.push(DispersionBranch {
            band: n,
            side,
            k: ks.clone(),
            energy,
            current,
            slope,
            violations,
        });
    }
    Ok(out)
}

/// Lowest `count` eigenvalues of the fiber at `k`.
pub fn fiber_levels(
    k: f64,
    basis: &Basis,
    params: &ModelParams,
    walls: WallSet,
    count: usize,
) -> Result<Vec<f64>> {
    let fiber: SymTridiagonal = build_fiber(k, basis, params, walls, None)?;
    Ok((0..count.min(fiber.dim())).map(|n| fiber.eigenvalue(n)).collect())
}
