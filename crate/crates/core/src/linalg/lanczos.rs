//! Shift-invert Lanczos with full reorthogonalization and locking.
//!
//! The number of eigenvalues in a window is known beforehand from the
//! inertia of the factorization, so iteration stops exactly when that many
//! eigenpairs are locked.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use super::block_ldl::ShiftedFactorization;
use super::tridiag::SymTridiagonal;
use crate::assembly::MixedHamiltonian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Bound on `‖Hv - Ev‖` for a unit vector `v`.
    pub tol: f64,
    /// Largest Krylov basis per restart.
    pub max_basis: usize,
    /// Restarts without new locked pairs before giving up.
    pub max_stalls: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_basis: 120,
            max_stalls: 3,
            seed: 0x5eed,
        }
    }
}

/// Converged eigenpair of `H`.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub energy: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn project_out(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(w, -c, q);
        }
    }
}

/// Rotates `v` so its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut mag = 0.0;
    for (i, z) in v.iter().enumerate() {
        // strict comparison keeps the first maximum, deterministic under ties
        if z.norm() > mag * (1.0 + 1e-12) {
            mag = z.norm();
            best = i;
        }
    }
    if mag == 0.0 {
        return;
    }
    let phase = v[best].conj() / mag;
    v.iter_mut().for_each(|z| *z *= phase);
    v[best].im = 0.0;
}

fn residual(h: &MixedHamiltonian, energy: f64, v: &[C64], scratch: &mut [C64]) -> f64 {
    h.apply_into(v, scratch);
    scratch
        .iter()
        .zip(v)
        .map(|(hv, v)| (hv - v * energy).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn random_start(dim: usize, rng: &mut ChaCha20Rng) -> Vec<C64> {
    let mut unit = || ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) - 0.5;
    (0..dim).map(|_| C64::new(unit(), unit())).collect()
}

/// Eigenpairs of `H` in `[lo, hi]`, where `expected` is the exact count in
/// the window. Vectors are orthonormal and phase-fixed.
pub fn window_eigenpairs(
    h: &MixedHamiltonian,
    lo: f64,
    hi: f64,
    expected: usize,
    opts: &LanczosOptions,
) -> Result<Vec<RitzPair>> {
    if expected == 0 {
        return Ok(Vec::new());
    }
    let dim = h.dim();
    // off-centre shift so it never sits on a symmetric eigenvalue pair
    let sigma = lo + (hi - lo) * 0.5 * (1.0 + 1.0 / 7.0);
    let fact = ShiftedFactorization::new(h, sigma);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut scratch = vec![C64::new(0.0, 0.0); dim];
    let max_basis = opts.max_basis.max(expected + 8).min(dim);
    let mut stalls = 0;
    // Ritz values of eigenvalues on an endpoint may fall just outside it
    let slack = 1e-11 * (1.0 + lo.abs().max(hi.abs()));
    let inside = |e: f64| e >= lo - slack && e <= hi + slack;

    while locked.len() < expected {
        let mut start = random_start(dim, &mut rng);
        project_out(&mut start, &locked);
        let n0 = norm(&start);
        start.iter_mut().for_each(|z| *z /= n0);

        let mut q: Vec<Vec<C64>> = vec![start];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut newly: Vec<Vec<C64>> = Vec::new();
        let mut last_seen = usize::MAX;
        loop {
            let j = q.len() - 1;
            let mut w = fact.solve(&q[j]);
            let a = dot(&q[j], &w).re;
            axpy(&mut w, C64::new(-a, 0.0), &q[j]);
            if j > 0 {
                axpy(&mut w, C64::new(-beta[j - 1], 0.0), &q[j - 1]);
            }
            project_out(&mut w, &locked);
            project_out(&mut w, &q);
            alpha.push(a);
            let b = norm(&w);
            let exhausted = b < 1e-13 * a.abs().max(1.0) || q.len() >= max_basis;
            let step = alpha.len();
            let check = exhausted || (step >= 10 && step.is_multiple_of(5));
            if check {
                let m = alpha.len();
                let t = SymTridiagonal::new(alpha.clone(), beta[..m - 1].to_vec());
                let ritz = t.lowest_eigenpairs(0, m);
                let mut converged = Vec::new();
                let mut in_window = 0;
                for (theta, s) in &ritz {
                    if theta.abs() < 1e-300 {
                        continue;
                    }
                    let energy = sigma + 1.0 / theta;
                    if !inside(energy) {
                        continue;
                    }
                    in_window += 1;
                    // cheap estimate before forming the vector
                    if !exhausted && (b * s[m - 1]).abs() > 1e-6 * theta.abs() {
                        continue;
                    }
                    let mut y = vec![C64::new(0.0, 0.0); dim];
                    for (qk, sk) in q.iter().zip(s) {
                        axpy(&mut y, C64::new(*sk, 0.0), qk);
                    }
                    let ny = norm(&y);
                    y.iter_mut().for_each(|z| *z /= ny);
                    let rq = {
                        h.apply_into(&y, &mut scratch);
                        dot(&y, &scratch).re
                    };
                    if residual(h, rq, &y, &mut scratch) < opts.tol {
                        converged.push(y);
                    }
                }
                let done = converged.len() >= expected - locked.len()
                    || (converged.len() == in_window && in_window == last_seen && in_window > 0);
                last_seen = in_window;
                if done || exhausted {
                    newly = converged;
                    break;
                }
            }
            if b == 0.0 {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|z| *z /= b);
            q.push(w);
        }
        if newly.is_empty() {
            stalls += 1;
            if stalls > opts.max_stalls {
                return Err(Error::Convergence {
                    converged: locked.len(),
                    expected,
                    lo,
                    hi,
                });
            }
            continue;
        }
        stalls = 0;
        for mut v in newly {
            project_out(&mut v, &locked);
            let n = norm(&v);
            if n < 0.5 {
                continue;
            }
            v.iter_mut().for_each(|z| *z /= n);
            locked.push(v);
        }
    }

    let mut pairs = rayleigh_ritz(h, &locked);
    pairs.retain(|p| inside(p.energy));
    if pairs.len() > expected {
        // keep the ones deepest inside; extras are neighbours just past an endpoint
        let outside = |e: f64| (lo - e).max(e - hi).max(0.0);
        pairs.sort_by(|a, b| outside(a.energy).total_cmp(&outside(b.energy)));
        pairs.truncate(expected);
        pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    }
    for p in pairs.iter_mut() {
        p.residual = residual(h, p.energy, &p.vector, &mut scratch);
    }
    if pairs.len() != expected || pairs.iter().any(|p| p.residual >= opts.tol) {
        return Err(Error::Convergence {
            converged: pairs.iter().filter(|p| p.residual < opts.tol).count(),
            expected,
            lo,
            hi,
        });
    }
    Ok(pairs)
}

/// Diagonalizes `H` on the span of orthonormal `vectors`.
fn rayleigh_ritz(h: &MixedHamiltonian, vectors: &[Vec<C64>]) -> Vec<RitzPair> {
    let k = vectors.len();
    let dim = h.dim();
    let hv: Vec<Vec<C64>> = vectors.iter().map(|v| h.apply(v)).collect();
    let mut g = Mat::<C64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = dot(&vectors[i], &hv[j]);
        }
    }
    for i in 0..k {
        g[(i, i)].im = 0.0;
        for j in i + 1..k {
            let avg = 0.5 * (g[(i, j)] + g[(j, i)].conj());
            g[(i, j)] = avg;
            g[(j, i)] = avg.conj();
        }
    }
    let eig = g
        .self_adjoint_eigen(Side::Lower)
        .expect("small Hermitian eigenproblem");
    let s = eig.S();
    let u = eig.U();
    let mut out: Vec<RitzPair> = (0..k)
        .map(|c| {
            let mut y = vec![C64::new(0.0, 0.0); dim];
            for (r, v) in vectors.iter().enumerate() {
                axpy(&mut y, u[(r, c)], v);
            }
            let n = norm(&y);
            y.iter_mut().for_each(|z| *z /= n);
            fix_phase(&mut y);
            RitzPair {
                energy: s[c].re,
                vector: y,
                residual: f64::NAN,
            }
        })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_full, AssembledOperator, Basis, WallSet};
    use crate::model::{build_lattice, sample_realization, LatticeVariant, ModelParams};

    fn op(seed: u64, flux: f64) -> AssembledOperator {
        let params = ModelParams::new(2.0, 8.0, 0.3).with_flux(flux);
        let basis = Basis::new(6.5, 129, 8, 8.0, 2.3).unwrap();
        let lat = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
        let omega = sample_realization(seed, &lat, 0.3);
        assemble_full(&omega, &basis, &params).unwrap()
    }

    #[test]
    fn agrees_with_dense_diagonalization() {
        let op = op(11, 0.25);
        let (lo, hi) = (2.05, 4.5);
        let evals = op
            .hamiltonian
            .to_dense()
            .self_adjoint_eigenvalues(Side::Lower)
            .unwrap();
        let want: Vec<f64> = evals.into_iter().filter(|e| *e >= lo && *e <= hi).collect();
        let n = ShiftedFactorization::count_below(&op.hamiltonian, hi)
            - ShiftedFactorization::count_below(&op.hamiltonian, lo);
        assert_eq!(n, want.len());
        let got = window_eigenpairs(&op.hamiltonian, lo, hi, n, &LanczosOptions::default()).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g.energy - w).abs() < 1e-9, "{} vs {}", g.energy, w);
            assert!(g.residual < 1e-9);
        }
        for i in 0..got.len() {
            for j in 0..i {
                assert!(dot(&got[i].vector, &got[j].vector).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn resolves_degenerate_pairs() {
        // zero disorder and no flux: modes k and -k are mirror images
        let params = ModelParams::new(2.0, 8.0, 0.0);
        let basis = Basis::new(6.5, 129, 8, 8.0, 2.3).unwrap();
        let op = AssembledOperator::build(&basis, &params, WallSet::BOTH, None, "clean").unwrap();
        let (lo, hi) = (1.5, 2.5);
        let n = ShiftedFactorization::count_below(&op.hamiltonian, hi)
            - ShiftedFactorization::count_below(&op.hamiltonian, lo);
        let got = window_eigenpairs(&op.hamiltonian, lo, hi, n, &LanczosOptions::default()).unwrap();
        assert_eq!(got.len(), n);
        assert!(n >= 16);
        assert!(got.windows(2).any(|w| (w[1].energy - w[0].energy).abs() < 1e-9));
    }

    #[test]
    fn phase_convention() {
        let mut v = vec![C64::new(0.1, 0.2), C64::new(0.0, -3.0), C64::new(1.0, 1.0)];
        fix_phase(&mut v);
        assert_eq!(v[1].im, 0.0);
        assert!((v[1].re - 3.0).abs() < 1e-15);
    }
}
