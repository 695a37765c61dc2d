//! Block `LDLᴴ` factorization of `H - σ` for the mixed basis.
//!
//! In x-major order `H - σ` is block tridiagonal: row blocks `A_i` of size
//! `M` (modes) on the diagonal and `-1/dx²·I` off the diagonal. The Schur
//! complements `D_i = A_i - h² D_{i-1}⁻¹` give both the inertia of `H - σ`
//! (Sylvester) and a direct solver for shift-invert iterations.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::assembly::MixedHamiltonian;

enum RowInverse {
    Diagonal(Vec<f64>),
    Dense(Mat<C64>),
}

impl RowInverse {
    fn apply(&self, v: &[C64], out: &mut [C64]) {
        match self {
            RowInverse::Diagonal(d) => {
                for ((o, x), d) in out.iter_mut().zip(v).zip(d) {
                    *o = x * d;
                }
            }
            RowInverse::Dense(m) => {
                out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
                for (j, x) in v.iter().enumerate() {
                    let col = m.col_as_slice(j);
                    for (o, c) in out.iter_mut().zip(col) {
                        *o += c * x;
                    }
                }
            }
        }
    }
}

/// Factorization of `H - σ`.
pub struct ShiftedFactorization {
    pub shift: f64,
    /// Number of eigenvalues of `H` below `shift`.
    pub negative_count: usize,
    inverses: Vec<RowInverse>,
    n_x: usize,
    n_modes: usize,
    hop: f64,
}

fn tiny_pivot(scale: f64) -> f64 {
    f64::EPSILON * f64::EPSILON * scale.max(1.0)
}

/// Negative eigenvalues of a Hermitian matrix from its Bunch–Kaufman factor,
/// together with the inverse.
fn dense_inertia_and_inverse(d: &Mat<C64>) -> (usize, Mat<C64>) {
    let lblt = d.lblt(Side::Lower);
    let diag = lblt.B_diag();
    let sub = lblt.B_subdiag();
    let n = d.nrows();
    let mut neg = 0;
    let mut i = 0;
    while i < n {
        if i + 1 < n && sub[i] != C64::new(0.0, 0.0) {
            let a = diag[i].re;
            let c = diag[i + 1].re;
            let det = a * c - sub[i].norm_sqr();
            if det < 0.0 {
                neg += 1;
            } else if a + c < 0.0 {
                neg += 2;
            }
            i += 2;
        } else {
            if diag[i].re < 0.0 {
                neg += 1;
            }
            i += 1;
        }
    }
    let mut inv = lblt.inverse();
    // restore exact Hermitian symmetry
    for j in 0..n {
        inv[(j, j)].im = 0.0;
        for r in j + 1..n {
            let avg = 0.5 * (inv[(r, j)] + inv[(j, r)].conj());
            inv[(r, j)] = avg;
            inv[(j, r)] = avg.conj();
        }
    }
    (neg, inv)
}

impl ShiftedFactorization {
    pub fn new(h: &MixedHamiltonian, shift: f64) -> Self {
        Self::factor(h, shift, true)
    }

    /// Inertia only; the row inverses are dropped as soon as they are used.
    pub fn count_below(h: &MixedHamiltonian, shift: f64) -> usize {
        Self::factor(h, shift, false).negative_count
    }

    fn factor(h: &MixedHamiltonian, shift: f64, keep: bool) -> Self {
        let n_x = h.n_x;
        let m = h.n_modes;
        let hop2 = h.hop * h.hop;
        let scale = h.hop.abs();
        let mut neg = 0usize;
        let mut inverses: Vec<RowInverse> = Vec::with_capacity(if keep { n_x } else { 1 });
        let mut prev: Option<RowInverse> = None;
        for i in 0..n_x {
            let coupling = h.coupling_at(i);
            let prev_dense = matches!(prev, Some(RowInverse::Dense(_)));
            let current = if coupling.is_none() && !prev_dense {
                let mut inv = Vec::with_capacity(m);
                for j in 0..m {
                    let mut d = h.diag[j * n_x + i] - shift;
                    if let Some(RowInverse::Diagonal(p)) = &prev {
                        d -= hop2 * p[j];
                    }
                    if d.abs() < tiny_pivot(scale) {
                        d = -tiny_pivot(scale);
                    }
                    if d < 0.0 {
                        neg += 1;
                    }
                    inv.push(1.0 / d);
                }
                RowInverse::Diagonal(inv)
            } else {
                let mut d = match coupling {
                    Some(c) => c.dense(m),
                    None => Mat::<C64>::zeros(m, m),
                };
                for j in 0..m {
                    d[(j, j)] += h.diag[j * n_x + i] - shift;
                }
                match &prev {
                    Some(RowInverse::Diagonal(p)) => {
                        for j in 0..m {
                            d[(j, j)] -= hop2 * p[j];
                        }
                    }
                    Some(RowInverse::Dense(p)) => {
                        for c in 0..m {
                            for r in 0..m {
                                d[(r, c)] -= p[(r, c)] * hop2;
                            }
                        }
                    }
                    None => {}
                }
                let (n_neg, inv) = dense_inertia_and_inverse(&d);
                neg += n_neg;
                RowInverse::Dense(inv)
            };
            if keep {
                if let Some(p) = prev.take() {
                    inverses.push(p);
                }
            }
            prev = Some(current);
        }
        if keep {
            if let Some(p) = prev.take() {
                inverses.push(p);
            }
        }
        Self {
            shift,
            negative_count: neg,
            inverses,
            n_x,
            n_modes: m,
            hop: h.hop,
        }
    }

    /// Solves `(H - σ) z = b` for a mode-major vector `b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert!(!self.inverses.is_empty(), "factorization kept no row inverses");
        let n = self.n_x;
        let m = self.n_modes;
        let zero = C64::new(0.0, 0.0);
        // w_i = D_i⁻¹ y_i, stored x-major
        let mut w = vec![zero; n * m];
        let mut y = vec![zero; m];
        let mut tmp = vec![zero; m];
        for i in 0..n {
            for j in 0..m {
                y[j] = b[j * n + i];
            }
            if i > 0 {
                // y_i = b_i - h·w_{i-1}
                let prev = &w[(i - 1) * m..i * m];
                for j in 0..m {
                    y[j] -= prev[j] * self.hop;
                }
            }
            self.inverses[i].apply(&y, &mut w[i * m..(i + 1) * m]);
        }
        // z_i = w_i - h·D_i⁻¹ z_{i+1}
        let mut z = vec![zero; n * m];
        z[(n - 1) * m..].copy_from_slice(&w[(n - 1) * m..]);
        for i in (0..n - 1).rev() {
            let (head, tail) = z.split_at_mut((i + 1) * m);
            let next = &tail[..m];
            self.inverses[i].apply(next, &mut tmp);
            let zi = &mut head[i * m..];
            for j in 0..m {
                zi[j] = w[i * m + j] - tmp[j] * self.hop;
            }
        }
        let mut out = vec![zero; n * m];
        for i in 0..n {
            for j in 0..m {
                out[j * n + i] = z[i * m + j];
            }
        }
        out
    }
}
