//! Real symmetric tridiagonal eigenproblems by Sturm bisection and inverse iteration.

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            out[i] += self.off[i] * v[i + 1];
            out[i + 1] += self.off[i] * v[i];
        }
        out
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn pivmin(&self) -> f64 {
        let emax = self.off.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax * 4.0
    }

    /// Number of eigenvalues strictly below `sigma` (Sturm count).
    pub fn count_below(&self, sigma: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.off[i - 1];
            q = self.diag[i] - sigma - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        lo -= 1e-12 * scale;
        hi += 1e-12 * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Indices and values of all eigenvalues in `[lo, hi]`.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        let first = self.count_below(lo);
        let end = self.count_below(hi.next_up());
        (first..end).map(|i| (i, self.eigenvalue(i))).collect()
    }

    /// Unit eigenvector for an eigenvalue `lambda` by inverse iteration.
    /// `against` holds previously computed vectors of nearby eigenvalues to
    /// orthogonalize against. Sign fixed so that the largest entry is positive.
    pub fn eigenvector(&self, lambda: f64, against: &[&[f64]]) -> Vec<f64> {
        let n = self.dim();
        let (blo, bhi) = self.bounds();
        let scale = blo.abs().max(bhi.abs()).max(1.0);
        // perturb the shift off the exact eigenvalue to keep the factorization finite
        let shift = lambda + 4.0 * f64::EPSILON * scale;
        let lu = TridiagLu::factor(self, shift);
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_749_895).fract() - 0.5))
            .collect();
        normalize(&mut v);
        for _ in 0..4 {
            let mut w = lu.solve(&v);
            for u in against {
                let d = dot(u, &w);
                w.iter_mut().zip(u.iter()).for_each(|(w, u)| *w -= d * u);
            }
            normalize(&mut w);
            v = w;
        }
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    }

    /// Eigenpairs with eigenvalues in `[lo, hi]`, ascending.
    pub fn eigenpairs_in(&self, lo: f64, hi: f64) -> Vec<(f64, Vec<f64>)> {
        let vals = self.eigenvalues_in(lo, hi);
        self.vectors_for(vals.into_iter().map(|(_, e)| e).collect())
    }

    /// Eigenpairs for the index range `first..first + count`.
    pub fn lowest_eigenpairs(&self, first: usize, count: usize) -> Vec<(f64, Vec<f64>)> {
        let vals = (first..(first + count).min(self.dim()))
            .map(|i| self.eigenvalue(i))
            .collect();
        self.vectors_for(vals)
    }

    fn vectors_for(&self, vals: Vec<f64>) -> Vec<(f64, Vec<f64>)> {
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(vals.len());
        for e in vals {
            let close: Vec<&[f64]> = out
                .iter()
                .filter(|(f, _)| (e - f).abs() < 1e-7 * e.abs().max(1.0))
                .map(|(_, v)| v.as_slice())
                .collect();
            let v = self.eigenvector(e, &close);
            out.push((e, v));
        }
        out
    }
}

/// LU factorization with partial pivoting of `T - shift` (LAPACK `gttrf` layout).
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.dim();
        let mut dl = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - shift).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::MIN_POSITIVE.sqrt();
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = tiny;
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.dl[i] * x[i];
        }
        x[n - 1] /= self.d[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in 0..n {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-13);
        }
        assert_eq!(t.count_below(-0.1), 0);
        assert_eq!(t.count_below(4.1), n);
    }

    #[test]
    fn eigenvectors_have_small_residual() {
        let n = 400;
        let diag: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin() * 3.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -1.0 + 0.1 * ((i as f64) * 0.11).cos()).collect();
        let t = SymTridiagonal::new(diag, off);
        let pairs = t.lowest_eigenpairs(0, 10);
        for (e, v) in &pairs {
            let r: f64 = t
                .matvec(v)
                .iter()
                .zip(v)
                .map(|(a, b)| (a - e * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-11, "residual {r}");
        }
        for i in 0..pairs.len() {
            for j in 0..i {
                assert!(dot(&pairs[i].1, &pairs[j].1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interval_selection() {
        let t = laplacian(20);
        let sel = t.eigenvalues_in(1.0, 2.0);
        assert!(sel.iter().all(|(_, e)| (1.0..=2.0).contains(e)));
        let all = (0..20).filter(|&k| (1.0..=2.0).contains(&t.eigenvalue(k))).count();
        assert_eq!(sel.len(), all);
    }
}
