use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub perturbed_index: usize,
    pub reference_index: usize,
    pub perturbed: f64,
    pub reference: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMatch {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_perturbed: Vec<usize>,
    pub unmatched_reference: Vec<usize>,
    pub cap: f64,
}

impl SpectralMatch {
    pub fn total_shift(&self) -> f64 {
        self.pairs.iter().map(|p| p.shift).sum()
    }

    pub fn max_shift(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.shift).reduce(f64::max)
    }
}

#[derive(Clone, Copy)]
struct Score {
    pairs: usize,
    cost: f64,
}

impl Score {
    fn better(self, other: Score) -> bool {
        self.pairs > other.pairs || (self.pairs == other.pairs && self.cost < other.cost)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    SkipPerturbed,
    SkipReference,
    Pair,
}

/// Order-preserving assignment of sorted spectra: the largest number of
/// pairs with `|ℰ - E| ≤ cap`, and among those the least total shift.
pub fn match_spectra(perturbed: &[f64], reference: &[f64], cap: f64) -> SpectralMatch {
    let n = perturbed.len();
    let m = reference.len();
    let w = m + 1;
    let mut score = vec![Score { pairs: 0, cost: 0.0 }; (n + 1) * w];
    let mut step = vec![Step::SkipPerturbed; (n + 1) * w];
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best: Option<(Score, Step)> = None;
            let mut offer = |s: Score, st: Step| {
                if best.is_none_or(|(b, _)| s.better(b)) {
                    best = Some((s, st));
                }
            };
            if i > 0 && j > 0 {
                let d = (perturbed[i - 1] - reference[j - 1]).abs();
                if d <= cap {
                    let prev = score[(i - 1) * w + j - 1];
                    offer(
                        Score {
                            pairs: prev.pairs + 1,
                            cost: prev.cost + d,
                        },
                        Step::Pair,
                    );
                }
            }
            if i > 0 {
                offer(score[(i - 1) * w + j], Step::SkipPerturbed);
            }
            if j > 0 {
                offer(score[i * w + j - 1], Step::SkipReference);
            }
            let (s, st) = best.unwrap();
            score[i * w + j] = s;
            step[i * w + j] = st;
        }
    }

    let mut pairs = Vec::new();
    let mut unmatched_perturbed = Vec::new();
    let mut unmatched_reference = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match step[i * w + j] {
            Step::Pair => {
                pairs.push(MatchedPair {
                    perturbed_index: i - 1,
                    reference_index: j - 1,
                    perturbed: perturbed[i - 1],
                    reference: reference[j - 1],
                    shift: (perturbed[i - 1] - reference[j - 1]).abs(),
                });
                i -= 1;
                j -= 1;
            }
            Step::SkipPerturbed => {
                unmatched_perturbed.push(i - 1);
                i -= 1;
            }
            Step::SkipReference => {
                unmatched_reference.push(j - 1);
                j -= 1;
            }
        }
    }
    pairs.reverse();
    unmatched_perturbed.reverse();
    unmatched_reference.reverse();
    SpectralMatch {
        pairs,
        unmatched_perturbed,
        unmatched_reference,
        cap,
    }
}

/// Smallest gap between consecutive sorted values.
pub fn min_spacing(sorted: &[f64]) -> Option<f64> {
    sorted.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_lists() {
        let e = [1.0, 2.0, 3.5];
        let m = match_spectra(&e, &e, 0.1);
        assert_eq!(m.pairs.len(), 3);
        assert!(m.pairs.iter().all(|p| p.shift == 0.0));
        assert!(m.unmatched_perturbed.is_empty() && m.unmatched_reference.is_empty());
    }

    #[test]
    fn small_shifts() {
        let m = match_spectra(&[1.001, 2.001], &[1.0, 2.0], 0.01);
        assert_eq!(m.pairs.len(), 2);
        for p in &m.pairs {
            assert!((p.shift - 0.001).abs() < 1e-12);
        }
    }

    #[test]
    fn leftover_reported() {
        let m = match_spectra(&[1.0, 1.5], &[1.0], 0.1);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].shift, 0.0);
        assert_eq!(m.unmatched_perturbed, vec![1]);
    }

    /// Exhaustive search over all injective partial assignments.
    fn brute(p: &[f64], r: &[f64], cap: f64) -> (usize, f64) {
        fn rec(i: usize, p: &[f64], r: &[f64], used: &mut Vec<bool>, cap: f64) -> (usize, f64) {
            if i == p.len() {
                return (0, 0.0);
            }
            let mut best = rec(i + 1, p, r, used, cap);
            for j in 0..r.len() {
                let d = (p[i] - r[j]).abs();
                if !used[j] && d <= cap {
                    used[j] = true;
                    let (c, s) = rec(i + 1, p, r, used, cap);
                    used[j] = false;
                    let cand = (c + 1, s + d);
                    if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                        best = cand;
                    }
                }
            }
            best
        }
        rec(0, p, r, &mut vec![false; r.len()], cap)
    }

    proptest! {
        #[test]
        fn dynamic_program_is_optimal(
            mut p in proptest::collection::vec(0.0f64..4.0, 0..8),
            mut r in proptest::collection::vec(0.0f64..4.0, 0..8),
            cap in 0.05f64..1.5,
        ) {
            p.sort_by(f64::total_cmp);
            r.sort_by(f64::total_cmp);
            let m = match_spectra(&p, &r, cap);
            let (count, cost) = brute(&p, &r, cap);
            prop_assert_eq!(m.pairs.len(), count);
            prop_assert!((m.total_shift() - cost).abs() < 1e-9);
            prop_assert!(m.pairs.iter().all(|x| x.shift <= cap));
            prop_assert_eq!(m.pairs.len() + m.unmatched_perturbed.len(), p.len());
            prop_assert_eq!(m.pairs.len() + m.unmatched_reference.len(), r.len());
        }
    }
}
