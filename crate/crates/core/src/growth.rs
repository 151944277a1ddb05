//! Growth-rate estimators for counting sequences, conjugacy classes of free
//! groups as a concrete counting model, and the negative-curvature bound.
//!
//! The invariants defined through `liminf` cannot be computed from finite
//! data. The estimators here fit a least-squares line over the trailing half
//! (rounded up) of the samples and report its slope.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("scales must be strictly increasing (sample {0})")]
    ScalesNotIncreasing(usize),
    #[error("counts must be nondecreasing (sample {0})")]
    CountsDecreasing(usize),
    #[error("all counts are zero")]
    AllZero,
    #[error("regression window contains a zero count at scale {0}")]
    ZeroInWindow(f64),
    #[error("scale {0} must be positive for a log-log fit")]
    NonPositiveScale(f64),
    #[error("free group rank must be >= 1 and max length >= 1")]
    BadFreeGroup,
    #[error("enumeration too large: (2r-1)^L = {0:.3e} exceeds cap {1:.1e}")]
    TooLarge(f64, f64),
    #[error("length parameter must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("malformed counts input line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, GrowthError>;

/// Largest value of `(2r-1)^L` accepted by the free-group counter.
pub const FREE_GROUP_CAP: f64 = 1e30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSequence {
    samples: Vec<(f64, u128)>,
}

impl CountSequence {
    pub fn new(samples: Vec<(f64, u128)>) -> Result<Self> {
        for i in 1..samples.len() {
            if samples[i].0.partial_cmp(&samples[i - 1].0) != Some(std::cmp::Ordering::Greater) {
                return Err(GrowthError::ScalesNotIncreasing(i));
            }
            if samples[i].1 < samples[i - 1].1 {
                return Err(GrowthError::CountsDecreasing(i));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, u128)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Parse `scale<TAB>count` lines; blank lines and `#` comments are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let err = |reason: &str| GrowthError::Parse {
                line: i + 1,
                reason: reason.to_string(),
            };
            let a: f64 = cols
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("bad scale"))?;
            let c: u128 = cols
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("bad count"))?;
            if cols.next().is_some() {
                return Err(err("expected two columns"));
            }
            samples.push((a, c));
        }
        Self::new(samples)
    }

    fn window(&self) -> Result<&[(f64, u128)]> {
        let n = self.samples.len();
        if n < 3 {
            return Err(GrowthError::TooFewSamples(n));
        }
        if self.samples.iter().all(|s| s.1 == 0) {
            return Err(GrowthError::AllZero);
        }
        Ok(&self.samples[n - n.div_ceil(2)..])
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn log_counts(window: &[(f64, u128)]) -> Result<Vec<f64>> {
    window
        .iter()
        .map(|&(a, c)| {
            if c == 0 {
                Err(GrowthError::ZeroInWindow(a))
            } else {
                Ok((c as f64).ln())
            }
        })
        .collect()
}

/// Estimate of `liminf (1/a) log #C^a`: slope of `log count` against `a`.
pub fn exp_growth_rate(seq: &CountSequence) -> Result<f64> {
    let w = seq.window()?;
    let ys = log_counts(w)?;
    let pts: Vec<(f64, f64)> = w.iter().zip(ys).map(|(s, y)| (s.0, y)).collect();
    Ok(least_squares_slope(&pts))
}

/// Estimate of `liminf (1/log a) log #C^a`: slope of `log count` against `log a`.
pub fn poly_growth_rate(seq: &CountSequence) -> Result<f64> {
    let w = seq.window()?;
    let ys = log_counts(w)?;
    let mut pts = Vec::with_capacity(w.len());
    for (s, y) in w.iter().zip(ys) {
        if s.0 <= 0.0 {
            return Err(GrowthError::NonPositiveScale(s.0));
        }
        pts.push((s.0.ln(), y));
    }
    Ok(least_squares_slope(&pts))
}

/// Slope of `count` against `a`; estimates `lim (1/t) sum_{j<=t} b_j` when the
/// counts are Betti partial sums.
pub fn linear_growth_rate(seq: &CountSequence) -> Result<f64> {
    let w = seq.window()?;
    let pts: Vec<(f64, f64)> = w.iter().map(|&(a, c)| (a, c as f64)).collect();
    Ok(least_squares_slope(&pts))
}

/// Reduced word in a free group; letters are `±i` for generator `i >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn new(letters: Vec<i32>) -> Self {
        Word(letters).reduced()
    }

    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Free reduction (cancel adjacent `a a^{-1}`).
    pub fn reduced(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Strip inverse pairs across the wrap-around.
    pub fn cyclically_reduced(&self) -> Word {
        let r = self.reduced().0;
        let (mut i, mut j) = (0, r.len());
        while j - i >= 2 && r[i] == -r[j - 1] {
            i += 1;
            j -= 1;
        }
        Word(r[i..j].to_vec())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v).reduced()
    }
}

/// Canonical representative of the conjugacy class: cyclic reduction
/// followed by the lexicographically smallest rotation.
pub fn conjugacy_class_key(w: &Word) -> Word {
    let c = w.cyclically_reduced().0;
    if c.is_empty() {
        return Word::identity();
    }
    let n = c.len();
    let best = (0..n)
        .map(|s| c[s..].iter().chain(&c[..s]).copied().collect::<Vec<_>>())
        .min()
        .expect("nonempty");
    Word(best)
}

fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Number of cyclically reduced words of length `n >= 1` in `F_r`.
fn cyclically_reduced_words(r: u64, n: u32) -> u128 {
    let base = (2 * r - 1) as u128;
    let even_correction = if n % 2 == 0 { 2 * (r as u128 - 1) } else { 0 };
    base.pow(n) + 1 + even_correction
}

/// Conjugacy classes of `F_r` of cyclically reduced length exactly `n`
/// (Burnside over the rotation group).
pub fn conjugacy_classes_of_length(r: u64, n: u32) -> u128 {
    let total: u128 = (1..=n)
        .filter(|d| n % d == 0)
        .map(|d| euler_phi((n / d) as u64) as u128 * cyclically_reduced_words(r, d))
        .sum();
    total / n as u128
}

/// Cumulative counts `#{classes of length <= l}` (identity included) for
/// `l = 1..=max_len`.
pub fn count_conjugacy_classes_free_group(rank: u64, max_len: u32) -> Result<CountSequence> {
    if rank == 0 || max_len == 0 {
        return Err(GrowthError::BadFreeGroup);
    }
    let size = ((2 * rank - 1) as f64).powi(max_len as i32);
    if size > FREE_GROUP_CAP {
        return Err(GrowthError::TooLarge(size, FREE_GROUP_CAP));
    }
    let mut acc: u128 = 1;
    let samples = (1..=max_len)
        .map(|l| {
            acc += conjugacy_classes_of_length(rank, l);
            (l as f64, acc)
        })
        .collect();
    CountSequence::new(samples)
}

/// Brute-force class count: enumerate every reduced word up to `max_len`
/// and collect distinct conjugacy keys. Exponential; intended for small input.
pub fn enumerate_conjugacy_classes(rank: u64, max_len: u32) -> Vec<BTreeSet<Word>> {
    let r = rank as i32;
    let letters: Vec<i32> = (1..=r).flat_map(|i| [i, -i]).collect();
    let mut by_len: Vec<BTreeSet<Word>> = vec![BTreeSet::new(); max_len as usize + 1];
    by_len[0].insert(Word::identity());
    let mut frontier = vec![Vec::<i32>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if w.last() == Some(&-l) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                let key = conjugacy_class_key(&Word(v.clone()));
                by_len[key.len()].insert(key);
                next.push(v);
            }
        }
        frontier = next;
    }
    by_len
}

/// `e^{h L} / (2L)`, the lower bound on the number of free homotopy classes
/// with a closed geodesic of length at most `L`.
pub fn margulis_bound(h_top: f64, length: f64) -> Result<f64> {
    if length <= 0.0 {
        return Err(GrowthError::NonPositiveLength(length));
    }
    Ok((h_top * length).exp() / (2.0 * length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(samples: Vec<(f64, u128)>) -> CountSequence {
        CountSequence::new(samples).unwrap()
    }

    #[test]
    fn synthetic_exponential() {
        let s = seq((1..=10).map(|a| (a as f64, (2.0 * a as f64).exp().round() as u128)).collect());
        assert!((exp_growth_rate(&s).unwrap() - 2.0).abs() < 0.05);
        let c = seq((1..=10).map(|a| (a as f64, 7)).collect());
        assert_eq!(exp_growth_rate(&c).unwrap(), 0.0);
    }

    #[test]
    fn synthetic_polynomial() {
        let sq = seq((1..=20).map(|a| (a as f64, (a * a) as u128)).collect());
        assert!((poly_growth_rate(&sq).unwrap() - 2.0).abs() < 1e-9);
        let lin = seq((1..=20).map(|a| (a as f64, a as u128)).collect());
        assert!((poly_growth_rate(&lin).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn estimator_errors() {
        assert_eq!(
            exp_growth_rate(&seq(vec![(1.0, 1), (2.0, 2)])),
            Err(GrowthError::TooFewSamples(2))
        );
        assert_eq!(
            exp_growth_rate(&seq(vec![(1.0, 0), (2.0, 0), (3.0, 0)])),
            Err(GrowthError::AllZero)
        );
        assert!(CountSequence::new(vec![(1.0, 3), (2.0, 2)]).is_err());
        assert!(CountSequence::new(vec![(1.0, 3), (1.0, 4)]).is_err());
    }

    #[test]
    fn free_group_small_counts() {
        let s = count_conjugacy_classes_free_group(2, 2).unwrap();
        assert_eq!(s.samples()[0].1, 5);
        assert_eq!(s.samples()[1].1, 13);
        let z = count_conjugacy_classes_free_group(1, 6).unwrap();
        for (l, c) in z.samples() {
            assert_eq!(*c, 2 * (*l as u128) + 1);
        }
        assert!(count_conjugacy_classes_free_group(0, 3).is_err());
        assert!(matches!(
            count_conjugacy_classes_free_group(5, 40),
            Err(GrowthError::TooLarge(..))
        ));
    }

    #[test]
    fn burnside_count_matches_enumeration() {
        for r in 1..=3u64 {
            let max_len = if r == 3 { 5 } else { 8 };
            let brute = enumerate_conjugacy_classes(r, max_len);
            for l in 1..=max_len {
                assert_eq!(
                    conjugacy_classes_of_length(r, l),
                    brute[l as usize].len() as u128,
                    "r={r} l={l}"
                );
            }
        }
    }

    #[test]
    fn free_group_growth_approaches_log3() {
        // classes grow like 3^l / l, so the finite-window slope sits below
        // log 3 by roughly the mean of 1/l over the window
        let s = count_conjugacy_classes_free_group(2, 12).unwrap();
        let rate = exp_growth_rate(&s).unwrap();
        assert!((rate - 0.969_970_390).abs() < 1e-6, "rate {rate}");
        let s = count_conjugacy_classes_free_group(2, 40).unwrap();
        let rate = exp_growth_rate(&s).unwrap();
        assert!((rate - 3f64.ln()).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn keys() {
        assert_eq!(conjugacy_class_key(&Word::new(vec![1, 2, -1])), Word(vec![2]));
        assert_eq!(conjugacy_class_key(&Word::identity()), Word::identity());
        assert_eq!(conjugacy_class_key(&Word::new(vec![1, -1])), Word::identity());
    }

    #[test]
    fn margulis() {
        let v = margulis_bound(1.0, 10.0).unwrap();
        assert!((v - 10f64.exp() / 20.0).abs() < 1e-9);
        assert!((v - 1101.3).abs() < 0.1);
        assert_eq!(margulis_bound(0.0, 1.0).unwrap(), 0.5);
        assert!(margulis_bound(1.0, 0.0).is_err());
        let h = 0.7;
        let mut prev = margulis_bound(h, 1.0 / h + 0.01).unwrap();
        for i in 1..50 {
            let l = 1.0 / h + 0.01 + i as f64 * 0.3;
            let v = margulis_bound(h, l).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    fn word_strategy() -> impl Strategy<Value = Vec<i32>> {
        proptest::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2), Just(3), Just(-3)], 0..12)
    }

    proptest! {
        #[test]
        fn key_is_conjugation_invariant(w in word_strategy(), g in word_strategy()) {
            let w = Word::new(w);
            let g = Word::new(g);
            let conj = g.concat(&w).concat(&g.inverse());
            prop_assert_eq!(conjugacy_class_key(&conj), conjugacy_class_key(&w));
        }

        #[test]
        fn key_is_rotation_invariant(w in word_strategy(), s in 0usize..12) {
            let c = Word::new(w).cyclically_reduced();
            if !c.is_empty() {
                let s = s % c.len();
                let rot: Vec<i32> = c.0[s..].iter().chain(&c.0[..s]).copied().collect();
                prop_assert_eq!(conjugacy_class_key(&Word(rot)), conjugacy_class_key(&c));
            }
        }

        #[test]
        fn estimators_ignore_constant_factors(k in 1u128..50, base in 2u128..5) {
            let a: Vec<(f64, u128)> = (1..=12u32).map(|i| (i as f64, base.pow(i))).collect();
            let b: Vec<(f64, u128)> = a.iter().map(|&(x, c)| (x, c * k)).collect();
            let (sa, sb) = (seq(a), seq(b));
            prop_assert!((exp_growth_rate(&sa).unwrap() - exp_growth_rate(&sb).unwrap()).abs() < 1e-9);
            prop_assert!((poly_growth_rate(&sa).unwrap() - poly_growth_rate(&sb).unwrap()).abs() < 1e-9);
        }
    }
}
