//! Streaming moments, histograms and goodness-of-fit distances.

use alloc::vec;
use alloc::vec::Vec;


use crate::math::ln_gamma;

/// Welford running mean and variance. `merge` is exact up to rounding, so
/// partial summaries combined in a fixed order give a fixed result.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

/// Histogram with a dedicated bin for exact zeros followed by `bins`
/// uniform bins over `(0, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges from 0 to the upper limit.
    pub edges: Vec<f64>,
    pub zero_count: u64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub const DEFAULT_BINS: usize = 100;

    /// Bins `values` on `(0, max]`. A non-positive `max` yields degenerate
    /// unit bins so that all-zero data still has a well-formed grid.
    pub fn with_range(values: &[f64], max: f64, bins: usize) -> Self {
        let hi = if max > 0.0 { max } else { 1.0 };
        let edges = (0..=bins).map(|i| hi * i as f64 / bins as f64).collect();
        let mut h = Self { edges, zero_count: 0, counts: vec![0; bins] };
        for &v in values {
            h.add(v);
        }
        h
    }

    pub fn from_values(values: &[f64]) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        Self::with_range(values, max, Self::DEFAULT_BINS)
    }

    fn add(&mut self, v: f64) {
        if v <= 0.0 {
            self.zero_count += 1;
            return;
        }
        let bins = self.counts.len();
        let hi = self.edges[bins];
        let idx = ((v / hi) * bins as f64).ceil() as usize;
        self.counts[idx.clamp(1, bins) - 1] += 1;
    }

    pub fn total(&self) -> u64 {
        self.zero_count + self.counts.iter().sum::<u64>()
    }
}

/// One-sample Kolmogorov–Smirnov distance. Sorts `samples` in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `C(n, j) p^j (1−p)^{n−j}`.
pub fn binomial_pmf(n: u64, j: u64, p: f64) -> f64 {
    if j > n {
        return 0.0;
    }
    if p == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if j == n { 1.0 } else { 0.0 };
    }
    let (n, j) = (n as f64, j as f64);
    (ln_gamma(n + 1.0) - ln_gamma(j + 1.0) - ln_gamma(n - j + 1.0) + j * p.ln() + (n - j) * (-p).ln_1p()).exp()
}

/// `e^{−k} k^j / j!`.
pub fn poisson_pmf(j: u64, k: f64) -> f64 {
    if k == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let j = j as f64;
    (-k + j * k.ln() - ln_gamma(j + 1.0)).exp()
}

/// Total-variation distance `½ Σ |p − q|` between two pmfs on `0..len`;
/// the shorter one is padded with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n).map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moments_basic() {
        let m: Moments = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(Moments::new().stderr(), 0.0);
    }

    #[test]
    fn histogram_zero_bin() {
        let h = Histogram::from_values(&[0.0, 0.0, 1.0, 0.5, 0.01]);
        assert_eq!(h.zero_count, 2);
        assert_eq!(h.total(), 5);
        assert_eq!(h.counts[99], 1);
        assert_eq!(h.counts[49], 1);
        assert_eq!(h.counts[0], 1);
        let h = Histogram::from_values(&[0.0; 3]);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn distances() {
        let p = [0.5, 0.5];
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert_eq!(tv_distance(&p, &[0.0, 0.0, 1.0]), 1.0);
        let mut a = [1.0, 2.0, 3.0];
        let mut b = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&mut a, &mut b), 0.0);
        let mut a = [1.0, 2.0];
        let mut b = [3.0, 4.0];
        assert_eq!(ks_two_sample(&mut a, &mut b), 1.0);
        let mut u = [0.5];
        assert_eq!(ks_statistic(&mut u, |x| x), 0.5);
    }

    #[test]
    fn pmfs_sum_to_one() {
        let s: f64 = (0..=300).map(|j| binomial_pmf(300, j, 4.0 / 300.0)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let s: f64 = (0..100).map(|j| poisson_pmf(j, 4.0)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((poisson_pmf(1, 1.0) - (-1f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn merge_matches_sequential(xs in proptest::collection::vec(-1e3f64..1e3, 0..200), cut in 0usize..200) {
            let cut = cut.min(xs.len());
            let all: Moments = xs.iter().copied().collect();
            let mut left: Moments = xs[..cut].iter().copied().collect();
            let right: Moments = xs[cut..].iter().copied().collect();
            left.merge(&right);
            prop_assert_eq!(left.count(), all.count());
            prop_assert!((left.mean() - all.mean()).abs() <= 1e-9 * (1.0 + all.mean().abs()));
            prop_assert!((left.variance() - all.variance()).abs() <= 1e-9 * (1.0 + all.variance()));
        }
    }
}
