//! Rayleigh-fading channel vectors drawn from reproducible streams.
//!
//! Every entry is complex Gaussian with real and imaginary parts of unit
//! variance, so `‖h‖²` is exactly `χ²₂ᵣ`. This is the normalization every
//! threshold and bound formula in the crate assumes; a per-part variance of
//! 1/2 would halve all gains.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::ComplexVector;

/// Identifies an independent random stream: one per `(seed, slot)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// One complex Gaussian entry with unit-variance real and imaginary parts.
pub fn complex_gaussian<R: rand_core::RngCore>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// A channel vector of length `r` with i.i.d. complex Gaussian entries.
pub fn sample_vector<R: rand_core::RngCore>(rng: &mut R, r: usize) -> ComplexVector {
    let entries = (0..r).map(|_| complex_gaussian(rng)).collect();
    // r >= 1 is checked by callers.
    ComplexVector::new(entries).expect("non-empty")
}

/// The channel vectors of all `K` users in one slot, with cached norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    r: usize,
    vectors: Vec<ComplexVector>,
    norms: Vec<f64>,
}

impl ChannelSet {
    pub fn from_vectors(vectors: Vec<ComplexVector>) -> Result<Self> {
        let r = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Dimension("no users".into()))?;
        if vectors.iter().any(|v| v.len() != r) {
            return Err(Error::Dimension("channel vectors differ in length".into()));
        }
        let norms = vectors.iter().map(|v| v.norm_sq()).collect();
        Ok(Self { r, vectors, norms })
    }

    pub fn users(&self) -> usize {
        self.vectors.len()
    }

    pub fn antennas(&self) -> usize {
        self.r
    }

    pub fn vectors(&self) -> &[ComplexVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &ComplexVector {
        &self.vectors[i]
    }

    /// `‖hᵢ‖²` for every user.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Index and value of the largest norm, lowest index on ties.
    pub fn strongest(&self) -> (usize, f64) {
        let mut best = (0, self.norms[0]);
        for (i, &n) in self.norms.iter().enumerate().skip(1) {
            if n > best.1 {
                best = (i, n);
            }
        }
        best
    }
}

/// Draws `K` users with `r` antennas from `stream`. User `i`'s entries are
/// consumed in antenna order, real part before imaginary part.
pub fn sample_channel_set(stream: RngStream, n_users: usize, r: usize) -> Result<ChannelSet> {
    if n_users == 0 {
        return Err(Error::domain("K", 0.0, "user count must be positive"));
    }
    if r == 0 {
        return Err(Error::domain("r", 0.0, "antenna count must be positive"));
    }
    let mut rng = stream.rng();
    let vectors = (0..n_users).map(|_| sample_vector(&mut rng, r)).collect();
    ChannelSet::from_vectors(vectors)
}

/// `|⟨q, h⟩|² / ‖h‖²` for a unit vector `q`.
pub fn squared_angle(h: &ComplexVector, unit_row: &ComplexVector) -> Result<f64> {
    let n = h.norm_sq();
    if !(n > 0.0) {
        return Err(Error::domain("h", n, "channel vector must be non-zero"));
    }
    if (unit_row.norm_sq() - 1.0).abs() > 1e-10 {
        return Err(Error::domain("unit_row", unit_row.norm_sq(), "direction must have unit norm"));
    }
    let c = unit_row.inner(h)?;
    Ok((c.norm_sqr() / n).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::reg_gamma_q;
    use crate::stats::{ks_statistic, Moments};
    use alloc::vec;

    #[test]
    fn norm_moments_and_fit() {
        let r = 4;
        let n = 1_000_000;
        let mut rng = RngStream::new(3, 0).rng();
        let mut m = Moments::new();
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let x = sample_vector(&mut rng, r).norm_sq();
            m.push(x);
            xs.push(x);
        }
        assert!((m.mean() - 8.0).abs() < 3.0 * m.stderr(), "mean {}", m.mean());
        // sd of the sample variance is sqrt((μ₄ − σ⁴)/n) = sqrt(896/n) for χ²₈.
        assert!((m.variance() - 16.0).abs() < 3.0 * (896.0 / n as f64).sqrt(), "var {}", m.variance());
        let d = ks_statistic(&mut xs, |x| 1.0 - reg_gamma_q(r as f64, x / 2.0).unwrap());
        assert!(d <= 0.005, "ks {d}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_channel_set(RngStream::new(9, 17), 30, 4).unwrap();
        let b = sample_channel_set(RngStream::new(9, 17), 30, 4).unwrap();
        let c = sample_channel_set(RngStream::new(9, 18), 30, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.norms(), c.norms());
    }

    #[test]
    fn angle_examples() {
        let q = ComplexVector::basis(3, 1).unwrap();
        let h = q.scaled(Complex64::new(0.3, -2.0));
        assert!((squared_angle(&h, &q).unwrap() - 1.0).abs() < 1e-15);
        let h = ComplexVector::basis(3, 2).unwrap();
        assert_eq!(squared_angle(&h, &q).unwrap(), 0.0);
        let zero = ComplexVector::new(vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        assert!(squared_angle(&zero, &q).is_err());
    }

    #[test]
    fn angle_distribution() {
        let r = 4;
        let q = ComplexVector::basis(r, 0).unwrap();
        let mut rng = RngStream::new(5, 1).rng();
        let mut xs: Vec<f64> = (0..100_000).map(|_| squared_angle(&sample_vector(&mut rng, r), &q).unwrap()).collect();
        let d = ks_statistic(&mut xs, |a| 1.0 - (1.0 - a).powi(r as i32 - 1));
        assert!(d <= 0.01, "ks {d}");
    }

    #[test]
    fn strongest_user() {
        let v = |x: f64| ComplexVector::new(vec![Complex64::new(x, 0.0)]).unwrap();
        let cs = ChannelSet::from_vectors(vec![v(1.0), v(3.0), v(-3.0), v(2.0)]).unwrap();
        assert_eq!(cs.strongest(), (1, 9.0));
    }
}
