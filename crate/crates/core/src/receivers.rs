//! Per-user rates for the linear receivers and the ZF-SIC chain.
//!
//! With the active users' channels as columns of `H` and the Gram matrix
//! `G = H†H`, both linear receivers reduce to a single `j × j` Hermitian
//! inverse:
//!
//! * ZF: `‖Vᵢhᵢ‖² = 1 / [G⁻¹]ᵢᵢ`, the energy of `hᵢ` orthogonal to the
//!   other columns.
//! * MMSE: `hᵢ†(H₋ᵢH₋ᵢ† + I)⁻¹hᵢ = 1 / [(G + I)⁻¹]ᵢᵢ − 1`, by the matrix
//!   inversion lemma.
//!
//! The MMSE quadratic form uses unit noise regardless of `P`, with `P`
//! applied outside, so MMSE ≥ ZF per user is only guaranteed at `P = 1`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{hermitian_inverse, ComplexMatrix, ComplexVector, Orthonormal};

/// Logarithm base for reported rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Converts a value in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / core::f64::consts::LN_2,
        }
    }
}

/// Per-user achievable rates in nats.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateVector {
    pub rates: Vec<f64>,
}

impl RateVector {
    pub fn from_gains(gains: &[f64], power: f64) -> Self {
        Self { rates: gains.iter().map(|&g| (power * g.max(0.0)).ln_1p()).collect() }
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

fn check_power(power: f64) -> Result<()> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::domain("P", power, "power must be finite and positive"));
    }
    Ok(())
}

fn check_active(columns: &[&ComplexVector]) -> Result<usize> {
    let r = columns.first().map(|c| c.len()).ok_or_else(|| Error::Contract("no active users".into()))?;
    if columns.len() > r {
        return Err(Error::Contract(format!("{} active users exceed {} antennas", columns.len(), r)));
    }
    if columns.iter().any(|c| c.len() != r) {
        return Err(Error::Dimension("channel vectors differ in length".into()));
    }
    Ok(r)
}

/// `G + shift·I` with `G = H†H`.
fn gram(columns: &[&ComplexVector], shift: f64) -> ComplexMatrix {
    let j = columns.len();
    let mut g = ComplexMatrix::zeros(j, j);
    for a in 0..j {
        g.set(a, a, Complex64::new(columns[a].norm_sq() + shift, 0.0));
        for b in a + 1..j {
            // Inner products cannot fail: lengths were checked.
            let z = columns[a].inner(columns[b]).unwrap_or_default();
            g.set(a, b, z);
            g.set(b, a, z.conj());
        }
    }
    g
}

fn rank_error(e: Error) -> Error {
    match e {
        Error::Contract(_) => Error::RankDeficient { column: 0 },
        other => other,
    }
}

/// ZF post-projection gains `‖Vᵢhᵢ‖²`.
pub fn zf_gains(columns: &[&ComplexVector]) -> Result<Vec<f64>> {
    check_active(columns)?;
    if columns.len() == 1 {
        return Ok(alloc::vec![columns[0].norm_sq()]);
    }
    let inv = hermitian_inverse(&gram(columns, 0.0)).map_err(rank_error)?;
    Ok((0..columns.len()).map(|i| 1.0 / inv.get(i, i).re).collect())
}

/// `log(1 + P‖Vᵢhᵢ‖²)` for each active user.
pub fn zf_rates(columns: &[&ComplexVector], power: f64) -> Result<RateVector> {
    check_power(power)?;
    Ok(RateVector::from_gains(&zf_gains(columns)?, power))
}

/// MMSE output SINRs `hᵢ†(H₋ᵢH₋ᵢ† + I)⁻¹hᵢ`.
pub fn mmse_sinrs(columns: &[&ComplexVector]) -> Result<Vec<f64>> {
    check_active(columns)?;
    if columns.len() == 1 {
        return Ok(alloc::vec![columns[0].norm_sq()]);
    }
    let inv = hermitian_inverse(&gram(columns, 1.0))?;
    Ok((0..columns.len()).map(|i| (1.0 / inv.get(i, i).re - 1.0).max(0.0)).collect())
}

/// `log(1 + P hᵢ†Rᵢhᵢ)` for each active user.
pub fn mmse_rates(columns: &[&ComplexVector], power: f64) -> Result<RateVector> {
    check_power(power)?;
    Ok(RateVector::from_gains(&mmse_sinrs(columns)?, power))
}

/// Energy of each selected vector after projecting out its predecessors.
pub fn projection_chain(selected: &[&ComplexVector]) -> Result<Vec<f64>> {
    let r = check_active(selected)?;
    let mut basis = Orthonormal::new(r);
    let mut out = Vec::with_capacity(selected.len());
    for (l, h) in selected.iter().enumerate() {
        out.push(basis.residual_norm_sq(h.as_slice()));
        if l + 1 < selected.len() {
            basis.push(h.as_slice(), l)?;
        }
    }
    Ok(out)
}

/// Rates of the ZF-SIC chain, `log(1 + P‖V⁽ˡ⁻¹⁾h⁽ˡ⁾‖²)`. The supplied
/// `projections` must agree with a recomputation from `selected`.
pub fn zfsic_rates(selected: &[&ComplexVector], projections: &[f64], power: f64) -> Result<RateVector> {
    check_power(power)?;
    if selected.len() != projections.len() {
        return Err(Error::Contract(format!(
            "{} selected users but {} projected norms",
            selected.len(),
            projections.len()
        )));
    }
    let chain = projection_chain(selected)?;
    for (l, (&got, &want)) in projections.iter().zip(&chain).enumerate() {
        if (got - want).abs() > 1e-9 * want.max(1.0) {
            return Err(Error::Contract(format!("stage {l}: projected norm {got} but chain gives {want}")));
        }
    }
    Ok(RateVector::from_gains(&chain, power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_vector, RngStream};
    use crate::math::{nullspace_basis, quad_form};
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_columns(seed: u64, r: usize, j: usize) -> Vec<ComplexVector> {
        let mut rng = RngStream::new(seed, 0).rng();
        (0..j).map(|_| sample_vector(&mut rng, r)).collect()
    }

    fn refs(v: &[ComplexVector]) -> Vec<&ComplexVector> {
        v.iter().collect()
    }

    /// ‖Vᵢhᵢ‖² through an explicit null-space basis of the other columns.
    fn zf_by_nullspace(cols: &[ComplexVector]) -> Vec<f64> {
        let r = cols[0].len();
        (0..cols.len())
            .map(|i| {
                let others: Vec<&ComplexVector> = cols.iter().enumerate().filter(|(t, _)| *t != i).map(|(_, v)| v).collect();
                let v = nullspace_basis(&ComplexMatrix::from_columns(r, &others).unwrap()).unwrap();
                v.mul_vec(&cols[i]).unwrap().norm_sq()
            })
            .collect()
    }

    /// hᵢ†(H₋ᵢH₋ᵢ† + I)⁻¹hᵢ formed literally.
    fn mmse_direct(cols: &[ComplexVector]) -> Vec<f64> {
        let r = cols[0].len();
        (0..cols.len())
            .map(|i| {
                let mut a = ComplexMatrix::identity(r);
                for (t, h) in cols.iter().enumerate() {
                    if t == i {
                        continue;
                    }
                    for m in 0..r {
                        for n in 0..r {
                            a.set(m, n, a.get(m, n) + h[m] * h[n].conj());
                        }
                    }
                }
                quad_form(&cols[i], &hermitian_inverse(&a).unwrap()).unwrap()
            })
            .collect()
    }

    #[test]
    fn single_user() {
        let h = ComplexVector::new(vec![c(1.0, 1.0), c(0.0, -2.0)]).unwrap();
        let want = (1.0 + 2.0 * 6.0f64).ln();
        assert!((zf_rates(&[&h], 2.0).unwrap().rates[0] - want).abs() < 1e-15);
        assert!((mmse_rates(&[&h], 2.0).unwrap().rates[0] - want).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_columns_lose_nothing() {
        let a = ComplexVector::new(vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = ComplexVector::new(vec![c(0.0, 0.0), c(0.0, 1.5), c(-1.0, 0.0)]).unwrap();
        let zf = zf_gains(&[&a, &b]).unwrap();
        let mm = mmse_sinrs(&[&a, &b]).unwrap();
        for (g, h) in zf.iter().zip([&a, &b]) {
            assert!((g - h.norm_sq()).abs() < 1e-12);
        }
        for (g, h) in mm.iter().zip([&a, &b]) {
            assert!((g - h.norm_sq()).abs() < 1e-12);
        }
    }

    #[test]
    fn zf_two_by_two_geometry() {
        let cols = random_columns(42, 2, 2);
        let g = zf_gains(&refs(&cols)).unwrap();
        for i in 0..2 {
            let o = &cols[1 - i];
            // In C² the complement of o is spanned by (−conj(o₂), conj(o₁)) / ‖o‖.
            let n = o.norm_sq().sqrt();
            let v = ComplexVector::new(vec![-o[1].conj() / n, o[0].conj() / n]).unwrap();
            let want = v.inner(&cols[i]).unwrap().norm_sqr();
            assert!((g[i] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn zf_matches_nullspace_route() {
        for seed in 0..50 {
            for r in 1..=6 {
                for j in 1..=r {
                    let cols = random_columns(seed * 64 + (r * 8 + j) as u64, r, j);
                    let fast = zf_gains(&refs(&cols)).unwrap();
                    let slow = zf_by_nullspace(&cols);
                    for (a, b) in fast.iter().zip(&slow) {
                        assert!((a - b).abs() < 1e-9 * b.max(1.0), "r={r} j={j}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn mmse_matches_direct_and_dominates() {
        for seed in 0..50 {
            let cols = random_columns(1000 + seed, 4, 3);
            let fast = mmse_sinrs(&refs(&cols)).unwrap();
            let direct = mmse_direct(&cols);
            for (a, b) in fast.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-9 * b.max(1.0));
            }
            let zf = zf_rates(&refs(&cols), 1.0).unwrap();
            let mm = mmse_rates(&refs(&cols), 1.0).unwrap();
            for (z, m) in zf.rates.iter().zip(&mm.rates) {
                assert!(m >= z);
            }
        }
    }

    #[test]
    fn too_many_users_is_a_contract_error() {
        let cols = random_columns(1, 2, 3);
        assert!(matches!(zf_rates(&refs(&cols), 1.0), Err(Error::Contract(_))));
        assert!(matches!(mmse_rates(&refs(&cols), 1.0), Err(Error::Contract(_))));
        assert!(zf_rates(&[], 1.0).is_err());
        assert!(zf_rates(&refs(&cols[..1]), 0.0).is_err());
    }

    #[test]
    fn sic_chain() {
        let cols = random_columns(77, 2, 2);
        let chain = projection_chain(&refs(&cols)).unwrap();
        let rates = zfsic_rates(&refs(&cols), &chain, 1.0).unwrap();
        // Stage two sees only the part of h⁽²⁾ orthogonal to h⁽¹⁾.
        let v = nullspace_basis(&ComplexMatrix::from_columns(2, &[&cols[0]]).unwrap()).unwrap();
        let g2 = v.mul_vec(&cols[1]).unwrap().norm_sq();
        assert!((rates.rates[0] - cols[0].norm_sq().ln_1p()).abs() < 1e-12);
        assert!((rates.rates[1] - g2.ln_1p()).abs() < 1e-10);
        let bad = [chain[0], chain[1] * 1.5];
        assert!(matches!(zfsic_rates(&refs(&cols), &bad, 1.0), Err(Error::Contract(_))));
        assert!(zfsic_rates(&refs(&cols), &chain[..1], 1.0).is_err());
    }

    #[test]
    fn bits() {
        assert!((LogBase::Bits.from_nats(core::f64::consts::LN_2) - 1.0).abs() < 1e-15);
        assert_eq!(LogBase::Nats.from_nats(3.0), 3.0);
    }

    fn rotate(cols: &[ComplexVector], seed: u64) -> Vec<ComplexVector> {
        // A random unitary from the Q factor of a Gaussian matrix.
        let r = cols[0].len();
        let g = random_columns(seed, r, r);
        let mut q = Orthonormal::new(r);
        for (i, v) in g.iter().enumerate() {
            q.push(v.as_slice(), i).unwrap();
        }
        let u = ComplexMatrix::from_rows(r, &q.vectors().iter().map(|v| ComplexVector::new(v.clone()).unwrap()).collect::<Vec<_>>()).unwrap();
        cols.iter().map(|h| u.mul_vec(h).unwrap()).collect()
    }

    proptest! {
        #[test]
        fn mmse_sum_dominates_zf(seed in any::<u64>(), r in 1usize..7, frac in 0.0f64..1.0) {
            let j = 1 + ((r as f64 - 1e-9) * frac) as usize;
            let cols = random_columns(seed, r, j.min(r));
            let zf = zf_rates(&refs(&cols), 1.0).unwrap().sum();
            let mm = mmse_rates(&refs(&cols), 1.0).unwrap().sum();
            prop_assert!(mm + 1e-12 >= zf);
        }

        #[test]
        fn rates_invariant_under_rotation(seed in any::<u64>(), r in 1usize..6) {
            let cols = random_columns(seed, r, r);
            let rot = rotate(&cols, seed ^ 0x5555);
            for (f, tol) in [(zf_rates as fn(&[&ComplexVector], f64) -> Result<RateVector>, 1e-8), (mmse_rates, 1e-8)] {
                let a = f(&refs(&cols), 1.0).unwrap();
                let b = f(&refs(&rot), 1.0).unwrap();
                for (x, y) in a.rates.iter().zip(&b.rates) {
                    prop_assert!((x - y).abs() < tol * x.max(1.0));
                }
            }
        }
    }
}
