//! Extreme-value constants and threshold design for `χ²₂ᵣ` channel gains.
//!
//! The maximum of `n` i.i.d. `χ²₂ᵣ` samples, centred by `b` and scaled by `a`,
//! converges to the Gumbel law. Two sets of constants are available: the
//! classical asymptotic ones and the quantile-based ones, which converge much
//! faster and are used everywhere downstream.


use crate::error::{Error, Result};
use crate::math::{inv_reg_gamma_q, ln_gamma, reg_gamma_q, EULER_GAMMA};

/// Scale `a`, location `b` and shape `xi` of a generalized extreme-value law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvtConstants {
    pub a: f64,
    pub b: f64,
    pub xi: f64,
}

impl EvtConstants {
    pub fn gumbel(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain("a", a, "scale must be finite and positive"));
        }
        if !b.is_finite() {
            return Err(Error::domain("b", b, "location must be finite"));
        }
        Ok(Self { a, b, xi: 0.0 })
    }
}

/// `a = 2`, `b = 2(ln n + (r−1) ln ln n − ln Γ(r))`.
pub fn evt_constants_slow(n: u64, r: u32) -> Result<EvtConstants> {
    if n < 3 {
        return Err(Error::domain("n", n as f64, "need n >= 3 so that ln ln n is defined"));
    }
    check_r(r)?;
    let ln_n = (n as f64).ln();
    let r = r as f64;
    EvtConstants::gumbel(2.0, 2.0 * (ln_n + (r - 1.0) * ln_n.ln() - ln_gamma(r)))
}

/// `b = 2q`, `a = (2/n) Γ(r) e^q q^{1−r}` with `q = Q⁻¹(r, 1/n)`.
pub fn evt_constants_fast(n: u64, r: u32) -> Result<EvtConstants> {
    if n < 2 {
        return Err(Error::domain("n", n as f64, "need n >= 2"));
    }
    check_r(r)?;
    let rf = r as f64;
    let nf = n as f64;
    let q = inv_reg_gamma_q(rf, 1.0 / nf)?;
    let a = if r == 1 {
        // Q⁻¹(1, 1/n) = ln n makes this exactly 2; keep it exact.
        2.0
    } else {
        2.0 * (ln_gamma(rf) + q + (1.0 - rf) * q.ln() - nf.ln()).exp()
    };
    EvtConstants::gumbel(a, 2.0 * q)
}

fn check_r(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::domain("r", 0.0, "antenna count must be positive"));
    }
    Ok(())
}

/// Threshold `u` on `‖h‖²` such that on average `k` of `n_users` exceed it:
/// `u = 2 Q⁻¹(r, k / K)`.
pub fn threshold_for_rate(n_users: u64, k: f64, r: u32) -> Result<f64> {
    check_r(r)?;
    if n_users == 0 {
        return Err(Error::domain("K", 0.0, "user count must be positive"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain("k", k, "k must be positive"));
    }
    if k > n_users as f64 {
        return Err(Error::domain("k", k, "k must not exceed the user count"));
    }
    Ok(2.0 * inv_reg_gamma_q(r as f64, k / n_users as f64)?)
}

/// Probability that one `χ²₂ᵣ` gain exceeds `u`.
pub fn exceedance_probability(u: f64, r: u32) -> Result<f64> {
    check_r(r)?;
    reg_gamma_q(r as f64, u / 2.0)
}

/// Point-process exceedance intensity `(1 + ξv)₊^{−1/ξ}`, `e^{−v}` at `ξ = 0`.
pub fn exceedance_intensity(v: f64, xi: f64) -> f64 {
    if xi == 0.0 {
        (-v).exp()
    } else {
        let base = 1.0 + xi * v;
        if base <= 0.0 {
            // (·)₊ = 0: the intensity is 0 for ξ < 0 and unbounded for ξ > 0.
            if xi > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            base.powf(-1.0 / xi)
        }
    }
}

/// The Gumbel law `exp(−exp(−(x − b)/a))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gumbel {
    pub a: f64,
    pub b: f64,
}

impl Gumbel {
    pub fn mean(&self) -> f64 {
        self.b + EULER_GAMMA * self.a
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-(-(x - self.b) / self.a).exp()).exp()
    }
}

/// Mean and distribution function of the Gumbel law with constants `c`.
pub fn gumbel_stats(c: &EvtConstants) -> Result<Gumbel> {
    if c.xi != 0.0 {
        return Err(Error::Unsupported("only the Gumbel case xi = 0 is implemented"));
    }
    Ok(Gumbel { a: c.a, b: c.b })
}

/// Approximate `E[‖h‖² | ‖h‖² > u] = u + a` from the exponential tail.
pub fn conditional_excess_mean(u: f64, c: &EvtConstants) -> f64 {
    u + c.a
}

/// A single threshold on `‖h‖²` together with what it was designed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub u: f64,
    pub k_target: f64,
    pub n_users: u64,
    pub r: u32,
}

impl ThresholdPolicy {
    /// Exact-quantile threshold for an expected `k` exceedances.
    pub fn from_rate(n_users: u64, k: f64, r: u32) -> Result<Self> {
        let u = threshold_for_rate(n_users, k, r)?;
        Ok(Self { u, k_target: k, n_users, r })
    }

    /// Point-process form `u = b − a ln k` with the fast constants. Agrees
    /// with [`ThresholdPolicy::from_rate`] as `K` grows.
    pub fn from_point_process(n_users: u64, k: f64, r: u32) -> Result<Self> {
        if !(k > 0.0 && k <= n_users as f64) {
            return Err(Error::domain("k", k, "k must lie in (0, K]"));
        }
        let c = evt_constants_fast(n_users, r)?;
        Ok(Self { u: (c.b - c.a * k.ln()).max(0.0), k_target: k, n_users, r })
    }

    /// A fixed threshold; `k_target` is the implied expected exceedance count.
    pub fn explicit(n_users: u64, u: f64, r: u32) -> Result<Self> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::domain("u", u, "threshold must be finite and non-negative"));
        }
        let k_target = n_users as f64 * exceedance_probability(u, r)?;
        Ok(Self { u, k_target, n_users, r })
    }
}
