//! Closed-form bounds on the expected sum capacity.
//!
//! All thresholds come from [`threshold_for_rate`], the exact quantile the
//! simulator uses, so bounds and Monte Carlo estimates refer to the same
//! scheme. Values are in nats.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evt::{evt_constants_fast, gumbel_stats, threshold_for_rate};
use crate::math::{digamma, inv_reg_gamma_q, ln_gamma, ln_reg_gamma_q, ln_upper_gamma};
use crate::scheduler::Convention;
use crate::stats::poisson_pmf;

/// `e^{−k} k^j / j!`.
pub fn poisson_weight(j: u32, k: f64) -> f64 {
    poisson_pmf(j as u64, k)
}

fn check(k: f64, n_users: u64, r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::domain("r", 0.0, "antenna count must be positive"));
    }
    if !(k > 0.0 && k <= n_users as f64) {
        return Err(Error::domain("k", k, "k must lie in (0, K]"));
    }
    Ok(())
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain("P", p, "power must be finite and positive"));
    }
    Ok(())
}

/// ZF upper bound:
/// `Σⱼ₌₁ʳ w(j,k)·j·log(1 + (P/r)(r−j+1)(u_k + a))`.
pub fn zf_upper(k: f64, n_users: u64, r: u32, power: f64) -> Result<f64> {
    check(k, n_users, r)?;
    check_power(power)?;
    let u = threshold_for_rate(n_users, k, r)?;
    let a = evt_constants_fast(n_users, r)?.a;
    let rf = r as f64;
    Ok((1..=r)
        .map(|j| {
            let jf = j as f64;
            poisson_weight(j, k) * jf * (power / rf * (rf - jf + 1.0) * (u + a)).ln_1p()
        })
        .sum())
}

/// `(r−1)∫₀¹(1−α)^{r−2} log(1 + cα) dα`, the expected log-gain over the
/// squared angle between a channel and a fixed unit direction.
///
/// Uses the finite closed form
/// `((1+c)/c)^{r−1} log(1+c) − Σᵢ₌₀^{r−2} ((1+c)/c)^i / (r−1−i)`, except for
/// small `c` where it cancels badly and the Taylor series in `c` is used.
pub fn angle_log_series(r: u32, c: f64) -> Result<f64> {
    if r < 2 {
        return Err(Error::domain("r", r as f64, "the angle density needs r >= 2"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain("c", c, "c must be finite and positive"));
    }
    if c < 0.5 {
        // E[α^n] = n!(r−1)!/(n+r−1)! under the density (r−1)(1−α)^{r−2}.
        let m = (r - 1) as f64;
        let mut moment = 1.0;
        let mut cn = 1.0;
        let mut sum = 0.0;
        for n in 1..2000 {
            let nf = n as f64;
            moment *= nf / (nf + m);
            cn *= -c;
            let term = -cn / nf * moment;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(sum);
    }
    let t = (1.0 + c) / c;
    let mut tail = 0.0;
    let mut ti = 1.0;
    for i in 0..(r - 1) {
        tail += ti / (r - 1 - i) as f64;
        ti *= t;
    }
    // ti is now t^{r−1}.
    Ok(ti * c.ln_1p() - tail)
}

/// ZF lower bound `(Σⱼ₌₁ʳ w(j,k)·j) · angle_log_series(r, P u_k)`.
/// With one antenna there is no angle and the bound is `w(1,k) log(1 + P u_k)`.
pub fn zf_lower(k: f64, n_users: u64, r: u32, power: f64) -> Result<f64> {
    check(k, n_users, r)?;
    check_power(power)?;
    let u = threshold_for_rate(n_users, k, r)?;
    if r == 1 {
        return Ok(poisson_weight(1, k) * (power * u).ln_1p());
    }
    let weight: f64 = (1..=r).map(|j| poisson_weight(j, k) * j as f64).sum();
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(weight * angle_log_series(r, power * u)?)
}

/// SIC upper bound `Σₗ log(1 + P(b + γa))` with the stage-`l` constants of
/// `K` users and `r−l+1` degrees of freedom.
pub fn sic_upper(n_users: u64, r: u32, power: f64) -> Result<f64> {
    check_sic(n_users, r, 2)?;
    check_power(power)?;
    let mut s = 0.0;
    for l in 1..=r {
        let g = gumbel_stats(&evt_constants_fast(n_users, r - l + 1)?)?;
        s += (power * g.mean()).ln_1p();
    }
    Ok(s)
}

fn check_sic(n_users: u64, r: u32, min_users: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::domain("r", 0.0, "antenna count must be positive"));
    }
    if n_users < r as u64 || n_users < min_users {
        return Err(Error::domain("K", n_users as f64, "need K >= r and K large enough for the bound"));
    }
    Ok(())
}

/// High-probability SIC lower bound built from stage thresholds exceeded by
/// `ln K` users on average.
///
/// Corrected: `Σₗ₌₁ʳ log(1 + P·2Q⁻¹(r−l+1, ln K / K))`.
/// Literal: `Σₗ₌₁ʳ log(1 + 2Q⁻¹(r−l+2, ln K / K))`, no power and the
/// previous stage's threshold.
pub fn sic_lower(n_users: u64, r: u32, power: f64, convention: Convention) -> Result<f64> {
    check_sic(n_users, r, 3)?;
    check_power(power)?;
    let kf = n_users as f64;
    let p = kf.ln() / kf;
    let mut s = 0.0;
    for l in 1..=r {
        s += match convention {
            Convention::Corrected => (power * 2.0 * inv_reg_gamma_q((r - l + 1) as f64, p)?).ln_1p(),
            Convention::Literal => (2.0 * inv_reg_gamma_q((r - l + 2) as f64, p)?).ln_1p(),
        };
    }
    Ok(s)
}

/// MMSE upper bound:
/// `Σⱼ w(j,k)·j·log(1 + P(1 − (j−1)u²/[r((1+j/r)(u+a)² + a(a+1) + u)])(u+a))`.
pub fn mmse_upper(k: f64, n_users: u64, r: u32, power: f64) -> Result<f64> {
    check(k, n_users, r)?;
    check_power(power)?;
    let u = threshold_for_rate(n_users, k, r)?;
    let a = evt_constants_fast(n_users, r)?.a;
    let rf = r as f64;
    Ok((1..=r)
        .map(|j| {
            let jf = j as f64;
            let denom = rf * ((1.0 + jf / rf) * (u + a) * (u + a) + a * (a + 1.0) + u);
            let penalty = (jf - 1.0) * u * u / denom;
            poisson_weight(j, k) * jf * (power * (1.0 - penalty) * (u + a)).ln_1p()
        })
        .sum())
}

/// The three coefficients of the conditional log-expectation bound, for
/// `x ~ χ²₂₍ᵣ₋ⱼ₊₁₎`, `y ~ χ²₂₍ⱼ₋₁₎`, conditioned on `x + y > u`:
///
/// * `ratio = Γ(r)Γ(r−j+1, u/2) / (Γ(r, u/2)Γ(r−j+1))`
/// * `density = e^{−u/2} u^{r−1} / (2^{r−1} Γ(r, u/2))`
/// * `tail = e·Γ(r)Γ(r−j, 1+u/2) / (Γ(r, u/2)Γ(r−j+1))`
///
/// `Γ(0, ·)` in `tail` (the case `j = r`) is the exponential integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondLogCoefficients {
    pub ratio: f64,
    pub density: f64,
    pub tail: f64,
}

pub fn cond_log_coefficients(r: u32, j: u32, u: f64) -> Result<CondLogCoefficients> {
    if !(j > 1 && j <= r) {
        return Err(Error::Contract(format!("need 1 < j <= r, got j = {j}, r = {r}")));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain("u", u, "threshold must be finite and positive"));
    }
    let (rf, jf) = (r as f64, j as f64);
    let h = u / 2.0;
    let ln_q_r = ln_reg_gamma_q(rf, h)?;
    let ln_big_r = ln_gamma(rf) + ln_q_r;
    let ratio = (ln_reg_gamma_q(rf - jf + 1.0, h)? - ln_q_r).exp();
    let density = (-h + (rf - 1.0) * h.ln() - ln_big_r).exp();
    let tail = (1.0 + ln_gamma(rf) + ln_upper_gamma(rf - jf, 1.0 + h)? - ln_big_r - ln_gamma(rf - jf + 1.0)).exp();
    Ok(CondLogCoefficients { ratio, density, tail })
}

/// Lower bound on `E[log(1+x) | x + y > u]`:
/// `(ratio + density)·log u + density·(ψ(r−j+1) − ψ(r)) + tail`.
pub fn cond_log_expectation_lb(r: u32, j: u32, u: f64) -> Result<f64> {
    let c = cond_log_coefficients(r, j, u)?;
    let psi = digamma((r - j + 1) as f64)? - digamma(r as f64)?;
    Ok((c.ratio + c.density) * u.ln() + c.density * psi + c.tail)
}

/// MMSE lower bound at unit power:
/// `Σⱼ₌₂ʳ w(j,k)·j·cond_log_expectation_lb(r, j, u_k)`. The `j = 1` term is
/// left out.
pub fn mmse_lower(k: f64, n_users: u64, r: u32) -> Result<f64> {
    check(k, n_users, r)?;
    if r < 2 {
        return Err(Error::domain("r", r as f64, "the MMSE lower bound needs r >= 2"));
    }
    let u = threshold_for_rate(n_users, k, r)?;
    let mut s = 0.0;
    for j in 2..=r {
        s += poisson_weight(j, k) * j as f64 * cond_log_expectation_lb(r, j, u)?;
    }
    Ok(s)
}

/// Which bound a curve carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    ZfUpper,
    ZfLower,
    MmseUpper,
    MmseLower,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::ZfUpper => "zf_upper",
            BoundKind::ZfLower => "zf_lower",
            BoundKind::MmseUpper => "mmse_upper",
            BoundKind::MmseLower => "mmse_lower",
        }
    }

    /// Evaluates the bound at one `k`. The MMSE lower bound is only defined
    /// at `P = 1`.
    pub fn eval(self, k: f64, n_users: u64, r: u32, power: f64) -> Result<f64> {
        match self {
            BoundKind::ZfUpper => zf_upper(k, n_users, r, power),
            BoundKind::ZfLower => zf_lower(k, n_users, r, power),
            BoundKind::MmseUpper => mmse_upper(k, n_users, r, power),
            BoundKind::MmseLower => {
                if power != 1.0 {
                    return Err(Error::domain("P", power, "the MMSE lower bound assumes P = 1"));
                }
                mmse_lower(k, n_users, r)
            }
        }
    }
}

/// A bound sampled over `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub n_users: u64,
    pub r: u32,
    pub power: f64,
    pub points: Vec<(f64, f64)>,
}

/// Default step of the `k` grid.
pub const DEFAULT_K_STEP: f64 = 0.25;

/// `k_min, k_min + step, …` up to `k_max` (inclusive, with a little slack for
/// rounding). Points are computed as `k_min + i·step` so the grid does not drift.
pub fn k_grid(k_min: f64, k_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(k_min > 0.0) {
        return Err(Error::domain("k_min", k_min, "k must be positive"));
    }
    if !(step > 0.0) {
        return Err(Error::domain("k_step", step, "step must be positive"));
    }
    if !(k_max >= k_min) {
        return Err(Error::domain("k_max", k_max, "k_max must be at least k_min"));
    }
    let n = ((k_max - k_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| k_min + i as f64 * step).collect())
}

pub fn bound_curve(kind: BoundKind, n_users: u64, r: u32, power: f64, ks: &[f64]) -> Result<BoundCurve> {
    let points = ks.iter().map(|&k| Ok((k, kind.eval(k, n_users, r, power)?))).collect::<Result<_>>()?;
    Ok(BoundCurve { kind, n_users, r, power, points })
}
