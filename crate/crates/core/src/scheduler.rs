//! The two distributed channel-access procedures.
//!
//! In the single-threshold procedure every user whose `‖hᵢ‖²` exceeds `u`
//! transmits. Up to `r` simultaneous users are separated by a linear receiver;
//! more than `r` is a collision and the slot carries nothing.
//!
//! The SIC procedure runs `r` stages. Stage `l` looks at every remaining
//! user's channel projected onto the null space of the users already chosen
//! and picks the strongest. Contention inside a stage is assumed to be
//! resolved perfectly, so the argmax is found exactly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::evt::ThresholdPolicy;
use crate::math::inv_reg_gamma_q;
use crate::math::ComplexVector;
use crate::receivers::{mmse_rates, zf_rates, zfsic_rates, RateVector};

/// Linear receiver used by the single-threshold procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    Zf,
    Mmse,
}

/// How the SIC stage thresholds and the SIC lower bound are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Convention {
    /// `u⁽ˡ⁾ = 2Q⁻¹(r−l+1, target/K)`, consistent with `‖h‖² ~ χ²₂ᵣ`, and
    /// `P` kept inside the lower bound's logarithm.
    #[default]
    Corrected,
    /// `u⁽ˡ⁾ = Q⁻¹(r−l+1, target/K)` and a `P`-free lower bound whose
    /// stage index is shifted by one.
    Literal,
}

/// Result of one slot.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotOutcome {
    Idle,
    Collision { exceedances: usize },
    Served { users: Vec<usize>, rates: RateVector },
}

impl SlotOutcome {
    /// Number of users that attempted transmission.
    pub fn exceedances(&self) -> usize {
        match self {
            SlotOutcome::Idle => 0,
            SlotOutcome::Collision { exceedances } => *exceedances,
            SlotOutcome::Served { users, .. } => users.len(),
        }
    }

    pub fn sum_capacity(&self) -> f64 {
        match self {
            SlotOutcome::Served { rates, .. } => rates.sum(),
            _ => 0.0,
        }
    }

    pub fn is_served(&self) -> bool {
        matches!(self, SlotOutcome::Served { .. })
    }
}

/// Single-threshold access at level `u` on `‖h‖²`.
pub fn access_at_threshold(channels: &ChannelSet, u: f64, power: f64, receiver: Receiver) -> Result<SlotOutcome> {
    let active: Vec<usize> = channels.norms().iter().enumerate().filter(|(_, &n)| n > u).map(|(i, _)| i).collect();
    let r = channels.antennas();
    match active.len() {
        0 => Ok(SlotOutcome::Idle),
        j if j > r => Ok(SlotOutcome::Collision { exceedances: j }),
        _ => {
            let cols: Vec<&ComplexVector> = active.iter().map(|&i| channels.vector(i)).collect();
            let rates = match receiver {
                Receiver::Zf => zf_rates(&cols, power)?,
                Receiver::Mmse => mmse_rates(&cols, power)?,
            };
            Ok(SlotOutcome::Served { users: active, rates })
        }
    }
}

/// Single-threshold access with a designed policy.
pub fn channel_access(
    channels: &ChannelSet,
    policy: &ThresholdPolicy,
    power: f64,
    receiver: Receiver,
) -> Result<SlotOutcome> {
    if policy.r as usize != channels.antennas() {
        return Err(Error::Contract(alloc::format!(
            "policy designed for r = {} but channels have {} antennas",
            policy.r,
            channels.antennas()
        )));
    }
    access_at_threshold(channels, policy.u, power, receiver)
}

/// Stage-by-stage record of a SIC selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SicSelection {
    pub order: Vec<usize>,
    pub projected_norms: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub exceeded_flags: Vec<bool>,
}

impl SicSelection {
    pub fn all_exceeded(&self) -> bool {
        self.exceeded_flags.iter().all(|&f| f)
    }
}

/// Stage thresholds `u⁽ˡ⁾`, `l = 1..r`.
pub fn sic_thresholds(n_users: usize, r: usize, exceed_target: f64, convention: Convention) -> Result<Vec<f64>> {
    if !(exceed_target > 0.0 && exceed_target <= n_users as f64) {
        return Err(Error::domain("exceed_target", exceed_target, "must lie in (0, K]"));
    }
    let scale = match convention {
        Convention::Corrected => 2.0,
        Convention::Literal => 1.0,
    };
    (1..=r)
        .map(|l| Ok(scale * inv_reg_gamma_q((r - l + 1) as f64, exceed_target / n_users as f64)?))
        .collect()
}

/// Runs the `r` SIC stages on `channels`.
pub fn sic_select(channels: &ChannelSet, r: usize, exceed_target: f64, convention: Convention) -> Result<SicSelection> {
    let k = channels.users();
    if r == 0 || r != channels.antennas() {
        return Err(Error::Contract(alloc::format!(
            "SIC needs r equal to the antenna count {}, got {r}",
            channels.antennas()
        )));
    }
    if k < r {
        return Err(Error::Contract(alloc::format!("SIC needs K >= r, got K = {k}, r = {r}")));
    }
    let thresholds = sic_thresholds(k, r, exceed_target, convention)?;

    // Residual of every user's channel after the projections so far.
    let mut residuals: Vec<Vec<Complex64>> = channels.vectors().iter().map(|v| v.as_slice().to_vec()).collect();
    let mut norms: Vec<f64> = channels.norms().to_vec();
    let mut taken = vec![false; k];
    let mut sel = SicSelection {
        order: Vec::with_capacity(r),
        projected_norms: Vec::with_capacity(r),
        thresholds,
        exceeded_flags: Vec::with_capacity(r),
    };
    for l in 0..r {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..k {
            if !taken[i] && best.is_none_or(|(_, b)| norms[i] > b) {
                best = Some((i, norms[i]));
            }
        }
        let (i, n) = best.expect("K >= r leaves a candidate");
        taken[i] = true;
        sel.order.push(i);
        sel.projected_norms.push(n);
        sel.exceeded_flags.push(n > sel.thresholds[l]);
        if l + 1 == r {
            break;
        }
        if !(n > 0.0) {
            return Err(Error::RankDeficient { column: i });
        }
        let s = 1.0 / n.sqrt();
        let q: Vec<Complex64> = residuals[i].iter().map(|z| z * s).collect();
        for t in 0..k {
            if taken[t] {
                continue;
            }
            let w = &mut residuals[t];
            let c: Complex64 = q.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            for (wi, qi) in w.iter_mut().zip(&q) {
                *wi -= c * qi;
            }
            norms[t] = w.iter().map(|z| z.norm_sqr()).sum();
        }
    }
    Ok(sel)
}

/// One SIC slot: select, then decode the chain. Always served.
pub fn sic_slot(
    channels: &ChannelSet,
    r: usize,
    power: f64,
    exceed_target: f64,
    convention: Convention,
) -> Result<(SicSelection, SlotOutcome)> {
    let sel = sic_select(channels, r, exceed_target, convention)?;
    let chosen: Vec<&ComplexVector> = sel.order.iter().map(|&i| channels.vector(i)).collect();
    let rates = zfsic_rates(&chosen, &sel.projected_norms, power)?;
    let outcome = SlotOutcome::Served { users: sel.order.clone(), rates };
    Ok((sel, outcome))
}
