//! Parallel Monte Carlo over slots.
//!
//! Slot `t` always draws its channels from stream `(seed, t)`. Slots are
//! grouped into fixed-size chunks, chunks run on a rayon pool, and partial
//! results are merged in chunk order, so output does not depend on the
//! number of threads.

use std::num::NonZeroUsize;

use macdiv_core::bounds::{mmse_lower, mmse_upper, zf_lower, zf_upper};
use macdiv_core::channel::{sample_channel_set, sample_vector, RngStream};
use macdiv_core::evt::{evt_constants_fast, evt_constants_slow, exceedance_probability, gumbel_stats, threshold_for_rate};
use macdiv_core::math::ComplexVector;
use macdiv_core::receivers::LogBase;
use macdiv_core::scheduler::{access_at_threshold, sic_slot, Receiver, SlotOutcome};
use macdiv_core::stats::{binomial_pmf, ks_statistic, poisson_pmf, tv_distance, Histogram, Moments};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, Target};
use crate::error::{Error, Result};

/// Slots per work unit. Part of the determinism contract: changing it
/// changes the floating-point merge order.
pub const CHUNK: u64 = 256;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MACDIV_THREADS";

pub struct Engine {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl Engine {
    pub fn new(threads: usize) -> Result<Self> {
        let threads = threads.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Runtime(e.to_string()))?;
        Ok(Self { pool, threads })
    }

    /// Uses `MACDIV_THREADS` if set, else the available parallelism.
    pub fn from_env() -> Result<Self> {
        let default = std::thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1);
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                Error::Config(vec![crate::config::FieldError::new(THREADS_ENV, "must be a positive integer")])
            })?,
            Err(_) => default,
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Runs `f` on each chunk `[start, end)` of `0..n` and returns the
    /// results in chunk order.
    pub fn map_chunks<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, u64) -> Result<T> + Sync,
    {
        let chunks = n.div_ceil(CHUNK);
        self.pool.install(|| {
            (0..chunks).into_par_iter().map(|c| f(c * CHUNK, ((c + 1) * CHUNK).min(n))).collect()
        })
    }

    /// Monte Carlo estimate of the expected sum capacity for `cfg`.
    pub fn run_slots(&self, cfg: &SystemConfig) -> Result<CapacitySummary> {
        check(cfg)?;
        let u = threshold_of(cfg)?;
        let base = LogBase::from(cfg.log_base);
        let (k, r) = (cfg.users as usize, cfg.antennas as usize);
        let parts = self.map_chunks(cfg.slots, |start, end| {
            let mut part = SummaryPart::default();
            for t in start..end {
                let cs = sample_channel_set(RngStream::new(cfg.seed, t), k, r)?;
                let out = match cfg.receiver.linear() {
                    Some(rx) => access_at_threshold(&cs, u, cfg.power, rx)?,
                    None => sic_slot(&cs, r, cfg.power, cfg.sic_target, cfg.convention())?.1,
                };
                part.push(&out, base.from_nats(out.sum_capacity()));
            }
            Ok(part)
        })?;
        let mut all = SummaryPart::default();
        for p in parts {
            all.merge(p);
        }
        Ok(all.finish(u))
    }

    /// One estimate per `k`, with bounds. Channels are drawn once per slot
    /// and reused for every `k`.
    pub fn run_sweep(&self, cfg: &SystemConfig, k_values: &[f64]) -> Result<SweepResult> {
        check(cfg)?;
        let rx = cfg
            .receiver
            .linear()
            .ok_or(macdiv_core::Error::Unsupported("sweeps are defined for the ZF and MMSE receivers"))?;
        let mut ks = k_values.to_vec();
        ks.sort_by(f64::total_cmp);
        let us = ks.iter().map(|&k| threshold_for_rate(cfg.users, k, cfg.antennas)).collect::<macdiv_core::Result<Vec<_>>>()?;
        let base = LogBase::from(cfg.log_base);
        let (n_users, r) = (cfg.users as usize, cfg.antennas as usize);
        let parts = self.map_chunks(cfg.slots, |start, end| {
            let mut parts = vec![SweepPart::default(); us.len()];
            for t in start..end {
                let cs = sample_channel_set(RngStream::new(cfg.seed, t), n_users, r)?;
                for (p, &u) in parts.iter_mut().zip(&us) {
                    let out = access_at_threshold(&cs, u, cfg.power, rx)?;
                    p.push(&out, base.from_nats(out.sum_capacity()));
                }
            }
            Ok(parts)
        })?;
        let mut acc = vec![SweepPart::default(); us.len()];
        for chunk in parts {
            for (a, p) in acc.iter_mut().zip(chunk) {
                a.merge(&p);
            }
        }
        let mut rows = Vec::with_capacity(ks.len());
        for ((&k, &u), a) in ks.iter().zip(&us).zip(&acc) {
            let (upper, lower) = sweep_bounds(rx, k, cfg)?;
            let n = cfg.slots as f64;
            rows.push(SweepRow {
                k,
                u,
                mc_mean: a.moments.mean(),
                mc_stderr: a.moments.stderr(),
                upper: upper.map(|v| base.from_nats(v)),
                lower: lower.map(|v| base.from_nats(v)),
                p_idle: a.idle as f64 / n,
                p_collision: a.collision as f64 / n,
                p_served: a.served as f64 / n,
            });
        }
        Ok(SweepResult { config: cfg.clone(), rows })
    }

    /// Sum-capacity distributions of several schedulers on the same channels.
    pub fn distribution_report(&self, cfg: &SystemConfig, comparators: &[Comparator]) -> Result<DistributionReport> {
        check(cfg)?;
        let u = threshold_of(cfg)?;
        let base = LogBase::from(cfg.log_base);
        let (n_users, r) = (cfg.users as usize, cfg.antennas as usize);
        let want_sic = comparators.contains(&Comparator::ZfsicGroup);
        let parts = self.map_chunks(cfg.slots, |start, end| {
            let mut values = vec![Vec::with_capacity((end - start) as usize); comparators.len()];
            let mut stages = vec![Moments::new(); if want_sic { r } else { 0 }];
            for t in start..end {
                let cs = sample_channel_set(RngStream::new(cfg.seed, t), n_users, r)?;
                for (vals, c) in values.iter_mut().zip(comparators) {
                    let v = match c {
                        Comparator::RandomUser => (cfg.power * cs.norms()[0]).ln_1p(),
                        Comparator::StrongestUser => (cfg.power * cs.strongest().1).ln_1p(),
                        Comparator::ZfGroup => access_at_threshold(&cs, u, cfg.power, Receiver::Zf)?.sum_capacity(),
                        Comparator::ZfsicGroup => {
                            let (_, out) = sic_slot(&cs, r, cfg.power, cfg.sic_target, cfg.convention())?;
                            if let SlotOutcome::Served { rates, .. } = &out {
                                for (m, &x) in stages.iter_mut().zip(&rates.rates) {
                                    m.push(base.from_nats(x));
                                }
                            }
                            out.sum_capacity()
                        }
                    };
                    vals.push(base.from_nats(v));
                }
            }
            Ok((values, stages))
        })?;
        let mut values = vec![Vec::with_capacity(cfg.slots as usize); comparators.len()];
        let mut stages = vec![Moments::new(); if want_sic { r } else { 0 }];
        for (vs, st) in parts {
            for (all, v) in values.iter_mut().zip(vs) {
                all.extend(v);
            }
            for (a, s) in stages.iter_mut().zip(&st) {
                a.merge(s);
            }
        }
        let max = values.iter().flatten().copied().fold(0.0, f64::max);
        let mut edges = Vec::new();
        let entries = comparators
            .iter()
            .zip(&values)
            .map(|(&c, vals)| {
                let h = Histogram::with_range(vals, max, Histogram::DEFAULT_BINS);
                let m: Moments = vals.iter().copied().collect();
                edges = h.edges.clone();
                ComparatorSummary {
                    comparator: c,
                    mean: m.mean(),
                    stderr: m.stderr(),
                    variance: m.variance(),
                    zero_count: h.zero_count,
                    counts: h.counts,
                }
            })
            .collect();
        Ok(DistributionReport {
            config: cfg.clone(),
            edges,
            comparators: entries,
            sic_stage_means: stages.iter().map(|m| MeanStderr { mean: m.mean(), stderr: m.stderr() }).collect(),
        })
    }

    /// Poisson, tail and conditional-moment diagnostics at a single `k`.
    ///
    /// `cfg.slots` is the target number of above-threshold vectors; groups of
    /// `K` users are drawn until about that many have been collected.
    pub fn diagnostics(&self, cfg: &SystemConfig) -> Result<DiagnosticsReport> {
        check(cfg)?;
        let Target::Rate(k) = cfg.target else {
            return Err(Error::Runtime("diagnostics need a target rate k".into()));
        };
        let (n_users, r) = (cfg.users, cfg.antennas);
        let u = threshold_for_rate(n_users, k, r)?;
        let a = evt_constants_fast(n_users, r)?.a;
        let p = exceedance_probability(u, r)?;

        let upto = n_users as usize + 64;
        let binom: Vec<f64> = (0..=n_users).map(|j| binomial_pmf(n_users, j, p)).collect();
        let pois: Vec<f64> = (0..upto as u64).map(|j| poisson_pmf(j, k)).collect();
        let tv_exact = tv_distance(&binom, &pois);

        let groups = (cfg.slots as f64 / k).ceil() as u64;
        let rd = r as usize;
        let parts = self.map_chunks(groups, |start, end| {
            let mut part = DiagPart::new(rd);
            let e1 = ComplexVector::basis(rd, 0)?;
            for t in start..end {
                let mut rng = RngStream::new(cfg.seed, t).rng();
                let mut count = 0usize;
                for _ in 0..n_users {
                    let h = sample_vector(&mut rng, rd);
                    let n = h.norm_sq();
                    if n > u {
                        count += 1;
                        part.add(&h, n, u, &e1)?;
                    }
                }
                if part.counts.len() <= count {
                    part.counts.resize(count + 1, 0);
                }
                part.counts[count] += 1;
            }
            Ok(part)
        })?;
        let mut all = DiagPart::new(rd);
        for p in parts {
            all.merge(p);
        }
        let empirical: Vec<f64> = all.counts.iter().map(|&c| c as f64 / groups as f64).collect();
        let tv_empirical = tv_distance(&empirical, &pois);
        let reference = u + a;
        let angle_ks = ks_statistic(&mut all.angles, |x| 1.0 - (1.0 - x).powi(r as i32 - 1));
        let excess_ks = ks_statistic(&mut all.excess, |x| 1.0 - (-x / a).exp());
        let entries = (0..rd)
            .map(|n| EntryStats {
                index: n,
                mean_re: all.mean_re[n].mean(),
                mean_re_stderr: all.mean_re[n].stderr(),
                mean_im: all.mean_im[n].mean(),
                mean_im_stderr: all.mean_im[n].stderr(),
                second_moment: all.second[n].mean(),
                second_moment_stderr: all.second[n].stderr(),
            })
            .collect();
        let pairs = all
            .pairs
            .iter()
            .map(|(m, n, re, im)| PairStats {
                m: *m,
                n: *n,
                re: re.mean(),
                re_stderr: re.stderr(),
                im: im.mean(),
                im_stderr: im.stderr(),
            })
            .collect();
        Ok(DiagnosticsReport {
            config: cfg.clone(),
            k,
            u,
            a,
            groups,
            conditional_samples: all.norm.count(),
            tv_exact,
            tv_empirical,
            cond_norm_mean: all.norm.mean(),
            cond_norm_stderr: all.norm.stderr(),
            cond_norm_reference: reference,
            cond_norm_ratio: all.norm.mean() / reference,
            entry_reference: reference / r as f64,
            entries,
            pairs,
            angle_ks,
            excess_ks,
        })
    }

    /// Fit of the max of `K` i.i.d. `χ²₂ᵣ` gains to the Gumbel law.
    pub fn evt_check(&self, n_users: u64, r: u32, trials: u64, seed: u64) -> Result<EvtReport> {
        if r == 0 || n_users < 3 || trials == 0 {
            return Err(Error::Config(vec![crate::config::FieldError::new(
                "users/antennas/trials",
                "evt-check needs users >= 3, antennas >= 1 and trials >= 1",
            )]));
        }
        let fast = evt_constants_fast(n_users, r)?;
        let slow = evt_constants_slow(n_users, r)?;
        let parts = self.map_chunks(trials, |start, end| {
            let mut out = Vec::with_capacity((end - start) as usize);
            for t in start..end {
                let mut rng = RngStream::new(seed, t).rng();
                let mut best = 0.0f64;
                for _ in 0..n_users {
                    best = best.max(sample_vector(&mut rng, r as usize).norm_sq());
                }
                out.push(best);
            }
            Ok(out)
        })?;
        let mut maxima: Vec<f64> = parts.into_iter().flatten().collect();
        let m: Moments = maxima.iter().copied().collect();
        let g = gumbel_stats(&fast)?;
        let gs = gumbel_stats(&slow)?;
        let ks_fast = ks_statistic(&mut maxima, |x| g.cdf(x));
        let ks_slow = ks_statistic(&mut maxima, |x| gs.cdf(x));
        Ok(EvtReport {
            users: n_users,
            antennas: r,
            trials,
            seed,
            a: fast.a,
            b: fast.b,
            a_slow: slow.a,
            b_slow: slow.b,
            ks: ks_fast,
            ks_slow,
            mc_mean: m.mean(),
            mc_stderr: m.stderr(),
            gumbel_mean: g.mean(),
        })
    }
}

fn check(cfg: &SystemConfig) -> Result<()> {
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errs))
    }
}

fn threshold_of(cfg: &SystemConfig) -> Result<f64> {
    Ok(match cfg.target {
        Target::Rate(k) => threshold_for_rate(cfg.users, k, cfg.antennas)?,
        Target::Threshold(u) => u,
    })
}

fn sweep_bounds(rx: Receiver, k: f64, cfg: &SystemConfig) -> Result<(Option<f64>, Option<f64>)> {
    let (n, r, p) = (cfg.users, cfg.antennas, cfg.power);
    Ok(match rx {
        Receiver::Zf => (Some(zf_upper(k, n, r, p)?), Some(zf_lower(k, n, r, p)?)),
        Receiver::Mmse => {
            let lower = if p == 1.0 && r >= 2 { Some(mmse_lower(k, n, r)?) } else { None };
            (Some(mmse_upper(k, n, r, p)?), lower)
        }
    })
}

#[derive(Default)]
struct SummaryPart {
    moments: Moments,
    exceedances: Moments,
    values: Vec<f64>,
    idle: u64,
    collision: u64,
    served: u64,
}

impl SummaryPart {
    fn push(&mut self, out: &SlotOutcome, cap: f64) {
        match out {
            SlotOutcome::Idle => self.idle += 1,
            SlotOutcome::Collision { .. } => self.collision += 1,
            SlotOutcome::Served { .. } => self.served += 1,
        }
        self.moments.push(cap);
        self.exceedances.push(out.exceedances() as f64);
        self.values.push(cap);
    }

    fn merge(&mut self, o: SummaryPart) {
        self.moments.merge(&o.moments);
        self.exceedances.merge(&o.exceedances);
        self.values.extend(o.values);
        self.idle += o.idle;
        self.collision += o.collision;
        self.served += o.served;
    }

    fn finish(self, u: f64) -> CapacitySummary {
        let h = Histogram::from_values(&self.values);
        CapacitySummary {
            n_slots: self.moments.count(),
            threshold: u,
            mean: self.moments.mean(),
            variance: self.moments.variance(),
            stderr: self.moments.stderr(),
            mean_exceedances: self.exceedances.mean(),
            idle: self.idle,
            collision: self.collision,
            served: self.served,
            histogram: HistogramData { edges: h.edges, zero_count: h.zero_count, counts: h.counts },
        }
    }
}

#[derive(Default, Clone)]
struct SweepPart {
    moments: Moments,
    idle: u64,
    collision: u64,
    served: u64,
}

impl SweepPart {
    fn push(&mut self, out: &SlotOutcome, cap: f64) {
        match out {
            SlotOutcome::Idle => self.idle += 1,
            SlotOutcome::Collision { .. } => self.collision += 1,
            SlotOutcome::Served { .. } => self.served += 1,
        }
        self.moments.push(cap);
    }

    fn merge(&mut self, o: &SweepPart) {
        self.moments.merge(&o.moments);
        self.idle += o.idle;
        self.collision += o.collision;
        self.served += o.served;
    }
}

struct DiagPart {
    counts: Vec<u64>,
    norm: Moments,
    mean_re: Vec<Moments>,
    mean_im: Vec<Moments>,
    second: Vec<Moments>,
    pairs: Vec<(usize, usize, Moments, Moments)>,
    angles: Vec<f64>,
    excess: Vec<f64>,
}

impl DiagPart {
    fn new(r: usize) -> Self {
        let mut pairs = Vec::new();
        for m in 0..r {
            for n in m + 1..r {
                pairs.push((m, n, Moments::new(), Moments::new()));
            }
        }
        Self {
            counts: Vec::new(),
            norm: Moments::new(),
            mean_re: vec![Moments::new(); r],
            mean_im: vec![Moments::new(); r],
            second: vec![Moments::new(); r],
            pairs,
            angles: Vec::new(),
            excess: Vec::new(),
        }
    }

    fn add(&mut self, h: &ComplexVector, n: f64, u: f64, e1: &ComplexVector) -> Result<()> {
        self.norm.push(n);
        self.excess.push(n - u);
        self.angles.push(macdiv_core::channel::squared_angle(h, e1)?);
        for i in 0..h.len() {
            self.mean_re[i].push(h[i].re);
            self.mean_im[i].push(h[i].im);
            self.second[i].push(h[i].norm_sqr());
        }
        for (m, n, re, im) in &mut self.pairs {
            let z = h[*m].conj() * h[*n];
            re.push(z.re);
            im.push(z.im);
        }
        Ok(())
    }

    fn merge(&mut self, o: DiagPart) {
        if self.counts.len() < o.counts.len() {
            self.counts.resize(o.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        self.norm.merge(&o.norm);
        for (a, b) in self.mean_re.iter_mut().zip(&o.mean_re) {
            a.merge(b);
        }
        for (a, b) in self.mean_im.iter_mut().zip(&o.mean_im) {
            a.merge(b);
        }
        for (a, b) in self.second.iter_mut().zip(&o.second) {
            a.merge(b);
        }
        for (a, b) in self.pairs.iter_mut().zip(&o.pairs) {
            a.2.merge(&b.2);
            a.3.merge(&b.3);
        }
        self.angles.extend(o.angles);
        self.excess.extend(o.excess);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramData {
    pub edges: Vec<f64>,
    pub zero_count: u64,
    pub counts: Vec<u64>,
}

/// Sum-capacity statistics of one Monte Carlo run. Idle and collision slots
/// count as zero capacity and land in the histogram's zero bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySummary {
    pub n_slots: u64,
    pub threshold: f64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub mean_exceedances: f64,
    pub idle: u64,
    pub collision: u64,
    pub served: u64,
    pub histogram: HistogramData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: f64,
    pub u: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub p_idle: f64,
    pub p_collision: f64,
    pub p_served: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SystemConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Row with the largest Monte Carlo mean.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().max_by(|a, b| a.mc_mean.total_cmp(&b.mc_mean))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    /// A fixed user, which is a uniformly random one since users are i.i.d.
    RandomUser,
    StrongestUser,
    ZfGroup,
    ZfsicGroup,
}

impl Comparator {
    pub const ALL: [Comparator; 4] =
        [Comparator::RandomUser, Comparator::StrongestUser, Comparator::ZfGroup, Comparator::ZfsicGroup];

    pub fn name(self) -> &'static str {
        match self {
            Comparator::RandomUser => "random-user",
            Comparator::StrongestUser => "strongest-user",
            Comparator::ZfGroup => "zf-group",
            Comparator::ZfsicGroup => "zfsic-group",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSummary {
    pub comparator: Comparator,
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    pub zero_count: u64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub config: SystemConfig,
    /// Shared bin edges; the zero bin is separate.
    pub edges: Vec<f64>,
    pub comparators: Vec<ComparatorSummary>,
    /// Mean rate of each SIC stage, empty unless the SIC group is included.
    pub sic_stage_means: Vec<MeanStderr>,
}

impl DistributionReport {
    pub fn get(&self, c: Comparator) -> Option<&ComparatorSummary> {
        self.comparators.iter().find(|s| s.comparator == c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryStats {
    pub index: usize,
    pub mean_re: f64,
    pub mean_re_stderr: f64,
    pub mean_im: f64,
    pub mean_im_stderr: f64,
    pub second_moment: f64,
    pub second_moment_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub m: usize,
    pub n: usize,
    pub re: f64,
    pub re_stderr: f64,
    pub im: f64,
    pub im_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub config: SystemConfig,
    pub k: f64,
    pub u: f64,
    pub a: f64,
    pub groups: u64,
    pub conditional_samples: u64,
    pub tv_exact: f64,
    pub tv_empirical: f64,
    pub cond_norm_mean: f64,
    pub cond_norm_stderr: f64,
    pub cond_norm_reference: f64,
    pub cond_norm_ratio: f64,
    pub entry_reference: f64,
    pub entries: Vec<EntryStats>,
    pub pairs: Vec<PairStats>,
    pub angle_ks: f64,
    pub excess_ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvtReport {
    pub users: u64,
    pub antennas: u32,
    pub trials: u64,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub a_slow: f64,
    pub b_slow: f64,
    pub ks: f64,
    pub ks_slow: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub gumbel_mean: f64,
}
