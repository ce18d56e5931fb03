mod common;

use macdiv::config::{ReceiverKind, SystemConfig};
use macdiv::engine::{Comparator, Engine};
use macdiv_core::channel::{sample_channel_set, RngStream};
use macdiv_core::evt::{evt_constants_fast, gumbel_stats};
use macdiv_core::math::Orthonormal;
use macdiv_core::scheduler::{sic_select, Convention};
use macdiv_core::stats::ks_statistic;

#[test]
fn thread_count_does_not_change_results() {
    let cfg = SystemConfig::new(120, 4).with_k(2.0).with_slots(3000).with_seed(9);
    let runs: Vec<String> = [1, 3, 16]
        .iter()
        .map(|&t| {
            let e = Engine::new(t).unwrap();
            let a = serde_json::to_string(&e.run_slots(&cfg.clone().with_receiver(ReceiverKind::Zfsic)).unwrap()).unwrap();
            let b = serde_json::to_string(&e.distribution_report(&cfg, &Comparator::ALL).unwrap()).unwrap();
            let c = serde_json::to_string(&e.run_sweep(&cfg.clone().with_receiver(ReceiverKind::Mmse), &[0.5, 3.0]).unwrap()).unwrap();
            a + &b + &c
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn single_user_zero_threshold_matches_closed_form() {
    // One user, always served: E ln(1 + X) for X ~ Exp(mean 2) is e^{1/2} E₁(1/2).
    let cfg = SystemConfig::new(1, 1).with_threshold(0.0).with_slots(200_000).with_seed(1);
    let s = Engine::new(2).unwrap().run_slots(&cfg).unwrap();
    assert_eq!(s.served, 200_000);
    assert!((s.mean - 0.922_910_632_483_730_5).abs() < 4.0 * s.stderr, "{} +- {}", s.mean, s.stderr);
}

#[test]
fn unreachable_threshold_is_always_idle() {
    let cfg = SystemConfig::new(50, 2).with_threshold(1e6).with_slots(1000);
    let s = Engine::new(1).unwrap().run_slots(&cfg).unwrap();
    assert_eq!((s.idle, s.mean, s.variance), (1000, 0.0, 0.0));
    assert_eq!(s.histogram.zero_count, 1000);
}

#[test]
fn stderr_halves_with_four_times_the_slots() {
    let e = Engine::new(2).unwrap();
    let cfg = SystemConfig::new(100, 4).with_k(2.0).with_seed(3);
    let a = e.run_slots(&cfg.clone().with_slots(20_000)).unwrap().stderr;
    let b = e.run_slots(&cfg.with_slots(80_000)).unwrap().stderr;
    assert!((1.8..=2.2).contains(&(a / b)), "{}", a / b);
}

#[test]
fn sic_stage_maxima_of_fresh_users_are_gumbel() {
    // After l−1 selections, the best of K independent users projected away
    // from the selected span has r−l+1 degrees of freedom.
    let (n, r, trials) = (300usize, 4usize, 4000u64);
    for l in 2..=3usize {
        let mut maxima = Vec::new();
        for t in 0..trials {
            let cs = sample_channel_set(RngStream::new(21, t), n, r).unwrap();
            let sel = sic_select(&cs, r, 1.0, Convention::Corrected).unwrap();
            let mut basis = Orthonormal::new(r);
            for &i in &sel.order[..l - 1] {
                basis.push(cs.vector(i).as_slice(), i).unwrap();
            }
            let fresh = sample_channel_set(RngStream::new(22, t), n, r).unwrap();
            let best = fresh.vectors().iter().map(|h| basis.residual_norm_sq(h.as_slice())).fold(0.0, f64::max);
            maxima.push(best);
        }
        let g = gumbel_stats(&evt_constants_fast(n as u64, (r - l + 1) as u32).unwrap()).unwrap();
        let ks = ks_statistic(&mut maxima, |x| g.cdf(x));
        assert!(ks < 0.04, "stage {l}: ks {ks}");
    }
}

#[test]
fn sic_stage_rates_fall_and_sic_beats_zf() {
    let cfg = SystemConfig::new(300, 4).with_k(3.0).with_slots(5000).with_seed(4);
    let d = Engine::new(2).unwrap().distribution_report(&cfg, &Comparator::ALL).unwrap();
    let m: Vec<f64> = d.sic_stage_means.iter().map(|s| s.mean).collect();
    assert_eq!(m.len(), 4);
    assert!(m.windows(2).all(|w| w[1] <= w[0]), "{m:?}");
    assert!(d.get(Comparator::ZfsicGroup).unwrap().mean > d.get(Comparator::ZfGroup).unwrap().mean);
    for c in &d.comparators {
        assert_eq!(c.zero_count + c.counts.iter().sum::<u64>(), 5000);
    }
}

#[test]
fn optimal_k_is_below_r() {
    let e = Engine::new(2).unwrap();
    for r in [2u32, 4] {
        let cfg = SystemConfig::new(300, r).with_slots(20_000);
        let grid = macdiv::config::KGrid::default().values();
        let s = e.run_sweep(&cfg, &grid).unwrap();
        assert!(s.best().unwrap().k < r as f64);
    }
}

#[test]
fn sweeps_reject_sic() {
    let cfg = SystemConfig::new(30, 2).with_receiver(ReceiverKind::Zfsic);
    assert!(Engine::new(1).unwrap().run_sweep(&cfg, &[1.0]).is_err());
}

#[test]
fn excess_over_threshold_is_exponential() {
    let cfg = SystemConfig::new(300, 4).with_k(4.0).with_slots(100_000).with_seed(5);
    let d = Engine::new(2).unwrap().diagnostics(&cfg).unwrap();
    assert!(d.excess_ks <= 0.02, "{}", d.excess_ks);
    assert!(d.angle_ks <= 0.01, "{}", d.angle_ks);
    assert!(d.tv_exact <= 0.02);
}

#[test]
fn conditional_sampler_matches_rejection() {
    use macdiv_core::stats::ks_two_sample;
    for (r, j, u) in [(4u32, 2u32, 5.0), (4, 4, 10.0), (8, 5, 12.0)] {
        let s = common::ConditionalSampler::new(r, j, u);
        let mut rng = RngStream::new(1, 0).rng();
        let (mut xs, mut ss): (Vec<f64>, Vec<f64>) = (0..50_000).map(|_| s.draw(&mut rng)).unzip();
        let (mut xr, mut sr): (Vec<f64>, Vec<f64>) = (0..50_000).map(|_| common::rejection_draw(&mut rng, r, j, u)).unzip();
        assert!(ks_two_sample(&mut xs, &mut xr) < 0.012, "x r={r} j={j}");
        assert!(ks_two_sample(&mut ss, &mut sr) < 0.012, "sum r={r} j={j}");
        assert!(ss.iter().all(|&v| v > u));
    }
}
