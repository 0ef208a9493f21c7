use aoi_core::fp::{build_fp_rmc, entry_probabilities, rmc_stationary};
use aoi_core::sim::{run_replication, Trace};
use aoi_core::{simulate, zw_closed_form_means, FpParams, SimConfig, SimPolicy, ZwParams};

fn zw(mu1: f64, mu2: f64) -> SimPolicy {
    SimPolicy::Zw(ZwParams::new(mu1, mu2).unwrap())
}

fn fp(mu1: f64, mu2: f64, lambda: f64, k: u32) -> SimPolicy {
    SimPolicy::Fp(FpParams::new(mu1, mu2, lambda, k).unwrap())
}

fn traced(policy: SimPolicy, horizon: u64) -> (aoi_core::sim::RawReplication, Trace) {
    let mut cfg = SimConfig::new(policy, horizon, 42, 1);
    cfg.warmup = Some(0);
    let mut raw = run_replication(&cfg, 0, true);
    let trace = raw.trace.take().unwrap();
    (raw, trace)
}

#[test]
fn accepted_packets_are_in_order() {
    for policy in [zw(1.0, 0.2), fp(0.5, 0.1, 1.0, 10), SimPolicy::FpPreemptOnly(ZwParams::new(1.0, 0.5).unwrap())] {
        let (_, trace) = traced(policy, 20_000);
        assert!(trace.accepted.windows(2).all(|w| {
            let ((g0, r0, s0), (g1, r1, s1)) = (w[0], w[1]);
            g1 >= g0 && r1 >= r0 && s1 > s0
        }));
        assert!(trace.accepted.iter().all(|(g, r, _)| r > g));
    }
}

#[test]
fn freeze_preempt_never_discards() {
    for policy in [fp(0.5, 0.1, 1.0, 1), fp(1.0, 1.0, 3.0, 50), SimPolicy::FpPreemptOnly(ZwParams::new(1.0, 0.1).unwrap())] {
        let (raw, trace) = traced(policy, 50_000);
        assert_eq!(raw.discarded, 0);
        assert!(trace.discarded.is_empty());
        assert!(raw.preempted > 0);
    }
}

#[test]
fn zero_wait_discards_stale_packets() {
    let (raw, trace) = traced(zw(1.0, 0.01), 50_000);
    assert!(raw.discarded > 0);
    assert_eq!(raw.discarded as usize, trace.discarded.len());
    assert!(trace.discarded.iter().all(|(seq, newest)| seq < newest));
    assert_eq!(raw.preempted, 0);
}

#[test]
fn area_bookkeeping_is_exact() {
    let (raw, trace) = traced(fp(0.5, 0.1, 1.0, 10), 10_000);
    let (mut area, mut duration, mut peaks) = (0.0, 0.0, 0.0);
    for w in trace.accepted.windows(2) {
        let ((g0, r0, _), (_, r1, _)) = (w[0], w[1]);
        // age rises linearly from r0 - g0 over [r0, r1)
        let (start, length) = (r0 - g0, r1 - r0);
        area += start * length + length * length / 2.0;
        duration += length;
        peaks += start + length;
    }
    assert_eq!(raw.starts.len(), trace.accepted.len() - 1);
    assert!(((raw.area - area) / area).abs() < 1e-12);
    assert!(((raw.duration - duration) / duration).abs() < 1e-12);
    assert!(((raw.peak_sum - peaks) / peaks).abs() < 1e-12);
}

#[test]
fn zero_wait_means_match_closed_forms() {
    let p = ZwParams::new(1.0, 1.0).unwrap();
    let (paoi, aoi) = zw_closed_form_means(&p);
    let r = simulate(&SimConfig::new(SimPolicy::Zw(p), 100_000, 7, 8)).unwrap();
    assert!(r.mean_aoi.within(aoi, 3.0), "{:?} vs {aoi}", r.mean_aoi);
    assert!(r.mean_paoi.within(paoi, 3.0), "{:?} vs {paoi}", r.mean_paoi);
}

#[test]
fn fixed_seed_is_reproducible_and_thread_independent() {
    let cfg = SimConfig::new(fp(0.5, 0.1, 1.0, 10), 5_000, 11, 4);
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = single.install(|| simulate(&cfg).unwrap());
    assert_eq!(a, c);
    for (i, rep) in a.per_replication.iter().enumerate() {
        let raw = run_replication(&cfg, i as u32, false);
        assert_eq!(rep.mean_aoi, raw.area / raw.duration);
    }
    let other = simulate(&SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.mean_aoi, other.mean_aoi);
}

#[test]
fn entry_frequencies_match_stationary_law() {
    let p = FpParams::new(0.5, 0.1, 1.0, 10).unwrap();
    let st = rmc_stationary(&p, &build_fp_rmc(&p)).unwrap();
    let expected = entry_probabilities(&p, &st);
    let r = simulate(&SimConfig::new(SimPolicy::Fp(p), 200_000, 5, 2)).unwrap();
    let total: u64 = r.entries.iter().sum();
    assert_eq!(total, r.generated);
    for (count, e) in r.entries.iter().zip(expected) {
        let freq = *count as f64 / total as f64;
        assert!((freq - e).abs() < 0.01, "{freq} vs {e}");
    }
}

#[test]
fn empirical_cdfs_are_distribution_functions() {
    let r = simulate(&SimConfig::new(zw(1.0, 0.3), 20_000, 3, 2)).unwrap();
    for e in [&r.empirical_aoi_cdf, &r.empirical_paoi_cdf] {
        assert_eq!(e.grid.len(), e.cdf.len());
        assert!(e.cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!(e.cdf.iter().all(|c| (0.0..=1.0).contains(c)));
        assert!(*e.cdf.last().unwrap() > 0.999);
    }
    let mut csv = Vec::new();
    r.empirical_aoi_cdf.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("x,cdf\n"));
}
