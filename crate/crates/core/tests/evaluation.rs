use bess_core::evaluation::{run_benchmarks, tau_scan, BenchConfig, TauScanConfig};
use bess_core::forecast::SynthMethod;
use bess_core::synthetic::{generate_market, SynthDataConfig};
use bess_core::Execution;

#[test]
fn benchmark_suite_on_shuffled_days() {
    let data = generate_market(&SynthDataConfig {
        days: 90,
        shuffle_days: true,
        ..Default::default()
    })
    .unwrap()
    .data;
    let r = run_benchmarks(&data, &BenchConfig::default(), Execution::Parallel).unwrap();
    let vcr = |n: &str| r.report(n).unwrap().vcr;
    assert_eq!(vcr("oracle"), 1.0);
    assert!(vcr("hybrid") >= vcr("learned_ar"), "{} < {}", vcr("hybrid"), vcr("learned_ar"));
    assert!(vcr("learned_ar") >= vcr("da_anchor"));
    assert!(vcr("da_anchor") > vcr("persistence"));
    // shuffling removes the day-to-day shape persistence relies on
    assert!(r.report("persistence").unwrap().tau.abs() <= 0.1);
    assert!((0.0..=1.0).contains(&r.ri));
}

#[test]
fn sequential_and_parallel_benchmarks_agree() {
    let data = generate_market(&SynthDataConfig {
        days: 35,
        ..Default::default()
    })
    .unwrap()
    .data;
    let cfg = BenchConfig {
        train_days: 28,
        ..Default::default()
    };
    let a = run_benchmarks(&data, &cfg, Execution::Sequential).unwrap();
    let b = run_benchmarks(&data, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.days, b.days);
}

#[test]
fn coarse_scan_rises_towards_the_oracle() {
    let data = generate_market(&SynthDataConfig {
        days: 30,
        ..Default::default()
    })
    .unwrap()
    .data;
    let cfg = TauScanConfig {
        grid: vec![0.0, 0.5, 0.95, 1.0],
        n_reps: 4,
        ..Default::default()
    };
    let r = tau_scan(&data.xbid, SynthMethod::AlphaInterp, &cfg, Execution::Parallel).unwrap();
    assert_eq!(r.points.len(), 4);
    assert_eq!(r.points[3].vcr_mean, 1.0);
    assert!(r.points[0].vcr_mean < r.points[2].vcr_mean);
    for p in &r.points {
        assert!((p.achieved_tau_mean - p.target_tau).abs() <= 0.03);
    }
    let short = data.xbid.slice(0, 29 * 96);
    assert!(tau_scan(&short, SynthMethod::AlphaInterp, &cfg, Execution::Sequential).is_err());
}
