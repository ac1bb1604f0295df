use bess_core::evaluation::{run_benchmarks, tau_scan, BenchConfig, TauScanConfig};
use bess_core::forecast::SynthMethod;
use bess_core::synthetic::{generate_market, SynthDataConfig};
use bess_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench(c: &mut Criterion) {
    let data = generate_market(&SynthDataConfig {
        days: 35,
        ..Default::default()
    })
    .unwrap()
    .data;
    let scan = TauScanConfig {
        grid: vec![0.0, 0.25, 0.5, 0.75, 0.9, 1.0],
        n_reps: 4,
        ..Default::default()
    };
    let suite = BenchConfig::default();

    let mut g = c.benchmark_group("parallel_vs_sequential");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}").to_lowercase();
        g.bench_with_input(BenchmarkId::new("tau_scan", &name), &exec, |b, &e| {
            b.iter(|| tau_scan(&data.xbid, SynthMethod::AlphaInterp, &scan, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("benchmark_suite", &name), &exec, |b, &e| {
            b.iter(|| run_benchmarks(&data, &suite, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
