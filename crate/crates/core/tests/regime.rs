mod common;

use bess_core::regime::{compute_features, fit_baum_welch, viterbi_path, FitConfig, RegimeModel};
use bess_core::synthetic::{generate_market, SynthDataConfig};
use bess_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn baum_welch_likelihood_never_decreases() {
    let cfg = FitConfig {
        n_states: 3,
        restarts: 5,
        ..Default::default()
    };
    for seed in 0..10 {
        let means = vec![vec![-2.0, 0.0, 1.0, 0.0], vec![0.0, 1.5, -1.0, 0.5], vec![2.0, -1.0, 0.0, -0.5]];
        let (_, obs) = common::sample_chain(&means, 0.8, 0.9, 150, seed);
        let fit = fit_baum_welch(&obs, &cfg, seed, Execution::Sequential).unwrap();
        for trace in &fit.traces {
            for w in trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }
    // the regime features the system fits on
    let m = generate_market(&SynthDataConfig {
        days: 7 * 80,
        ..Default::default()
    })
    .unwrap();
    let feats = compute_features(&m.data.fcr_weekly_mean(), &m.data.afrr_acceptance).unwrap();
    let fit = fit_baum_welch(&feats.standardized, &FitConfig::default(), 4, Execution::Sequential).unwrap();
    for trace in &fit.traces {
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    }
}

#[test]
fn viterbi_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..300 {
        let t = rng.random_range(1..=8);
        let mut row = || {
            let p: f64 = rng.random_range(0.05..0.95);
            vec![p, 1.0 - p]
        };
        let (pi, a0, a1) = (row(), row(), row());
        let m = RegimeModel {
            pi,
            a: vec![a0, a1],
            means: vec![vec![rng.random_range(-1.0..0.0), 0.0], vec![rng.random_range(0.0..1.0), 0.5]],
            vars: vec![vec![rng.random_range(0.3..2.0), 1.0], vec![rng.random_range(0.3..2.0), 0.7]],
        };
        let obs: Vec<Vec<f64>> = (0..t).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.5)]).collect();
        let mut best = (f64::NEG_INFINITY, vec![]);
        for code in 0..(1usize << t) {
            let path: Vec<usize> = (0..t).map(|i| (code >> i) & 1).collect();
            let lp = common::log_path(&m, &obs, &path);
            if lp > best.0 {
                best = (lp, path);
            }
        }
        assert_eq!(viterbi_path(&m, &obs), best.1);
    }
}

#[test]
fn two_state_chain_is_recovered() {
    let means = vec![vec![-1.0, -0.5, 0.0, 0.3], vec![1.0, 0.5, 0.0, -0.3]];
    let cfg = FitConfig {
        n_states: 2,
        ..Default::default()
    };
    for seed in 0..5 {
        let (truth, obs) = common::sample_chain(&means, 0.7, 0.95, 300, 100 + seed);
        let fit = fit_baum_welch(&obs, &cfg, seed, Execution::Parallel).unwrap();
        let path = viterbi_path(&fit.model, &obs);
        let same = path.iter().zip(&truth).filter(|(a, b)| a == b).count();
        let acc = same.max(truth.len() - same) as f64 / truth.len() as f64;
        assert!(acc >= 0.9, "seed {seed}: accuracy {acc}");
    }
}

#[test]
fn parallel_and_sequential_fits_agree() {
    let means = vec![vec![-1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]];
    let (_, obs) = common::sample_chain(&means, 0.7, 0.9, 120, 9);
    let cfg = FitConfig {
        n_states: 2,
        ..Default::default()
    };
    let a = fit_baum_welch(&obs, &cfg, 3, Execution::Sequential).unwrap();
    let b = fit_baum_welch(&obs, &cfg, 3, Execution::Parallel).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.ll_trace, b.ll_trace);
}
