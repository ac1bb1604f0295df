mod common;

use bess_core::hydro::{
    classify, classify_regime, leadlag_scan, ols_fit, peak_lag, run_hydro, week_of_year, AnomalySeries, HydroConfig,
    HydroRegime,
};
use bess_core::synthetic::{generate_hydro, HydroSynthConfig};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;

#[test]
fn week_of_year_groups_have_zero_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let z = common::hydro_anomaly(&mut rng, 0.8);
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (d, v) in z.week_start.iter().zip(&z.z) {
        groups.entry(week_of_year(*d)).or_default().push(*v);
    }
    for (w, g) in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        assert!(m.abs() < 1e-9, "week {w}: mean {m}");
    }
}

#[test]
fn injected_slope_is_recovered_within_two_standard_errors() {
    let (a, b) = (6000.0, -1500.0);
    let noise = Normal::new(0.0, 900.0).unwrap();
    // two standard errors with ~258 residual dof cover about 95.4% of draws;
    // 2000 trials pin the rate to within about two binomial SEs
    let n = 2000;
    let mut hits = 0;
    for trial in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let z = common::hydro_anomaly(&mut rng, 0.7);
        let revenue: Vec<f64> = z.z.iter().map(|v| a + b * v + noise.sample(&mut rng)).collect();
        let fit = ols_fit(&z.z, &revenue).unwrap();
        if (fit.slope - b).abs() <= 2.0 * fit.slope_se {
            hits += 1;
        }
    }
    let rate = hits as f64 / n as f64;
    assert!((0.94..=0.965).contains(&rate), "coverage {rate}");
}

#[test]
fn injected_lag_is_found() {
    let noise = Normal::new(0.0, 0.6).unwrap();
    let mut hits = 0;
    for trial in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + trial);
        let lag = rng.random_range(1..=6);
        let z = common::hydro_anomaly(&mut rng, 0.5);
        let price: Vec<f64> = (0..common::HYDRO_WEEKS)
            .map(|t| if t >= lag { -z.z[t - lag] } else { 0.0 } + noise.sample(&mut rng))
            .collect();
        let scan = leadlag_scan(&z.z, &price, 8).unwrap();
        if peak_lag(&scan).is_some_and(|p| p.abs_diff(lag) <= 1) {
            hits += 1;
        }
    }
    assert!(hits >= 180, "{hits} of 200");
}

#[test]
fn boundary_values_are_medium() {
    assert_eq!(classify(-0.8), HydroRegime::Medium);
    assert_eq!(classify(0.7), HydroRegime::Medium);
    assert_eq!(classify(-0.800_000_1), HydroRegime::Low);
    assert_eq!(classify(0.700_000_1), HydroRegime::High);
    let s = AnomalySeries {
        week_start: common::mondays(3),
        z: vec![-0.8, 0.0, 0.7],
    };
    assert_eq!(classify_regime(&s), vec![HydroRegime::Medium; 3]);
}

#[test]
fn pipeline_on_synthetic_panel() {
    let data = generate_hydro(&HydroSynthConfig::default(), NaiveDate::from_ymd_opt(2020, 1, 6).unwrap()).unwrap();
    let r = run_hydro(&data, &HydroConfig::default()).unwrap();
    assert_eq!(r.table.rows.len(), 3);
    assert_eq!(r.regimes.len(), data.week_start.len());
    assert_eq!(r.table.rows.iter().map(|row| row.n_weeks).sum::<usize>(), data.week_start.len());
    assert_eq!(r.links.len(), 2);
    // surplus water raises downward reserve prices in the synthetic panel
    assert!(r.links[0].ols.slope > 0.0);
    assert!(r.peak_lag.is_some());
}
