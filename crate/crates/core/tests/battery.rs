mod common;

use bess_core::battery::{degradation_cost, rainflow_cycles, rainflow_from_points, BatterySpec, Cycle, SocTrajectory};
use bess_core::market_data::Timeline;
use chrono::NaiveDate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted(mut c: Vec<Cycle>) -> Vec<(f64, f64)> {
    c.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.weight.total_cmp(&b.weight)));
    c.into_iter().map(|c| (c.depth, c.weight)).collect()
}

#[test]
fn rainflow_matches_textbook_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..500 {
        let n = rng.random_range(2..200);
        let path: Vec<f64> = if i % 3 == 0 {
            // coarse levels produce plateaus and equal ranges
            (0..n).map(|_| rng.random_range(0..=10) as f64 / 10.0).collect()
        } else {
            let mut s: f64 = rng.random();
            (0..n)
                .map(|_| {
                    s = (s + rng.random_range(-0.3..0.3)).clamp(0.0, 1.0);
                    s
                })
                .collect()
        };
        assert_eq!(sorted(rainflow_from_points(&path)), common::rainflow_oracle(&path), "{path:?}");
    }
}

#[test]
fn one_excursion_is_one_full_cycle() {
    let c = rainflow_from_points(&[0.0, 1.0, 0.0]);
    assert_eq!(c, vec![Cycle { depth: 1.0, weight: 1.0 }]);
}

#[test]
fn full_depth_cycle_costs_forty_euro() {
    let tl = Timeline::quarter_hours(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 1).sub(0, 2);
    let traj = SocTrajectory::new(tl, vec![0.0, 1.0, 0.0]).unwrap();
    assert_eq!(degradation_cost(&rainflow_cycles(&traj), &BatterySpec::default()), 40.0);
}

proptest! {
    #[test]
    fn counted_ranges_add_up_to_total_variation(
        path in prop::collection::vec(0.0f64..=1.0, 2..80)
    ) {
        // a full cycle traverses its range twice, a half cycle once
        let cycles = rainflow_from_points(&path);
        for c in &cycles {
            prop_assert!(c.depth > 0.0 && c.depth <= 1.0);
            prop_assert!(c.weight == 0.5 || c.weight == 1.0);
        }
        let counted: f64 = cycles.iter().map(|c| 2.0 * c.weight * c.depth).sum();
        let variation: f64 = path.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        prop_assert!((counted - variation).abs() <= 1e-9);
    }
}
