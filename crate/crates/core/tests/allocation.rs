use bess_core::allocation::{
    acceptance_probability, block_bootstrap, optimize_allocation, soc_buffer, AllocationLimits, ClearingDistribution,
    WeeklyAllocation, XbidTerm,
};
use bess_core::battery::BatterySpec;
use bess_core::synthetic::{generate_market, SynthDataConfig};
use bess_core::Execution;
use proptest::prelude::*;

#[test]
fn buffer_for_five_mw_fcr_on_ten_mwh_is_a_quarter() {
    assert_eq!(soc_buffer(5.0, 0.0, 10.0).unwrap(), 0.25);
    assert!(soc_buffer(12.0, 5.0, 10.0).is_err());
}

/// Weeks 8..28 of a market whose FCR prices dwarf everything else.
#[test]
fn fcr_cap_binds_when_fcr_dominates() {
    let window = 8;
    let m = generate_market(&SynthDataConfig {
        days: 7 * (window + 20),
        fcr_level: 400.0,
        afrr_level: 1.0,
        ..Default::default()
    })
    .unwrap();
    let history = m.data.history().unwrap();
    let spec = BatterySpec::default();
    let limits = AllocationLimits::default();
    for w in window..window + 20 {
        let scenarios = block_bootstrap(&history, w, window, 20, w as u64).unwrap();
        let dists = history.distributions(w, window).unwrap();
        let mut xbid = XbidTerm::new(&spec, limits.grid);
        let (a, _) =
            optimize_allocation(&scenarios, 50.0, &dists, &spec, &limits, &mut xbid, Execution::Parallel).unwrap();
        assert_eq!(a.p_fcr, 5.0, "week {w}: {a:?}");
    }
}

proptest! {
    #[test]
    fn acceptance_falls_as_the_bid_rises(
        prices in prop::collection::vec(0.0f64..200.0, 1..60),
        a in 0.0f64..250.0,
        b in 0.0f64..250.0,
    ) {
        let d = ClearingDistribution::new(prices, 1).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(acceptance_probability(lo, &d) >= acceptance_probability(hi, &d));
    }

    #[test]
    fn feasible_allocations_keep_the_buffer_inside_the_battery(
        f in 0.0f64..10.0,
        u in 0.0f64..10.0,
        d in 0.0f64..10.0,
    ) {
        let spec = BatterySpec::default();
        if let Ok(a) = WeeklyAllocation::new(f, u, d, &spec) {
            prop_assert!(a.soc_min <= a.soc_max);
            prop_assert!(a.p_xbid >= -1e-12);
            prop_assert!(a.p_fcr + a.p_afrr_up.max(a.p_afrr_dn) + a.p_xbid <= spec.p_max + 1e-9);
        }
    }
}
