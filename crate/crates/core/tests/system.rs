use bess_core::synthetic::{generate_market, SynthDataConfig};
use bess_core::system::{
    run_ablation, simulate, AblationConfig, DayAhead, ForecasterKind, Layers, Reserves, SystemConfig, ABLATION_CHAIN,
    LAYER23,
};
use bess_core::Execution;

fn small_config() -> SystemConfig {
    SystemConfig {
        n_scenarios: 8,
        window_weeks: 8,
        train_days: 14,
        hmm_restarts: 3,
        ..Default::default()
    }
}

#[test]
fn four_weeks_give_four_allocations_and_28_schedules() {
    let data = generate_market(&SynthDataConfig {
        days: 7 * 12,
        ..Default::default()
    })
    .unwrap()
    .data;
    let layers = Layers {
        reserves: Reserves::Static { percentile: 40.0 },
        day_ahead: DayAhead::Forecast,
        intraday: ForecasterKind::DaAnchor,
    };
    let sim = simulate(&data, &small_config(), layers, 8, Execution::Parallel).unwrap();
    assert_eq!(sim.weeks.len(), 4);
    assert_eq!(sim.days.len(), 28);
    for d in &sim.days {
        assert!(d.status.is_empty(), "day {}: {}", d.day, d.status);
        let w = &sim.weeks[d.day / 7 - 8].allocation;
        let s = d.schedule.as_ref().unwrap();
        assert!(s.trajectory.soc.iter().all(|&x| x >= w.soc_min - 1e-9 && x <= w.soc_max + 1e-9));
        let parts = d.capacity_eur + d.da_eur + d.xbid_eur - d.degradation_eur;
        assert!((parts - d.total_eur).abs() < 1e-6 * (1.0 + d.total_eur.abs()));
    }
    let again = simulate(&data, &small_config(), layers, 8, Execution::Sequential).unwrap();
    assert_eq!(sim, again);
}

#[test]
fn ablation_rows_follow_the_chain() {
    let data = generate_market(&SynthDataConfig {
        days: 7 * 25,
        ..Default::default()
    })
    .unwrap()
    .data;
    let ab = AblationConfig {
        train_weeks: 21,
        ..Default::default()
    };
    let r = run_ablation(&data, &small_config(), &ab, Execution::Parallel).unwrap();
    let names: Vec<&str> = r.rows.iter().map(|r| r.configuration.as_str()).collect();
    assert_eq!(names[..6], ABLATION_CHAIN);
    assert_eq!(names[6], LAYER23);
    assert_eq!(r.row("full_system_oracle").unwrap().vcr, 1.0);
    assert!(r.row(LAYER23).unwrap().flagged);
    for row in &r.rows[..6] {
        assert!(!row.flagged, "{}: {}", row.configuration, row.note);
        assert_eq!(row.n_days, 28);
    }
}
