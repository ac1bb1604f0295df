//! Acceptance run: one PASS/FAIL line per criterion with the measured values.
//! Exits nonzero on a failure only when ACCEPTANCE_STRICT=1. ACCEPTANCE_ONLY=5,10
//! runs a subset; criterion 2 reuses the scan of criterion 1.

mod common;

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use bess_core::allocation::{block_bootstrap, optimize_allocation, soc_buffer, AllocationLimits, XbidTerm};
use bess_core::battery::{degradation_cost, rainflow_cycles, rainflow_from_points, BatterySpec, Cycle, SocTrajectory};
use bess_core::commands::{run, Command};
use bess_core::config::RunConfig;
use bess_core::dataset::MarketData;
use bess_core::dispatch::{solve_dp, DispatchProblem, DpEngine, DpGrid, Terminal};
use bess_core::evaluation::{
    cvar, kendall_tau, net_revenue, ranking_inconsistency, run_benchmarks, tau_scan, BenchConfig, EvalReport,
    TauScanConfig, TauScanResult,
};
use bess_core::forecast::synth::{calibrate, draw, Calibration};
use bess_core::forecast::{issue_forecast, DaProfile, Forecaster, SynthMethod, SynthTarget};
use bess_core::hydro::{classify, leadlag_scan, ols_fit, peak_lag, spearman, week_of_year, HydroRegime};
use bess_core::market_data::series::{vwa_price, BidRecord};
use bess_core::market_data::{MarketTag, PriceSeries, Timeline};
use bess_core::regime::{fit_baum_welch, viterbi_path, FitConfig, RegimeModel};
use bess_core::synthetic::{generate_market, SynthDataConfig};
use bess_core::system::{build_forecaster, ForecasterKind, SystemConfig};
use bess_core::Execution;
use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

fn market(days: usize, shuffle_days: bool) -> MarketData {
    generate_market(&SynthDataConfig {
        days,
        shuffle_days,
        ..Default::default()
    })
    .unwrap()
    .data
}

fn c1_saturation(data: &MarketData, alpha: &OnceCell<TauScanResult>) -> Outcome {
    let t = Instant::now();
    let r = tau_scan(&data.xbid, SynthMethod::AlphaInterp, &TauScanConfig::default(), Execution::Parallel).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pick = |f: &dyn Fn(f64) -> bool| -> Vec<f64> {
        r.points.iter().filter(|p| f(p.achieved_tau_mean)).map(|p| p.vcr_mean).collect()
    };
    let (a, b, c) = (pick(&|t| t >= 0.85), pick(&|t| t >= 0.95), pick(&|t| t <= 0.05));
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = !a.is_empty()
        && !b.is_empty()
        && !c.is_empty()
        && min(&a) >= 0.95
        && min(&b) >= 0.97
        && max(&c) <= 0.60
        && secs <= 600.0;
    let detail = format!(
        "{} days x {} points x {} reps; min VCR {:.4} over {} points with tau>=0.85 (>=0.95), \
         min VCR {:.4} over {} points with tau>=0.95 (>=0.97), max VCR {:.4} over {} points with tau<=0.05 (<=0.60); \
         {secs:.0} s (<=600)",
        r.n_days,
        r.points.len(),
        r.points[0].n_reps,
        min(&a),
        a.len(),
        min(&b),
        b.len(),
        max(&c),
        c.len()
    );
    let _ = alpha.set(r);
    outcome(pass, detail)
}

fn c2_method_ordering(data: &MarketData, alpha: &OnceCell<TauScanResult>) -> Outcome {
    let Some(alpha) = alpha.get() else {
        return outcome(false, "alpha scan unavailable".into());
    };
    // same data, seed, grid and replicates as the alpha scan
    let cfg = TauScanConfig::default();
    let a = alpha.tau_star_interp;
    let mut pass = a.is_some();
    let mut parts = vec![format!("alpha tau* {}", fmt_opt(a))];
    for m in [SynthMethod::RankPerturb, SynthMethod::GaussCopula] {
        let r = tau_scan(&data.xbid, m, &cfg, Execution::Parallel).unwrap();
        let t = r.tau_star_interp;
        let ok = matches!((t, a), (Some(t), Some(a)) if t > a);
        pass &= ok;
        let gap = t.zip(a).map(|(t, a)| t - a);
        parts.push(format!("{} tau* {} (gap {}, target band 0.05-0.15)", m.as_str(), fmt_opt(t), fmt_opt(gap)));
    }
    outcome(pass, parts.join("; "))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("none".into(), |v| format!("{v:.3}"))
}

fn c3_calibration(data: &MarketData) -> Outcome {
    let targets = [0.0, 0.3, 0.5, 0.7, 0.85, 0.95];
    let n_days = 50;
    let mut worst = (f64::INFINITY, String::new());
    for method in SynthMethod::ALL {
        for target in targets {
            let cals: Vec<Option<(Vec<f64>, Calibration)>> = (0..n_days)
                .map(|d| {
                    let y = data.xbid_day(d).values;
                    calibrate(&y, &SynthTarget::new(target, method, d as u64)).ok().map(|c| (y, c))
                })
                .collect();
            let mut hits = 0;
            for i in 0..500u64 {
                let Some((y, cal)) = &cals[i as usize % n_days] else { continue };
                let mut rng = ChaCha8Rng::seed_from_u64(i);
                let Ok(out) = draw(y, cal, &mut rng) else { continue };
                if (common::kendall_pairs(&out.values, y) - target).abs() <= 0.03 {
                    hits += 1;
                }
            }
            let rate = hits as f64 / 500.0;
            if rate < worst.0 {
                worst = (rate, format!("{} at {target}", method.as_str()));
            }
        }
    }
    outcome(
        worst.0 >= 0.95,
        format!("worst hit rate {:.3} ({}) over 3 methods x 6 targets x 500 draws (>=0.95, +-0.03)", worst.0, worst.1),
    )
}

fn unit_spec() -> BatterySpec {
    BatterySpec {
        p_max: 1.0,
        e_max: 1.0,
        eta_c: 1.0,
        eta_d: 1.0,
        deg_cost: 0.0,
        dod_exponent: 1.5,
    }
}

fn c4_dp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut equal = 0;
    for _ in 0..1000 {
        let (spec, dt, prices, soc0, terminal) = common::grid_exact_instance(&mut rng);
        let e = DpEngine::new(&spec, dt, 0.0, 1.0, DpGrid::new(21, 3)).unwrap();
        let plan = e.solve(&prices, soc0, terminal).unwrap();
        let band = match terminal {
            Terminal::Free => None,
            Terminal::Band { target } => Some((target, 0.05)),
        };
        if plan.planned_value == common::dp_enumerate(&prices, &spec, dt, 0.0, 1.0, soc0, band) {
            equal += 1;
        }
    }
    let tl = Timeline::quarter_hours(NaiveDate::from_ymd_opt(2024, 3, 4).unwrap(), 1).sub(0, 4);
    let mut p = DispatchProblem::new(
        PriceSeries::new(tl, vec![10.0, 50.0, 20.0, 60.0], MarketTag::Xbid).unwrap(),
        unit_spec(),
    );
    p.grid = DpGrid::new(101, 3);
    let v = solve_dp(&p).unwrap().planned_value;
    outcome(
        equal == 1000 && v == 20.0,
        format!("{equal}/1000 exact matches with enumeration; 4-slot example {v} EUR (20.0)"),
    )
}

fn solve_on(day: &PriceSeries, values: Vec<f64>, spec: BatterySpec) -> Vec<f64> {
    let p = DispatchProblem::new(PriceSeries::new(day.timeline, values, MarketTag::Xbid).unwrap(), spec);
    solve_dp(&p).unwrap().actions
}

fn c5_ordinal(data: &MarketData) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let lossless = BatterySpec {
        eta_c: 1.0,
        eta_d: 1.0,
        deg_cost: 0.0,
        ..BatterySpec::default()
    };
    let lossy = BatterySpec {
        deg_cost: 0.0,
        ..BatterySpec::default()
    };
    let days = 60;
    let (mut same, mut ties, mut worse) = (0, 0, 0);
    let mut largest_loss: f64 = 0.0;
    let (mut scaled_same, mut total) = (0, 0);
    for d in 0..days {
        let day = data.xbid_day(d);
        let y = day.values.clone();
        let base = solve_on(&day, y.clone(), lossless);
        let base_value = net_revenue(&base, &y, 0.25, &lossless);
        let lossy_base = solve_on(&day, y.clone(), lossy);
        for _ in 0..50 {
            let f = common::odd_increasing(&mut rng);
            let s = solve_on(&day, y.iter().map(|&v| f(v)).collect(), lossless);
            if s == base {
                same += 1;
            } else {
                let v = net_revenue(&s, &y, 0.25, &lossless);
                if close(v, base_value) {
                    // a different schedule of equal value on the original prices
                    ties += 1;
                } else {
                    worse += 1;
                    largest_loss = largest_loss.max((base_value - v) / base_value.abs().max(1.0));
                }
            }
            let a: f64 = rng.random_range(0.01..100.0);
            total += 1;
            if solve_on(&day, y.iter().map(|v| a * v).collect(), lossy) == lossy_base {
                scaled_same += 1;
            }
        }
    }
    let n = days * 50;
    outcome(
        same == n && scaled_same == total,
        format!(
            "eta 1: {same}/{n} identical under increasing transforms ({ties} equal-value alternatives, \
             {worse} value changes, largest relative loss {largest_loss:.1e}); \
             eta 0.95: {scaled_same}/{total} identical under positive scaling"
        ),
    )
}

fn c6_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mut kendall_ok = 0;
    for i in 0..200 {
        let n = rng.random_range(2..300);
        let coarse = i % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| {
            if coarse {
                rng.random_range(0..12) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        };
        let f: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        if kendall_tau(&f, &y).unwrap() == common::kendall_pairs(&f, &y) {
            kendall_ok += 1;
        }
    }
    let mut worst: f64 = 0.0;
    let mut err = |a: f64, b: f64| worst = worst.max((a - b).abs() / (1.0 + b.abs()));
    for _ in 0..100 {
        let n = rng.random_range(5..80);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.3 + rng.random_range(-3.0..3.0)).collect();
        err(spearman(&x, &y).unwrap().rho, common::spearman_oracle(&x, &y));

        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 1.5 * v + rng.random_range(-1.0..1.0)).collect();
        let r = ols_fit(&x, &y).unwrap();
        let (slope, intercept) = common::ols_oracle(&x, &y);
        err(r.slope, slope);
        err(r.intercept, intercept);

        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1e4..1e4)).collect();
        for level in [0.05, 0.1, 0.25, 1.0] {
            err(cvar(&xs, level).unwrap(), common::cvar_oracle(&xs, level));
        }

        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..500.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..80.0)).collect();
        let bids: Vec<BidRecord> = p.iter().zip(&v).map(|(&a, &b)| BidRecord::new(a, b).unwrap()).collect();
        err(vwa_price(&bids).unwrap(), common::vwa_oracle(&p, &v));
    }
    outcome(
        kendall_ok == 200 && worst <= 1e-9,
        format!("kendall {kendall_ok}/200 exact; largest relative error of spearman/ols/cvar/vwa {worst:.2e} (<=1e-9)"),
    )
}

fn c7_allocation() -> Outcome {
    let b = soc_buffer(5.0, 0.0, 10.0).unwrap();
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
    let mut at_cap = 0;
    let mut seen = Vec::new();
    for w in window..window + 20 {
        let scenarios = block_bootstrap(&history, w, window, 20, w as u64).unwrap();
        let dists = history.distributions(w, window).unwrap();
        let mut xbid = XbidTerm::new(&spec, limits.grid);
        let (a, _) =
            optimize_allocation(&scenarios, 50.0, &dists, &spec, &limits, &mut xbid, Execution::Parallel).unwrap();
        if a.p_fcr == 5.0 {
            at_cap += 1;
        } else {
            seen.push(a.p_fcr);
        }
    }
    outcome(
        b == 0.25 && at_cap == 20,
        format!("soc_buffer(5, 0, 10) = {b} (0.25); p_fcr = 5.0 MW in {at_cap}/20 weeks {seen:?}"),
    )
}

fn report(name: &str, mae: f64, vcr: f64) -> EvalReport {
    EvalReport {
        name: name.into(),
        mae,
        rmse: mae,
        tau: 0.0,
        vcr,
        n_days: 10,
        excluded_days: 0,
    }
}

fn c8_benchmarks() -> Outcome {
    let data = market(90, true);
    let r = run_benchmarks(&data, &BenchConfig::default(), Execution::Parallel).unwrap();
    let vcr = |n: &str| r.report(n).unwrap().vcr;
    let tau_p = r.report("persistence").unwrap().tau;
    let agree = [report("a", 1.0, 0.9), report("b", 2.0, 0.8), report("c", 3.0, 0.5)];
    let ri0 = ranking_inconsistency(&agree).unwrap();
    let pass = vcr("oracle") == 1.0
        && vcr("hybrid") >= vcr("learned_ar")
        && vcr("learned_ar") >= vcr("da_anchor")
        && vcr("da_anchor") > vcr("persistence")
        && ri0 == 0.0
        && tau_p.abs() <= 0.1;
    outcome(
        pass,
        format!(
            "VCR oracle {:.4}, hybrid {:.4}, learned_ar {:.4}, da_anchor {:.4}, persistence {:.4}; \
             RI {ri0} on agreeing rankings, {:.3} on the suite; persistence tau {tau_p:.3} (|.|<=0.1)",
            vcr("oracle"),
            vcr("hybrid"),
            vcr("learned_ar"),
            vcr("da_anchor"),
            vcr("persistence"),
            r.ri
        ),
    )
}

fn c9_hmm() -> Outcome {
    let mut worst_drop: f64 = 0.0;
    let cfg = FitConfig {
        n_states: 3,
        restarts: 5,
        ..Default::default()
    };
    let means3 = vec![vec![-2.0, 0.0, 1.0, 0.0], vec![0.0, 1.5, -1.0, 0.5], vec![2.0, -1.0, 0.0, -0.5]];
    for seed in 0..10 {
        let (_, obs) = common::sample_chain(&means3, 0.8, 0.9, 150, 2000 + seed);
        let fit = fit_baum_welch(&obs, &cfg, seed, Execution::Parallel).unwrap();
        for trace in &fit.traces {
            for w in trace.windows(2) {
                worst_drop = worst_drop.max(w[0] - w[1]);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let mut viterbi_ok = 0;
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
        if viterbi_path(&m, &obs) == best.1 {
            viterbi_ok += 1;
        }
    }

    let means2 = vec![vec![-1.0, -0.5, 0.0, 0.3], vec![1.0, 0.5, 0.0, -0.3]];
    let cfg2 = FitConfig {
        n_states: 2,
        ..Default::default()
    };
    let mut min_acc: f64 = 1.0;
    for seed in 0..5 {
        let (truth, obs) = common::sample_chain(&means2, 0.7, 0.95, 300, 2100 + seed);
        let fit = fit_baum_welch(&obs, &cfg2, seed, Execution::Parallel).unwrap();
        let path = viterbi_path(&fit.model, &obs);
        let same = path.iter().zip(&truth).filter(|(a, b)| a == b).count();
        min_acc = min_acc.min(same.max(truth.len() - same) as f64 / truth.len() as f64);
    }
    outcome(
        worst_drop <= 1e-8 && viterbi_ok == 300 && min_acc >= 0.9,
        format!(
            "largest log-likelihood decrease {worst_drop:.2e} (<=1e-8); viterbi {viterbi_ok}/300 match enumeration; \
             worst 2-state accuracy {min_acc:.3} (>=0.9)"
        ),
    )
}

fn c10_hydro() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let z = common::hydro_anomaly(&mut rng, 0.8);
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (d, v) in z.week_start.iter().zip(&z.z) {
        groups.entry(week_of_year(*d)).or_default().push(*v);
    }
    let worst_mean = groups.values().map(|g| (g.iter().sum::<f64>() / g.len() as f64).abs()).fold(0.0, f64::max);

    let (a, b) = (6000.0, -1500.0);
    let noise = Normal::new(0.0, 900.0).unwrap();
    let mut slope_hits = 0;
    for trial in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let z = common::hydro_anomaly(&mut rng, 0.7);
        let revenue: Vec<f64> = z.z.iter().map(|v| a + b * v + noise.sample(&mut rng)).collect();
        let fit = ols_fit(&z.z, &revenue).unwrap();
        if (fit.slope - b).abs() <= 2.0 * fit.slope_se {
            slope_hits += 1;
        }
    }

    let noise = Normal::new(0.0, 0.6).unwrap();
    let mut lag_hits = 0;
    for trial in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
        let lag = rng.random_range(1..=6);
        let z = common::hydro_anomaly(&mut rng, 0.5);
        let price: Vec<f64> = (0..common::HYDRO_WEEKS)
            .map(|t| if t >= lag { -z.z[t - lag] } else { 0.0 } + noise.sample(&mut rng))
            .collect();
        let scan = leadlag_scan(&z.z, &price, 8).unwrap();
        if peak_lag(&scan).is_some_and(|p| p.abs_diff(lag) <= 1) {
            lag_hits += 1;
        }
    }
    let boundaries = classify(-0.8) == HydroRegime::Medium && classify(0.7) == HydroRegime::Medium;
    outcome(
        worst_mean <= 1e-9 && slope_hits >= 190 && lag_hits >= 180 && boundaries,
        format!(
            "largest week-of-year mean {worst_mean:.1e} (<=1e-9); slope within 2 SE in {slope_hits}/200 (>=190); \
             lag within 1 week in {lag_hits}/200 (>=180); boundaries -0.8 and 0.7 medium: {boundaries}"
        ),
    )
}

fn c11_rainflow() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1011);
    let mut ok = 0;
    for i in 0..500 {
        let n = rng.random_range(2..200);
        let path: Vec<f64> = if i % 3 == 0 {
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
        let mut c = rainflow_from_points(&path);
        c.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.weight.total_cmp(&b.weight)));
        let got: Vec<(f64, f64)> = c.into_iter().map(|c| (c.depth, c.weight)).collect();
        if got == common::rainflow_oracle(&path) {
            ok += 1;
        }
    }
    let one = rainflow_from_points(&[0.0, 1.0, 0.0]);
    let tl = Timeline::quarter_hours(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 1).sub(0, 2);
    let traj = SocTrajectory::new(tl, vec![0.0, 1.0, 0.0]).unwrap();
    let cost = degradation_cost(&rainflow_cycles(&traj), &BatterySpec::default());
    let single = one == vec![Cycle { depth: 1.0, weight: 1.0 }];
    outcome(
        ok == 500 && single && cost == 40.0,
        format!("{ok}/500 match the textbook oracle; 0-1-0 gives one full cycle: {single}; full-depth cost {cost} EUR (40)"),
    )
}

const SMALL_RUN: &str = r#"
seed = 11
[synth]
days = 175
[system]
n_scenarios = 4
window_weeks = 4
train_days = 14
hmm_restarts = 2
[simulate]
first_week = 21
[tau_scan]
methods = ["alpha_interp", "gauss_copula"]
[tau_scan.scan]
grid = [0.0, 0.5, 1.0]
n_reps = 2
[ablate]
train_weeks = 21
[eval]
train_days = 14
"#;

fn read_tree(dir: &Path, prefix: &str, into: &mut BTreeMap<String, Vec<u8>>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = format!("{prefix}{}", e.file_name().to_string_lossy());
        if e.file_type().unwrap().is_dir() {
            read_tree(&e.path(), &format!("{name}/"), into);
        } else {
            into.insert(name, std::fs::read(e.path()).unwrap());
        }
    }
}

fn c12_determinism_and_leakage() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cmds = [
        Command::SynthData,
        Command::Simulate,
        Command::TauScan,
        Command::Ablate,
        Command::Hydro,
        Command::Eval,
    ];
    let mut identical = 0;
    let mut files = 0;
    for cmd in cmds {
        let mut trees = Vec::new();
        for k in 0..2 {
            let mut cfg = RunConfig::from_toml(SMALL_RUN).unwrap();
            cfg.out = tmp.path().join(format!("{}-{k}", cmd.as_str()));
            run(cmd, cfg.clone()).unwrap();
            let mut t = BTreeMap::new();
            read_tree(&cfg.out, "", &mut t);
            trees.push(t);
        }
        files += trees[0].len();
        if trees[0] == trees[1] {
            identical += 1;
        }
    }

    let data = market(42, false);
    let cfg = SystemConfig::default();
    let store = data.feature_store(&cfg.gates).unwrap();
    let mut forecasters: Vec<Box<dyn Forecaster>> = [
        ForecasterKind::Persistence,
        ForecasterKind::DaAnchor,
        ForecasterKind::LearnedAr,
        ForecasterKind::Hybrid,
    ]
    .into_iter()
    .map(|k| build_forecaster(k, &data, &store, &cfg).unwrap())
    .collect();
    forecasters.push(Box::new(DaProfile::default()));
    let mut rng = ChaCha8Rng::seed_from_u64(1012);
    let (mut checks, mut clean) = (0, 0);
    for _ in 0..100 {
        let day = rng.random_range(30..38);
        let first = day * 96 + rng.random_range(0..96);
        let len = rng.random_range(1..=(day + 1) * 96 - first);
        let target = store.timeline.sub(first, len);
        let ahead = store.timeline.sub((day + 1) * 96, 3 * 96);
        let issue = target.start - Duration::minutes(30 + 15 * rng.random_range(0..8));
        let dirty = common::poisoned(&store, issue, &mut rng);
        for (i, f) in forecasters.iter().enumerate() {
            // the day-ahead profile also forecasts the following days
            let tl = if i == forecasters.len() - 1 && rng.random::<bool>() { ahead } else { target };
            let a = issue_forecast(f.as_ref(), &store, issue, tl).unwrap();
            let b = issue_forecast(f.as_ref(), &dirty, issue, tl).unwrap();
            checks += 1;
            if common::same_bits(&a, &b) {
                clean += 1;
            }
        }
    }
    outcome(
        identical == cmds.len() && clean == checks,
        format!(
            "{identical}/{} commands byte-identical on rerun ({files} files); \
             {clean}/{checks} forecasts unchanged by poisoned future values",
            cmds.len()
        ),
    )
}

type Criterion<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let year = market(365, false);
    let alpha = OnceCell::new();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("tau-sufficiency saturation", Box::new(|| c1_saturation(&year, &alpha))),
        ("generator method ordering", Box::new(|| c2_method_ordering(&year, &alpha))),
        ("calibration tolerance", Box::new(|| c3_calibration(&year))),
        ("DP correctness", Box::new(c4_dp)),
        ("ordinal invariance", Box::new(|| c5_ordinal(&year))),
        ("metric oracles", Box::new(c6_metrics)),
        ("reserve buffer and FCR cap", Box::new(c7_allocation)),
        ("benchmark suite ordering", Box::new(c8_benchmarks)),
        ("HMM", Box::new(c9_hmm)),
        ("hydro pipeline", Box::new(c10_hydro)),
        ("rainflow", Box::new(c11_rainflow)),
        ("determinism and leakage", Box::new(c12_determinism_and_leakage)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let o = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
