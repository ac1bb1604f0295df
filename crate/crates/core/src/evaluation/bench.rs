//! Benchmark suite: five forecasters dispatched by the rolling intrinsic
//! over independent delivery days, scored on error, rank correlation and
//! value capture.

use serde::Serialize;

use super::kendall::kendall_tau;
use super::metrics::{mae, mean_vcr, ranking_inconsistency, rmse, EvalReport};
use crate::battery::BatterySpec;
use crate::dataset::MarketData;
use crate::dispatch::{rolling_intrinsic, DpGrid, DpTemplate, RollConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forecast::{issue_forecast, DaAnchor, FeatureStore, Forecaster, Hybrid, LinearAr, Oracle, Persistence};
use crate::market_data::GateClosureRules;
use crate::report::Table;
use crate::row;
use crate::stats::{mean, median, std_pop};

pub const FORECASTERS: [&str; 5] = ["oracle", "persistence", "da_anchor", "learned_ar", "hybrid"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    /// Leading days used only to fit the learned model.
    pub train_days: usize,
    /// Learned-model horizon of the hybrid, hours.
    pub hybrid_hours: f64,
    pub spec: BatterySpec,
    pub grid: DpGrid,
    pub gates: GateClosureRules,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            train_days: 28,
            hybrid_hours: 8.0,
            spec: BatterySpec::default(),
            grid: DpGrid::default(),
            gates: GateClosureRules::de(),
        }
    }
}

/// One forecaster on one delivery day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayRecord {
    pub forecaster: String,
    pub day: usize,
    pub revenue: f64,
    pub oracle_revenue: f64,
    /// Errors of the forecast issued at the day's first gate.
    pub mae: f64,
    pub rmse: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub reports: Vec<EvalReport>,
    pub ri: f64,
    pub days: Vec<DayRecord>,
    /// (forecaster, day, reason) of days that could not be evaluated.
    pub skipped: Vec<(String, usize, String)>,
}

impl BenchResult {
    pub fn report(&self, name: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    /// Table with MAE and VCR ranks (1 = best).
    pub fn to_table(&self) -> Table {
        let rank = |key: &dyn Fn(&EvalReport) -> f64, higher_better: bool| -> Vec<usize> {
            self.reports
                .iter()
                .map(|r| {
                    1 + self
                        .reports
                        .iter()
                        .filter(|o| if higher_better { key(o) > key(r) } else { key(o) < key(r) })
                        .count()
                })
                .collect()
        };
        let mae_rank = rank(&|r| r.mae, false);
        let vcr_rank = rank(&|r| r.vcr, true);
        let mut t = Table::new(&[
            "forecaster", "mae", "rmse", "tau", "vcr", "mae_rank", "vcr_rank", "n_days", "excluded_days",
        ]);
        for (i, r) in self.reports.iter().enumerate() {
            t.push(row![
                r.name.as_str(),
                r.mae,
                r.rmse,
                r.tau,
                r.vcr,
                mae_rank[i],
                vcr_rank[i],
                r.n_days,
                r.excluded_days
            ]);
        }
        t
    }
}

fn day_record(
    f: &dyn Forecaster,
    store: &FeatureStore,
    data: &MarketData,
    d: usize,
    roll: &RollConfig,
    template: &DpTemplate,
) -> Result<DayRecord> {
    let realized = data.xbid_day(d);
    let issue = realized.timeline.start - cfg_lead(roll);
    let fc = issue_forecast(f, store, issue, realized.timeline)?;
    let sched = rolling_intrinsic(f, store, &realized, roll, template, None)?;
    Ok(DayRecord {
        forecaster: f.name().to_string(),
        day: d,
        revenue: sched.net_revenue(),
        oracle_revenue: f64::NAN,
        mae: mae(&fc, &realized.values)?,
        rmse: rmse(&fc, &realized.values)?,
        tau: kendall_tau(&fc, &realized.values)?,
    })
}

fn cfg_lead(roll: &RollConfig) -> chrono::Duration {
    chrono::Duration::minutes(roll.gate_lead_minutes)
}

/// Runs the five benchmark forecasters on every day after the training window.
pub fn run_benchmarks(data: &MarketData, cfg: &BenchConfig, exec: Execution) -> Result<BenchResult> {
    cfg.gates.validate()?;
    if cfg.train_days < 2 || cfg.train_days >= data.n_days() {
        return Err(Error::Config(format!(
            "train_days {} must lie in [2, {})",
            cfg.train_days,
            data.n_days()
        )));
    }
    let store = data.feature_store(&cfg.gates)?;
    let ar = LinearAr::fit(&store, 0, cfg.train_days * 96)?;
    log::info!("learned AR fit on {} rows ({:?})", ar.n_rows, ar.fit);
    let roll = RollConfig::new(cfg.gates.xbid_lead_min)?;
    let lead_slots = (cfg.gates.xbid_lead_min / 15) as usize;
    let oracle = Oracle::new(data.xbid.clone());
    let persistence = Persistence {
        slots_per_day: 96,
        max_fill: lead_slots,
    };
    let hybrid = Hybrid::new(ar.clone(), DaAnchor, cfg.hybrid_hours);
    let forecasters: [(&str, &dyn Forecaster); 5] = [
        ("oracle", &oracle),
        ("persistence", &persistence),
        ("da_anchor", &DaAnchor),
        ("learned_ar", &ar),
        ("hybrid", &hybrid),
    ];
    let template = DpTemplate {
        grid: cfg.grid,
        ..DpTemplate::new(cfg.spec)
    };
    let days: Vec<usize> = (cfg.train_days..data.n_days()).collect();
    let per_day = exec.map(&days, |&d| {
        forecasters
            .iter()
            .map(|(name, f)| {
                day_record(*f, &store, data, d, &roll, &template).map_err(|e| (name.to_string(), d, e.to_string()))
            })
            .collect::<Vec<_>>()
    });

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for day in per_day {
        let oracle_rev = match &day[0] {
            Ok(r) => r.revenue,
            Err(e) => {
                log::warn!("benchmark day {}: oracle failed: {}", e.1, e.2);
                skipped.extend(day.into_iter().filter_map(|r| r.err()));
                continue;
            }
        };
        for r in day {
            match r {
                Ok(mut rec) => {
                    rec.oracle_revenue = oracle_rev;
                    records.push(rec);
                }
                Err(e) => {
                    log::warn!("benchmark day {}: {} skipped: {}", e.1, e.0, e.2);
                    skipped.push(e);
                }
            }
        }
    }
    let reports: Vec<EvalReport> = FORECASTERS
        .iter()
        .map(|name| summarize(name, records.iter().filter(|r| r.forecaster == *name)))
        .collect();
    let ri = ranking_inconsistency(&reports)?;
    Ok(BenchResult {
        reports,
        ri,
        days: records,
        skipped,
    })
}

fn summarize<'a>(name: &str, recs: impl Iterator<Item = &'a DayRecord>) -> EvalReport {
    let recs: Vec<&DayRecord> = recs.collect();
    let pairs: Vec<(f64, f64)> = recs.iter().map(|r| (r.revenue, r.oracle_revenue)).collect();
    let (vcr, n_used, n_excl) = mean_vcr(&pairs);
    let avg = |f: fn(&DayRecord) -> f64| mean(&recs.iter().map(|r| f(r)).collect::<Vec<_>>());
    EvalReport {
        name: name.to_string(),
        mae: avg(|r| r.mae),
        rmse: avg(|r| r.rmse),
        tau: avg(|r| r.tau),
        vcr,
        n_days: n_used,
        excluded_days: n_excl,
    }
}

/// One forecaster's scores in calm and volatile weeks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolatilityRow {
    pub forecaster: String,
    pub vcr_low: f64,
    pub vcr_high: f64,
    pub tau_low: f64,
    pub tau_high: f64,
    /// vcr_high − vcr_low.
    pub vcr_gap: f64,
}

/// Splits evaluated weeks at the median of their mean daily intraday price
/// sd and compares each forecaster across the two halves. Weeks exactly at
/// the median go to the calm half.
pub fn volatility_split(days: &[DayRecord], data: &MarketData) -> Result<Vec<VolatilityRow>> {
    let mut weeks: Vec<usize> = days.iter().map(|r| r.day / 7).collect();
    weeks.sort_unstable();
    weeks.dedup();
    if weeks.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "volatility split needs 8 weeks, got {}",
            weeks.len()
        )));
    }
    let week_vol: Vec<f64> = weeks
        .iter()
        .map(|&w| {
            let ds: Vec<usize> = days.iter().filter(|r| r.day / 7 == w).map(|r| r.day).collect();
            mean(&ds.iter().map(|&d| std_pop(&data.xbid_day(d).values)).collect::<Vec<_>>())
        })
        .collect();
    let cut = median(&week_vol);
    let high = |d: usize| {
        let i = weeks.binary_search(&(d / 7)).expect("week present");
        week_vol[i] > cut
    };
    let mut names: Vec<&str> = Vec::new();
    for r in days {
        if !names.contains(&r.forecaster.as_str()) {
            names.push(&r.forecaster);
        }
    }
    Ok(names
        .into_iter()
        .map(|name| {
            let half = |want: bool| -> (f64, f64) {
                let rs: Vec<&DayRecord> = days
                    .iter()
                    .filter(|r| r.forecaster == name && high(r.day) == want)
                    .collect();
                let pairs: Vec<(f64, f64)> = rs.iter().map(|r| (r.revenue, r.oracle_revenue)).collect();
                (mean_vcr(&pairs).0, mean(&rs.iter().map(|r| r.tau).collect::<Vec<_>>()))
            };
            let (vcr_low, tau_low) = half(false);
            let (vcr_high, tau_high) = half(true);
            VolatilityRow {
                forecaster: name.to_string(),
                vcr_low,
                vcr_high,
                tau_low,
                tau_high,
                vcr_gap: vcr_high - vcr_low,
            }
        })
        .collect())
}

pub fn volatility_table(rows: &[VolatilityRow]) -> Table {
    let mut t = Table::new(&["forecaster", "vcr_low_vol", "vcr_high_vol", "tau_low_vol", "tau_high_vol", "vcr_gap"]);
    for r in rows {
        t.push(row![r.forecaster.as_str(), r.vcr_low, r.vcr_high, r.tau_low, r.tau_high, r.vcr_gap]);
    }
    t
}
