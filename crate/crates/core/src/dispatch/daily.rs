use super::{DpEngine, DpGrid, Schedule, Terminal};
use crate::allocation::WeeklyAllocation;
use crate::battery::BatterySpec;
use crate::error::{Error, Result};
use crate::market_data::{PriceSeries, Resolution};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Day d of the horizon is weighted by lambda^d.
    pub lambda: f64,
    pub horizon_days: usize,
    pub grid: DpGrid,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            lambda: 0.8,
            horizon_days: 5,
            grid: DpGrid::default(),
        }
    }
}

/// Committed day-0 schedule and the hand-off to intraday dispatch.
#[derive(Debug, Clone)]
pub struct DailyPlan {
    /// Hourly day-0 positions settled at the realized day-ahead price.
    pub schedule: Schedule,
    /// State of charge at the end of day 0.
    pub terminal_soc: f64,
    /// Days actually optimised over (shorter when forecasts are missing).
    pub horizon_days: usize,
}

/// Receding-horizon hourly schedule over the realized day and up to four
/// forecast days, discounted by `lambda^d`.
pub fn solve_daily_mpc(
    da_prices: &PriceSeries,
    forecasts: &[PriceSeries],
    cfg: &MpcConfig,
    allocation: &WeeklyAllocation,
    spec: &BatterySpec,
    soc_init: f64,
) -> Result<DailyPlan> {
    if da_prices.timeline.resolution != Resolution::Hour || da_prices.len() != 24 {
        return Err(Error::Domain("daily schedule needs 24 hourly day-ahead prices".into()));
    }
    if let Some(&g) = da_prices.gaps.first() {
        return Err(Error::Gap {
            what: "DA".into(),
            slot: g,
        });
    }
    let wanted = cfg.horizon_days.saturating_sub(1);
    let mut days = vec![da_prices.values.clone()];
    for f in forecasts.iter().take(wanted) {
        if f.len() != 24 || !f.is_complete() {
            break;
        }
        days.push(f.values.clone());
    }
    if days.len() < cfg.horizon_days {
        log::warn!(
            "daily schedule: horizon truncated to {} of {} days",
            days.len(),
            cfg.horizon_days
        );
    }
    let horizon_days = days.len();
    let prices: Vec<f64> = days
        .iter()
        .enumerate()
        .flat_map(|(d, v)| {
            let w = if d == 0 { 1.0 } else { cfg.lambda.powi(d as i32) };
            v.iter().map(move |p| p * w)
        })
        .collect();

    let tl = da_prices.timeline;
    let dt = tl.dt_hours();
    let lo = allocation.soc_min;
    let hi = allocation.soc_max;
    let s0 = soc_init.clamp(lo, hi);
    if allocation.p_xbid <= 0.0 || hi <= lo {
        let schedule = Schedule::build(
            tl,
            vec![0.0; 24],
            vec![s0; 25],
            da_prices.values.clone(),
            da_prices.values.clone(),
            0.0,
            spec,
        )?;
        return Ok(DailyPlan {
            schedule,
            terminal_soc: s0,
            horizon_days,
        });
    }
    let energy = spec.with_power(allocation.p_xbid);
    let engine = DpEngine::new(&energy, dt, lo, hi, cfg.grid)?;
    let plan = engine.solve(&prices, s0, Terminal::Free)?;
    let actions = plan.actions[..24].to_vec();
    let soc = plan.soc[..25].to_vec();
    let planned = actions
        .iter()
        .zip(&da_prices.values)
        .map(|(a, p)| p * a * dt - energy.deg_cost * a.max(0.0) * dt)
        .sum();
    let terminal_soc = soc[24];
    let schedule = Schedule::build(
        tl,
        actions,
        soc,
        da_prices.values.clone(),
        da_prices.values.clone(),
        planned,
        &energy,
    )?;
    Ok(DailyPlan {
        schedule,
        terminal_soc,
        horizon_days,
    })
}
