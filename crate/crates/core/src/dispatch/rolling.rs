use chrono::Duration;

use super::{DpEngine, DpGrid, Schedule, Terminal};
use crate::battery::BatterySpec;
use crate::error::{Error, Result};
use crate::forecast::{issue_forecast, FeatureStore, ForecastLog, Forecaster};
use crate::market_data::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RollConfig {
    pub roll_minutes: i64,
    /// Trading in a slot closes this long before its delivery starts.
    pub gate_lead_minutes: i64,
}

impl Default for RollConfig {
    fn default() -> Self {
        RollConfig {
            roll_minutes: 15,
            gate_lead_minutes: 30,
        }
    }
}

impl RollConfig {
    pub fn new(gate_lead_minutes: i64) -> Result<Self> {
        let c = RollConfig {
            roll_minutes: 15,
            gate_lead_minutes,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if ![30, 60].contains(&self.gate_lead_minutes) {
            return Err(Error::Config(format!(
                "gate lead must be 30 or 60 minutes, got {}",
                self.gate_lead_minutes
            )));
        }
        if self.roll_minutes != 15 {
            return Err(Error::Config("roll interval must equal the 15-minute slot".into()));
        }
        Ok(())
    }
}

/// Battery, band and grid of a dispatch run; the forecast is supplied per roll.
#[derive(Debug, Clone, Copy)]
pub struct DpTemplate {
    pub spec: BatterySpec,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub grid: DpGrid,
    pub terminal: Terminal,
}

impl DpTemplate {
    pub fn new(spec: BatterySpec) -> Self {
        DpTemplate {
            spec,
            soc_init: 0.0,
            soc_min: 0.0,
            soc_max: 1.0,
            grid: DpGrid::default(),
            terminal: Terminal::Free,
        }
    }
}

/// One delivery day of rolling re-optimisation. At each roll the next
/// tradable slot is committed at its realized price; everything after it is
/// re-planned on a fresh forecast.
pub fn rolling_intrinsic(
    forecaster: &dyn Forecaster,
    store: &FeatureStore,
    realized: &PriceSeries,
    cfg: &RollConfig,
    template: &DpTemplate,
    mut log: Option<&mut ForecastLog>,
) -> Result<Schedule> {
    cfg.validate()?;
    if let Some(&g) = realized.gaps.first() {
        return Err(Error::Gap {
            what: "realized".into(),
            slot: g,
        });
    }
    let tl = realized.timeline;
    let engine = DpEngine::new(&template.spec, tl.dt_hours(), template.soc_min, template.soc_max, template.grid)?;
    let lead = Duration::minutes(cfg.gate_lead_minutes);
    let mut s = template.soc_init;
    let mut soc = vec![s];
    let mut actions = Vec::with_capacity(tl.len);
    let mut used = Vec::with_capacity(tl.len);
    let dt = tl.dt_hours();
    for k in 0..tl.len {
        let issue = tl.slot_start(k) - lead;
        let target = tl.sub(k, tl.len - k);
        let fc = issue_forecast(forecaster, store, issue, target)?;
        if let Some(l) = log.as_deref_mut() {
            l.record(forecaster.name(), issue, target, &fc);
        }
        let plan = engine.solve(&fc, s, template.terminal)?;
        actions.push(plan.actions[0]);
        used.push(fc[0]);
        s = plan.soc[1];
        soc.push(s);
    }
    let planned: f64 = actions
        .iter()
        .zip(&used)
        .map(|(a, p)| p * a * dt - template.spec.deg_cost * a.max(0.0) * dt)
        .sum();
    Schedule::build(tl, actions, soc, used, realized.values.clone(), planned, &template.spec)
}
