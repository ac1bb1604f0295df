//! Layer-3 intraday dynamic programming with rolling re-optimisation and the
//! Layer-2 multi-day schedule, both built on one DP engine.

mod daily;
mod dp;
mod rolling;

pub use daily::{solve_daily_mpc, DailyPlan, MpcConfig};
pub use dp::{DpEngine, DpGrid, DpPlan, Terminal, NEG};
pub use rolling::{rolling_intrinsic, DpTemplate, RollConfig};

use crate::battery::{BatterySpec, SocTrajectory};
use crate::error::{Error, Result};
use crate::market_data::csvio::format_timestamp;
use crate::market_data::{PriceSeries, Timeline};
use crate::report::Table;
use crate::row;

#[derive(Debug, Clone)]
pub struct DispatchProblem {
    pub forecast: PriceSeries,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub spec: BatterySpec,
    pub grid: DpGrid,
    pub terminal: Terminal,
}

impl DispatchProblem {
    pub fn new(forecast: PriceSeries, spec: BatterySpec) -> Self {
        DispatchProblem {
            forecast,
            soc_init: 0.0,
            soc_min: 0.0,
            soc_max: 1.0,
            spec,
            grid: DpGrid::default(),
            terminal: Terminal::Free,
        }
    }

    pub fn engine(&self) -> Result<DpEngine> {
        if self.soc_init < self.soc_min - 1e-12 || self.soc_init > self.soc_max + 1e-12 {
            return Err(Error::Domain(format!(
                "soc_init {} outside [{}, {}]",
                self.soc_init, self.soc_min, self.soc_max
            )));
        }
        DpEngine::new(
            &self.spec,
            self.forecast.timeline.dt_hours(),
            self.soc_min,
            self.soc_max,
            self.grid,
        )
    }
}

/// Per-slot decisions with their realized value.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub timeline: Timeline,
    /// MW, positive = discharge.
    pub actions: Vec<f64>,
    pub trajectory: SocTrajectory,
    /// Forecast price the decision was taken on.
    pub price_used: Vec<f64>,
    pub realized: Vec<f64>,
    /// Σ realized·δ·Δt, EUR.
    pub revenue: f64,
    /// In-DP degradation approximation on the emitted actions, EUR.
    pub degradation_eur: f64,
    pub planned_value: f64,
}

impl Schedule {
    pub fn build(
        timeline: Timeline,
        actions: Vec<f64>,
        soc: Vec<f64>,
        price_used: Vec<f64>,
        realized: Vec<f64>,
        planned_value: f64,
        spec: &BatterySpec,
    ) -> Result<Self> {
        let dt = timeline.dt_hours();
        let revenue = slot_revenues(&actions, &realized, dt).iter().sum();
        let degradation_eur = actions.iter().map(|a| spec.deg_cost * a.max(0.0) * dt).sum();
        Ok(Schedule {
            trajectory: SocTrajectory::new(timeline, soc)?,
            timeline,
            actions,
            price_used,
            realized,
            revenue,
            degradation_eur,
            planned_value,
        })
    }

    pub fn net_revenue(&self) -> f64 {
        self.revenue - self.degradation_eur
    }

    /// Same actions settled against other prices.
    pub fn reprice(&self, realized: &[f64]) -> Result<Schedule> {
        if realized.len() != self.actions.len() {
            return Err(Error::LengthMismatch {
                left: realized.len(),
                right: self.actions.len(),
            });
        }
        let dt = self.timeline.dt_hours();
        let mut s = self.clone();
        s.realized = realized.to_vec();
        s.revenue = slot_revenues(&s.actions, realized, dt).iter().sum();
        Ok(s)
    }

    pub fn to_table(&self) -> Table {
        let dt = self.timeline.dt_hours();
        let rev = slot_revenues(&self.actions, &self.realized, dt);
        let mut t = Table::new(&["timestamp", "action_mw", "soc", "price_used", "realized_price", "revenue_eur"]);
        for i in 0..self.actions.len() {
            t.push(row![
                format_timestamp(self.timeline.slot_start(i)),
                self.actions[i],
                self.trajectory.soc[i],
                self.price_used[i],
                self.realized[i],
                rev[i],
            ]);
        }
        t
    }
}

pub fn slot_revenues(actions: &[f64], prices: &[f64], dt: f64) -> Vec<f64> {
    actions.iter().zip(prices).map(|(a, p)| p * a * dt).collect()
}

/// Optimal schedule for the forecast; realized prices are taken to be the
/// forecast itself (use [`Schedule::reprice`] to settle elsewhere).
pub fn solve_dp(problem: &DispatchProblem) -> Result<Schedule> {
    let f = &problem.forecast;
    if f.gaps.len() == f.len() {
        return Err(Error::EmptySeries("forecast has no values".into()));
    }
    if let Some(&g) = f.gaps.first() {
        return Err(Error::Gap {
            what: "forecast".into(),
            slot: g,
        });
    }
    let plan = problem.engine()?.solve(&f.values, problem.soc_init, problem.terminal)?;
    Schedule::build(
        f.timeline,
        plan.actions,
        plan.soc,
        f.values.clone(),
        f.values.clone(),
        plan.planned_value,
        &problem.spec,
    )
}
