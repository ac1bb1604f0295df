//! Battery physics, the shared state-of-charge path and degradation cost.

mod rainflow;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use rainflow::{rainflow_cycles, rainflow_from_points, turning_points, Cycle, CycleList};

use crate::error::{Error, Result};
use crate::market_data::csvio::format_timestamp;
use crate::market_data::Timeline;
use crate::report::{Table, fmt9};
use crate::row;

const SOC_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySpec {
    /// Power rating, MW.
    pub p_max: f64,
    /// Energy capacity, MWh.
    pub e_max: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    /// EUR per MWh of full-depth throughput.
    pub deg_cost: f64,
    pub dod_exponent: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec {
            p_max: 10.0,
            e_max: 10.0,
            eta_c: 0.95,
            eta_d: 0.95,
            deg_cost: 4.0,
            dod_exponent: 1.5,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("battery: {m}")));
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return bad("p_max must be > 0");
        }
        if !(self.e_max > 0.0 && self.e_max.is_finite()) {
            return bad("e_max must be > 0");
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0) || !(self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return bad("efficiencies must lie in (0, 1]");
        }
        if !(self.deg_cost >= 0.0) {
            return bad("deg_cost must be >= 0");
        }
        if !(self.dod_exponent >= 1.0) {
            return bad("dod_exponent must be >= 1");
        }
        Ok(())
    }

    pub fn eta_rt(&self) -> f64 {
        self.eta_c * self.eta_d
    }

    /// Same cell chemistry with a different power rating.
    pub fn with_power(&self, p_max: f64) -> Self {
        BatterySpec { p_max, ..*self }
    }
}

/// State of charge after holding `delta` MW (positive = discharge) for `dt` hours.
pub fn apply_action(soc: f64, delta: f64, dt: f64, spec: &BatterySpec) -> Result<f64> {
    if delta.abs() > spec.p_max * (1.0 + 1e-12) {
        return Err(Error::InfeasibleAction(format!(
            "|delta| = {} exceeds p_max = {}",
            delta.abs(),
            spec.p_max
        )));
    }
    let next = soc_step(soc, delta, dt, spec);
    if next < -SOC_EPS {
        return Err(Error::InfeasibleAction(format!("soc {next} below 0")));
    }
    if next > 1.0 + SOC_EPS {
        return Err(Error::InfeasibleAction(format!("soc {next} above 1")));
    }
    Ok(next.clamp(0.0, 1.0))
}

/// Unchecked transition.
#[inline]
pub fn soc_step(soc: f64, delta: f64, dt: f64, spec: &BatterySpec) -> f64 {
    if delta > 0.0 {
        soc - delta * dt / (spec.eta_d * spec.e_max)
    } else {
        soc + (-delta) * dt * spec.eta_c / spec.e_max
    }
}

/// Energy exchanged with the grid, MWh (positive = delivered to the grid).
pub fn grid_energy(delta: f64, dt: f64) -> f64 {
    delta * dt
}

/// State of charge at each slot boundary (`timeline.len + 1` values).
#[derive(Debug, Clone, PartialEq)]
pub struct SocTrajectory {
    pub timeline: Timeline,
    pub soc: Vec<f64>,
}

impl SocTrajectory {
    pub fn new(timeline: Timeline, soc: Vec<f64>) -> Result<Self> {
        if soc.len() != timeline.len + 1 {
            return Err(Error::LengthMismatch {
                left: soc.len(),
                right: timeline.len + 1,
            });
        }
        if let Some(s) = soc.iter().find(|s| !(-SOC_EPS..=1.0 + SOC_EPS).contains(*s)) {
            return Err(Error::Domain(format!("soc {s} outside [0, 1]")));
        }
        Ok(SocTrajectory { timeline, soc })
    }

    /// Trajectory generated by `actions` from `soc0`.
    pub fn from_actions(timeline: Timeline, soc0: f64, actions: &[f64], spec: &BatterySpec) -> Result<Self> {
        let dt = timeline.dt_hours();
        let mut soc = Vec::with_capacity(actions.len() + 1);
        soc.push(soc0);
        let mut s = soc0;
        for &a in actions {
            s = apply_action(s, a, dt, spec)?;
            soc.push(s);
        }
        Self::new(timeline, soc)
    }

    /// Every step reachable with at most `p_max` at the given efficiencies.
    pub fn is_power_feasible(&self, spec: &BatterySpec) -> bool {
        let dt = self.timeline.dt_hours();
        let up = spec.p_max * dt * spec.eta_c / spec.e_max;
        let down = spec.p_max * dt / (spec.eta_d * spec.e_max);
        self.soc.windows(2).all(|w| {
            let d = w[1] - w[0];
            d <= up + 1e-9 && -d <= down + 1e-9
        })
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.soc.iter().all(|&s| s >= lo - SOC_EPS && s <= hi + SOC_EPS)
    }

    pub fn days(&self) -> f64 {
        self.timeline.total_hours() / 24.0
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["timestamp", "soc"]);
        for (i, &s) in self.soc.iter().enumerate() {
            t.push(row![format_timestamp(self.timeline.slot_start(i)), s]);
        }
        t
    }
}

/// Σ weight · deg_cost · e_max · depth^dod_exponent, EUR.
pub fn degradation_cost(cycles: &CycleList, spec: &BatterySpec) -> f64 {
    cycles
        .iter()
        .map(|c| c.weight * spec.deg_cost * spec.e_max * c.depth.powf(spec.dod_exponent))
        .sum()
}

/// Discharged energy in capacity units per day.
pub fn equivalent_cycles(traj: &SocTrajectory) -> f64 {
    let days = traj.days();
    if days <= 0.0 {
        return 0.0;
    }
    let discharged: f64 = traj.soc.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum();
    discharged / days
}

pub fn write_cycle_report<W: Write>(cycles: &CycleList, spec: &BatterySpec, w: W) -> Result<()> {
    let mut t = Table::new(&["depth", "weight", "cost_eur"]);
    for c in cycles {
        let cost = c.weight * spec.deg_cost * spec.e_max * c.depth.powf(spec.dod_exponent);
        t.push(row![c.depth, fmt9(c.weight), cost]);
    }
    t.write(w)
}
